//! Dense complex linear algebra for desk-scale problems: SVD, kernels,
//! numeric rank, QR, the DFT matrix and seeded Gaussian sampling.

mod matrix;
mod qr;
mod random;
mod svd;

use std::f64::consts::PI;

pub use matrix::{dot, inner, norm2, ComplexMatrix, ComplexVector, C64};
pub(crate) use matrix::ZERO;
#[cfg(test)]
pub(crate) use matrix::ONE;
pub use qr::qr_thin;
pub use random::{
    complex_normal, derive_seed, gaussian_matrix, gaussian_matrix_from, gaussian_vector, rng_from_seed,
    SeededRng,
};
pub use svd::{kernel_basis, lstsq, numeric_rank, singular_values, svd, truncate_rank, Svd};
pub(crate) use svd::jacobi;

/// Unitary DFT matrix with entry `(k, l) = m^{-1/2} · exp(2πi·k·l/m)` for
/// `k, l = 1..=m` (1-based, so row/column `m` is the all-ones direction).
pub fn dft_matrix(m: usize) -> ComplexMatrix {
    assert!(m >= 1, "dft_matrix needs m >= 1");
    let scale = 1.0 / (m as f64).sqrt();
    ComplexMatrix::from_fn(m, m, |i, j| {
        let k = (i + 1) as u64;
        let l = (j + 1) as u64;
        // Reduce k·l mod m before scaling the angle to keep it small.
        let angle = 2.0 * PI * ((k * l) % m as u64) as f64 / m as f64;
        C64::from_polar(scale, angle)
    })
}
