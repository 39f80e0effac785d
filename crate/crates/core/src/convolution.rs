//! Circular and standard convolution, the Fourier diagonalization of the
//! circular convolution, deconvolution measurement maps and Haar subspace
//! sampling.
//!
//! Vectors are stored 0-based, but the convolution index rule is the 1-based
//! `(v ⊛ w)_i = Σ_j v_j w_{[(i−j−1) mod m]+1}`, evaluated literally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{from_structured, MeasurementMap, StructuredRows};
use crate::numerics::{
    dft_matrix, gaussian_matrix, numeric_rank, qr_thin, ComplexMatrix, ComplexVector, C64, ZERO,
};

/// Circular convolution by direct summation.
pub fn circ_conv(v: &[C64], w: &[C64]) -> Result<ComplexVector> {
    if v.len() != w.len() {
        return Err(Error::length("circ_conv", v.len(), w.len()));
    }
    let m = v.len() as i64;
    Ok((1..=m)
        .map(|i| {
            (1..=m)
                .map(|j| {
                    let l = (i - j - 1).rem_euclid(m) + 1;
                    v[(j - 1) as usize] * w[(l - 1) as usize]
                })
                .sum()
        })
        .collect())
}

/// Circular convolution through the DFT: `√m · F*((Fv) ⊙ (Fw))`.
pub fn circ_conv_fft(v: &[C64], w: &[C64]) -> Result<ComplexVector> {
    if v.len() != w.len() {
        return Err(Error::length("circ_conv_fft", v.len(), w.len()));
    }
    if v.is_empty() {
        return Ok(ComplexVector::zeros(0));
    }
    let f = dft_matrix(v.len());
    let fv = f.matvec(v)?;
    let fw = f.matvec(w)?;
    let product: Vec<C64> = fv.iter().zip(fw.iter()).map(|(a, b)| a * b).collect();
    Ok(fourier_synthesis(&f, &product))
}

/// `√m · F* y`, the map taking deconvolution measurements back to the
/// convolution.
pub fn fourier_synthesis(f: &ComplexMatrix, y: &[C64]) -> ComplexVector {
    let m = f.rows();
    let scale = (m as f64).sqrt();
    (0..m)
        .map(|i| (0..m).map(|k| f[(k, i)].conj() * y[k]).sum::<C64>() * scale)
        .collect()
}

/// A full-column-rank `m × k` basis of a subspace of `ℂ^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    columns: ComplexMatrix,
}

impl SubspaceBasis {
    pub fn new(columns: ComplexMatrix, rank_tol: f64) -> Result<Self> {
        let k = columns.cols();
        if k == 0 || k > columns.rows() {
            return Err(Error::Precondition(format!(
                "basis must have 1 <= k <= m columns, got {}x{k}",
                columns.rows()
            )));
        }
        let r = numeric_rank(&columns, rank_tol)?;
        if r != k {
            return Err(Error::Precondition(format!("basis has rank {r} < {k}")));
        }
        Ok(SubspaceBasis { columns })
    }

    /// Gaussian basis (an element of `F(m, k)` with probability one).
    pub fn gaussian(m: usize, k: usize, seed: u64) -> Result<Self> {
        Self::new(gaussian_matrix(m, k, seed), crate::Tolerances::default().rank_tol)
    }

    pub fn ambient(&self) -> usize {
        self.columns.rows()
    }

    pub fn dim(&self) -> usize {
        self.columns.cols()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.columns
    }

    /// Orthogonal projection onto the span (columns must be orthonormal).
    pub fn projection(&self) -> ComplexMatrix {
        self.columns.matmul(&self.columns.adjoint()).expect("conformable")
    }

    /// `E x` for coefficients `x`.
    pub fn expand(&self, x: &[C64]) -> Result<ComplexVector> {
        self.columns.matvec(x)
    }
}

/// The lifted map of `(u, v) ↦ (F E u) ⊙ (F D v)` on `M(k, l)`: the structured
/// map with rows `Y = F E` and `Z = F D`. Applying `√m · F*` to its output
/// gives `(E u) ⊛ (D v)`.
pub fn deconv_map(e: &SubspaceBasis, d: &SubspaceBasis) -> Result<MeasurementMap> {
    if e.ambient() != d.ambient() {
        return Err(Error::length("deconv_map (ambient)", e.ambient(), d.ambient()));
    }
    let f = dft_matrix(e.ambient());
    let rows = StructuredRows::new(f.matmul(e.matrix())?, f.matmul(d.matrix())?)?;
    Ok(from_structured(&rows))
}

/// Zero-padding `ℂⁿ → ℂ^{2n−1}` under which standard (linear) convolution is
/// a re-indexed circular convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardConvEmbedding {
    n: usize,
}

pub fn standard_conv_embedding(n: usize) -> Result<StandardConvEmbedding> {
    if n == 0 {
        return Err(Error::Precondition("standard_conv_embedding needs n >= 1".into()));
    }
    Ok(StandardConvEmbedding { n })
}

impl StandardConvEmbedding {
    pub fn padded_len(&self) -> usize {
        2 * self.n - 1
    }

    pub fn pad(&self, u: &[C64]) -> Result<ComplexVector> {
        if u.len() != self.n {
            return Err(Error::length("pad", self.n, u.len()));
        }
        let mut out = ComplexVector::zeros(self.padded_len());
        out[..self.n].copy_from_slice(u);
        Ok(out)
    }

    /// Standard convolution `c_i = Σ_j u_j v_{i−(j−1)}`, `i = 1..2n−1`, read off
    /// the circular convolution of the padded inputs. With zero padding the
    /// circular sum collects index pairs with `j + l ≡ i (mod 2n−1)`, so
    /// `c_i` sits at circular position `i + 1` (wrapping `2n−1 → 1`).
    pub fn conv(&self, u: &[C64], v: &[C64]) -> Result<ComplexVector> {
        let len = self.padded_len();
        let circ = circ_conv(&self.pad(u)?, &self.pad(v)?)?;
        Ok((0..len).map(|i| circ[(i + 1) % len]).collect())
    }
}

/// Orthonormal basis of a Haar-distributed `k`-dimensional subspace of `ℂ^m`:
/// QR of a Gaussian `m × k` matrix, with each column of `Q` rotated by the
/// phase of the matching diagonal entry of `R` so that `R` has a positive
/// diagonal (the canonical, Haar-equivariant factorization).
pub fn haar_subspace(m: usize, k: usize, seed: u64) -> Result<SubspaceBasis> {
    if k == 0 || k > m {
        return Err(Error::Precondition(format!("haar_subspace needs 1 <= k <= m, got k = {k}, m = {m}")));
    }
    let (mut q, r) = qr_thin(&gaussian_matrix(m, k, seed))?;
    for j in 0..k {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    Ok(SubspaceBasis { columns: q })
}

/// Direct double sum for the standard convolution (test oracle and reference).
pub fn standard_conv_direct(u: &[C64], v: &[C64]) -> ComplexVector {
    let n = u.len() as i64;
    (1..2 * n)
        .map(|i| {
            (1..=n)
                .filter_map(|j| {
                    let l = i - (j - 1);
                    (1..=n).contains(&l).then(|| u[(j - 1) as usize] * v[(l - 1) as usize])
                })
                .fold(ZERO, |a, b| a + b)
        })
        .collect()
}
