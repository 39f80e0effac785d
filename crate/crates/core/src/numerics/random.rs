//! Seeded sampling. Every stream is a ChaCha8 generator keyed by a 64-bit
//! seed, and child seeds are derived by hashing so independent tasks never
//! share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{ComplexMatrix, ComplexVector, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a path of indices under `base`.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &x| splitmix64(acc ^ splitmix64(x.wrapping_add(0xA5A5))))
}

/// Standard complex Gaussian: real and imaginary parts independent N(0, 1).
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

pub fn gaussian_vector<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> ComplexVector {
    (0..len).map(|_| complex_normal(rng)).collect()
}

/// `rows × cols` matrix of i.i.d. standard complex Gaussians keyed by `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = rng_from_seed(seed);
    gaussian_matrix_from(&mut rng, rows, cols)
}

pub fn gaussian_matrix_from<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}
