use crate::error::{Error, Result};

use super::matrix::{norm2, ComplexMatrix, C64, ONE, ZERO};

/// Thin Householder QR of a tall matrix: `A = Q R` with `Q` `m × k`
/// orthonormal and `R` `k × k` upper triangular.
///
/// The diagonal of `R` carries whatever phase the reflectors produce; callers
/// that need a canonical factorization must normalize it themselves.
pub fn qr_thin(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (m, k) = a.shape();
    if k > m {
        return Err(Error::Precondition(format!("qr_thin needs rows >= cols, got {m}x{k}")));
    }
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(k);
    for j in 0..k {
        let x: Vec<C64> = (j..m).map(|i| r[(i, j)]).collect();
        let nx = norm2(&x);
        let mut v = x.clone();
        if nx == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        // v = x + phase·‖x‖·e₁ avoids cancellation; H x = −phase·‖x‖·e₁.
        v[0] += phase * nx;
        let nv = norm2(&v);
        for z in v.iter_mut() {
            *z /= nv;
        }
        apply_reflector(&mut r, &v, j, j);
        reflectors.push(v);
    }

    let mut q = ComplexMatrix::from_fn(m, k, |i, j| if i == j { ONE } else { ZERO });
    for (j, v) in reflectors.iter().enumerate().rev() {
        if !v.is_empty() {
            apply_reflector(&mut q, v, j, 0);
        }
    }
    let r = ComplexMatrix::from_fn(k, k, |i, j| if i <= j { r[(i, j)] } else { ZERO });
    Ok((q, r))
}

/// Applies `I − 2 v v*` to rows `offset..` of the columns `col_start..` of `a`.
fn apply_reflector(a: &mut ComplexMatrix, v: &[C64], offset: usize, col_start: usize) {
    for c in col_start..a.cols() {
        let mut proj = ZERO;
        for (t, vt) in v.iter().enumerate() {
            proj += vt.conj() * a[(offset + t, c)];
        }
        proj *= 2.0;
        for (t, vt) in v.iter().enumerate() {
            a[(offset + t, c)] -= proj * vt;
        }
    }
}
