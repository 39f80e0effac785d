//! One-sided (Hestenes) Jacobi SVD for small dense complex matrices.
//!
//! The right factor is always accumulated as a full `n × n` unitary, so the
//! trailing columns span the numerical null space even for wide inputs.

use crate::error::{Error, Result};

use super::matrix::{inner, norm2, ComplexMatrix, C64, ZERO};

const MAX_SWEEPS: usize = 80;
/// Columns are treated as converged once their cosine drops below this.
const ORTHO_TOL: f64 = 4.0 * f64::EPSILON;

/// Thin singular value decomposition `A = U · diag(s) · V*`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: ComplexMatrix,
    /// Singular values, descending, length `k`.
    pub s: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: ComplexMatrix,
}

/// Jacobi output before thinning: `A · V = W` with mutually orthogonal
/// columns of `W`, sorted by descending norm.
pub(crate) struct FullJacobi {
    /// Columns of `A·V` (each of length `rows`), descending norm.
    pub w: Vec<Vec<C64>>,
    /// All `cols` column norms, descending.
    pub sigma: Vec<f64>,
    /// Columns of the full unitary `V` (each of length `cols`), same order.
    pub v: Vec<Vec<C64>>,
}

pub(crate) fn jacobi(a: &ComplexMatrix) -> Result<FullJacobi> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::Precondition("svd of an empty matrix".into()));
    }
    if !a.as_slice().iter().all(|z| z.is_finite()) {
        return Err(Error::InvalidData("svd of a matrix with non-finite entries".into()));
    }
    let mut w = a.columns();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut col = vec![ZERO; n];
            col[j] = C64::new(1.0, 0.0);
            col
        })
        .collect();

    let scale = a.frobenius_norm();
    // Columns below this are numerically zero and are left alone.
    let negligible = (1e-3 * f64::EPSILON * scale).powi(2);
    let mut sq: Vec<f64> = w.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();

    let mut converged = scale == 0.0;
    let mut last_off = 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        last_off = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let alpha = sq[p];
                let beta = sq[q];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = inner(&w[p], &w[q]);
                let g = gamma.norm();
                let cosine = g / (alpha * beta).sqrt();
                if cosine > last_off {
                    last_off = cosine;
                }
                if cosine <= ORTHO_TOL {
                    continue;
                }
                rotated = true;
                let phase_conj = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s, phase_conj);
                rotate(&mut v, p, q, c, s, phase_conj);
                sq[p] = w[p].iter().map(|z| z.norm_sqr()).sum();
                sq[q] = w[q].iter().map(|z| z.norm_sqr()).sum();
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { sweeps: MAX_SWEEPS, residual: last_off });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    Ok(FullJacobi {
        sigma: order.iter().map(|&j| norms[j]).collect(),
        w: order.iter().map(|&j| std::mem::take(&mut w[j])).collect(),
        v: order.iter().map(|&j| std::mem::take(&mut v[j])).collect(),
    })
}

/// `(x_p, x_q) ← (c·x_p − s·φ̄·x_q, s·x_p + c·φ̄·x_q)`.
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase_conj: C64) {
    let (head, tail) = cols.split_at_mut(q);
    let xp = &mut head[p];
    let xq = &mut tail[0];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let bq = phase_conj * *b;
        let ap = *a;
        *a = ap * c - bq * s;
        *b = ap * s + bq * c;
    }
}

/// Thin SVD. Fails only if the Jacobi sweeps hit their cap.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    let full = jacobi(a)?;
    let k = m.min(n);
    let smax = full.sigma[0];
    let floor = 1e-3 * f64::EPSILON * a.frobenius_norm();

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut pending = Vec::new();
    for j in 0..k {
        if full.sigma[j] > floor && smax > 0.0 {
            let inv = 1.0 / full.sigma[j];
            u_cols.push(full.w[j].iter().map(|z| z * inv).collect());
        } else {
            pending.push(j);
            u_cols.push(vec![ZERO; m]);
        }
    }
    if !pending.is_empty() {
        complete_orthonormal(&mut u_cols, &pending);
    }
    let s = full.sigma[..k].to_vec();
    let v_cols = &full.v[..k];
    Ok(Svd {
        u: ComplexMatrix::from_columns(m, &u_cols),
        s,
        v: ComplexMatrix::from_columns(n, v_cols),
    })
}

/// Fills the columns listed in `pending` with unit vectors orthogonal to all
/// other columns. Each is the standard basis vector with the largest residual
/// against the current set (at least `1/√dim` while the set is incomplete).
pub(crate) fn complete_orthonormal(cols: &mut [Vec<C64>], pending: &[usize]) {
    let dim = cols.first().map_or(0, |c| c.len());
    let mut filled: Vec<usize> = (0..cols.len()).filter(|j| !pending.contains(j)).collect();
    let residual = |cols: &[Vec<C64>], filled: &[usize], i: usize| {
        let mut x = vec![ZERO; dim];
        x[i] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for &f in filled {
                let proj = inner(&cols[f], &x);
                for (xi, ci) in x.iter_mut().zip(&cols[f]) {
                    *xi -= proj * ci;
                }
            }
        }
        x
    };
    for &slot in pending {
        let (x, nx) = (0..dim)
            .map(|i| {
                let x = residual(cols, &filled, i);
                let n = norm2(&x);
                (x, n)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty columns");
        assert!(nx > 0.0, "cannot complete an orthonormal set");
        cols[slot] = x.into_iter().map(|z| z / nx).collect();
        filled.push(slot);
    }
}

/// All `cols(A)` singular values in descending order (the trailing
/// `cols − rows` are numerically zero for wide inputs).
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let mut s = jacobi(a)?.sigma;
    s.truncate(a.rows().min(a.cols()));
    Ok(s)
}

/// Number of singular values strictly above `tol · max(1, σ_max)`.
pub fn numeric_rank(a: &ComplexMatrix, tol: f64) -> Result<usize> {
    if a.is_empty() {
        return Ok(0);
    }
    let s = singular_values(a)?;
    let cutoff = tol * s[0].max(1.0);
    Ok(s.iter().filter(|&&x| x > cutoff).count())
}

/// Orthonormal basis (as columns) of the numerical null space of `a`.
///
/// A right singular vector belongs to the basis when its singular value is
/// at most `tol · max(1, σ_max)`, so the column count is
/// `cols(a) − numeric_rank(a, tol)`.
pub fn kernel_basis(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if tol < 0.0 {
        return Err(Error::Precondition(format!("negative tolerance {tol}")));
    }
    let n = a.cols();
    let full = jacobi(a)?;
    let cutoff = tol * full.sigma[0].max(1.0);
    // Wide inputs: σ_j for j ≥ rows is exactly zero in exact arithmetic.
    let rank = full
        .sigma
        .iter()
        .take(a.rows().min(n))
        .filter(|&&x| x > cutoff)
        .count();
    Ok(ComplexMatrix::from_columns(n, &full.v[rank..]))
}

/// Minimum-norm least-squares solution of `A x ≈ b`, discarding singular
/// values below `rcond · σ_max`.
pub fn lstsq(a: &ComplexMatrix, b: &[C64], rcond: f64) -> Result<Vec<C64>> {
    if a.rows() != b.len() {
        return Err(Error::length("lstsq", a.rows(), b.len()));
    }
    let dec = svd(a)?;
    let cutoff = rcond * dec.s[0];
    let mut x = vec![ZERO; a.cols()];
    for (j, &sj) in dec.s.iter().enumerate() {
        if sj <= cutoff || sj == 0.0 {
            continue;
        }
        let mut coef = ZERO;
        for i in 0..a.rows() {
            coef += dec.u[(i, j)].conj() * b[i];
        }
        coef /= sj;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += coef * dec.v[(r, j)];
        }
    }
    Ok(x)
}

/// Best rank-`r` approximation via truncated SVD.
pub fn truncate_rank(a: &ComplexMatrix, r: usize) -> Result<ComplexMatrix> {
    let dec = svd(a)?;
    let mut out = ComplexMatrix::zeros(a.rows(), a.cols());
    for j in 0..r.min(dec.s.len()) {
        let sj = dec.s[j];
        for i in 0..a.rows() {
            let ui = dec.u[(i, j)] * sj;
            for c in 0..a.cols() {
                out[(i, c)] += ui * dec.v[(c, j)].conj();
            }
        }
    }
    Ok(out)
}
