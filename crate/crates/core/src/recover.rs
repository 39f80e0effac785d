//! Blind recovery of a sparse rank-one pair from its lifted measurements, by
//! exhaustive support enumeration, and the empirical strong-identifiability
//! rate built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::orbit_distance;
use crate::error::{Error, Result};
use crate::lifting::MeasurementMap;
use crate::models::{binomial, enumerate_supports, SparseRankOnePoint, SupportPattern};
use crate::numerics::{
    derive_seed, gaussian_vector, lstsq, norm2, rng_from_seed, svd, ComplexMatrix, ComplexVector, C64, ZERO,
};
use crate::Tolerances;

/// Largest number of support pairs `C(n₁,s₁)·C(n₂,s₂)` searched.
pub const SUPPORT_PAIR_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub best: SparseRankOnePoint,
    /// `‖M(embed(best)) − z‖₂`.
    pub residual: f64,
    /// Smallest residual among candidates at orbit distance above the orbit
    /// radius from `best` (infinite if there is none).
    pub runner_up_residual: f64,
    /// `runner_up_residual − residual`.
    pub ambiguity_gap: f64,
}

#[derive(Debug, Clone)]
pub struct RecoverOptions {
    /// Extra random starts inside the winning support pair.
    pub restarts: usize,
    /// Alternating least-squares sweeps per start.
    pub max_sweeps: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        RecoverOptions { restarts: 5, max_sweeps: 200, seed: 0, tolerances: Tolerances::default() }
    }
}

/// The columns of the stacked coefficient matrix belonging to `A × B`, in
/// row-major order of the block.
struct Block<'a> {
    map: &'a MeasurementMap,
    a: &'a SupportPattern,
    b: &'a SupportPattern,
    cols: ComplexMatrix,
}

impl<'a> Block<'a> {
    fn new(map: &'a MeasurementMap, a: &'a SupportPattern, b: &'a SupportPattern) -> Self {
        let n2 = map.n2();
        let s2 = b.size();
        let stacked = map.stacked();
        let cols = ComplexMatrix::from_fn(map.m(), a.size() * s2, |i, k| {
            stacked[(i, a.indices()[k / s2] * n2 + b.indices()[k % s2])]
        });
        Block { map, a, b, cols }
    }

    /// `∂/∂u` at fixed `v`: column `a` is `Σ_b v_b L[:, (a, b)]`.
    fn left(&self, v: &[C64]) -> ComplexMatrix {
        let s2 = self.b.size();
        ComplexMatrix::from_fn(self.cols.rows(), self.a.size(), |i, a| {
            (0..s2).map(|b| v[b] * self.cols[(i, a * s2 + b)]).sum()
        })
    }

    fn right(&self, u: &[C64]) -> ComplexMatrix {
        let s2 = self.b.size();
        ComplexMatrix::from_fn(self.cols.rows(), s2, |i, b| {
            (0..self.a.size()).map(|a| u[a] * self.cols[(i, a * s2 + b)]).sum()
        })
    }

    fn residual(&self, u: &[C64], v: &[C64], z: &[C64]) -> f64 {
        let fit = self.left(v).matvec(u).expect("block shape");
        fit.iter().zip(z).map(|(f, y)| (f - y).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rank-one truncation of the minimum-norm unconstrained fit.
    fn initial(&self, z: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        let (s1, s2) = (self.a.size(), self.b.size());
        let flat = lstsq(&self.cols, z, 1e-12)?;
        let dec = svd(&ComplexMatrix::new(s1, s2, flat)?)?;
        let u = (0..s1).map(|i| dec.u[(i, 0)] * dec.s[0]).collect();
        let v = (0..s2).map(|j| dec.v[(j, 0)].conj()).collect();
        Ok((u, v))
    }

    /// Alternating least squares until the residual changes by less than
    /// `1e-12` relatively, then Gauss-Newton on both factors jointly.
    fn refine(&self, mut u: Vec<C64>, mut v: Vec<C64>, z: &[C64], max_sweeps: usize) -> Result<Candidate> {
        let zn = norm2(z);
        let mut r = self.residual(&u, &v, z);
        for _ in 0..max_sweeps {
            if r <= 1e-15 * zn {
                break;
            }
            u = lstsq(&self.left(&v), z, 1e-13)?;
            v = lstsq(&self.right(&u), z, 1e-13)?;
            balance(&mut u, &mut v);
            let next = self.residual(&u, &v, z);
            let done = (r - next).abs() <= 1e-12 * r;
            r = next;
            if done {
                break;
            }
        }
        for _ in 0..20 {
            if r <= 1e-15 * zn {
                break;
            }
            let jac = hstack(&self.left(&v), &self.right(&u));
            let fit = self.left(&v).matvec(&u)?;
            let rhs: Vec<C64> = z.iter().zip(fit.iter()).map(|(y, f)| y - f).collect();
            let step = lstsq(&jac, &rhs, 1e-13)?;
            let s1 = u.len();
            let nu: Vec<C64> = u.iter().zip(&step[..s1]).map(|(x, d)| x + d).collect();
            let nv: Vec<C64> = v.iter().zip(&step[s1..]).map(|(x, d)| x + d).collect();
            let next = self.residual(&nu, &nv, z);
            if next.is_nan() || next >= r {
                break;
            }
            (u, v, r) = (nu, nv, next);
            balance(&mut u, &mut v);
        }
        Ok(Candidate {
            point: SparseRankOnePoint::new(self.a.clone(), self.b.clone(), u.into(), v.into())?,
            residual: r,
        })
    }

    fn n(&self) -> (usize, usize) {
        (self.map.n1(), self.map.n2())
    }
}

fn balance(u: &mut [C64], v: &mut [C64]) {
    let (nu, nv) = (norm2(u), norm2(v));
    if nu > 0.0 && nv > 0.0 {
        let lam = (nv / nu).sqrt();
        u.iter_mut().for_each(|z| *z *= lam);
        v.iter_mut().for_each(|z| *z /= lam);
    }
}

struct Candidate {
    point: SparseRankOnePoint,
    residual: f64,
}

impl Candidate {
    fn is_nonzero(&self) -> bool {
        norm2(&self.point.u) > 0.0 && norm2(&self.point.v) > 0.0
    }
}

fn hstack(left: &ComplexMatrix, right: &ComplexMatrix) -> ComplexMatrix {
    let c = left.cols();
    ComplexMatrix::from_fn(left.rows(), c + right.cols(), |i, j| if j < c { left[(i, j)] } else { right[(i, j - c)] })
}

/// [`blind_recover_with`] under default options.
pub fn blind_recover(map: &MeasurementMap, z: &[C64], s1: usize, s2: usize) -> Result<RecoveryResult> {
    blind_recover_with(map, z, s1, s2, &RecoverOptions::default())
}

/// Fits `z ≈ M(P_A u (P_B v)ᵗ)` over every support pair `(A, B)` and returns
/// the best fit, the best orbit-distinct competitor and their gap.
pub fn blind_recover_with(
    map: &MeasurementMap,
    z: &[C64],
    s1: usize,
    s2: usize,
    opts: &RecoverOptions,
) -> Result<RecoveryResult> {
    let (n1, n2) = (map.n1(), map.n2());
    if z.len() != map.m() {
        return Err(Error::length("blind_recover (z)", map.m(), z.len()));
    }
    if norm2(z) == 0.0 {
        return Err(Error::Precondition("zero measurement vector".into()));
    }
    if !(1..=n1).contains(&s1) || !(1..=n2).contains(&s2) {
        return Err(Error::Precondition(format!("sparsities ({s1}, {s2}) out of range for ({n1}, {n2})")));
    }
    let pairs_total = binomial(n1, s1).saturating_mul(binomial(n2, s2));
    if pairs_total > SUPPORT_PAIR_LIMIT {
        return Err(Error::Precondition(format!(
            "{pairs_total} support pairs exceed the exhaustive limit {SUPPORT_PAIR_LIMIT}"
        )));
    }
    let rows = enumerate_supports(n1, s1)?;
    let cols = enumerate_supports(n2, s2)?;
    let pairs: Vec<(&SupportPattern, &SupportPattern)> =
        rows.iter().flat_map(|a| cols.iter().map(move |b| (a, b))).collect();

    let mut candidates: Vec<Candidate> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let block = Block::new(map, a, b);
            let (u, v) = block.initial(z)?;
            block.refine(u, v, z, opts.max_sweeps)
        })
        .collect::<Result<Vec<_>>>()?;

    // Enumeration order is lexicographic in (A, B), so the first minimum
    // realizes the (residual, support) tie-break.
    let winner = first_min(&candidates).ok_or_else(|| Error::Degenerate("every fit has a zero factor".into()))?;
    let (a, b) = (candidates[winner].point.a.clone(), candidates[winner].point.b.clone());
    let block = Block::new(map, &a, &b);
    let extra = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(opts.seed, &[winner as u64, r as u64]));
            let u = gaussian_vector(&mut rng, a.size()).into_inner();
            let v = gaussian_vector(&mut rng, b.size()).into_inner();
            block.refine(u, v, z, opts.max_sweeps)
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(block.n(), (n1, n2));
    candidates.extend(extra);

    let best = first_min(&candidates).expect("winner is a candidate");
    let (bu, bv) = candidates[best].point.factors();
    let mut runner_up = f64::INFINITY;
    for c in candidates.iter().filter(|c| c.is_nonzero()) {
        let (u, v) = c.point.factors();
        if orbit_distance(&bu, &bv, &u, &v)? > opts.tolerances.orbit_radius {
            runner_up = runner_up.min(c.residual);
        }
    }
    let residual = candidates[best].residual;
    Ok(RecoveryResult {
        best: candidates.swap_remove(best).point,
        residual,
        runner_up_residual: runner_up,
        ambiguity_gap: runner_up - residual,
    })
}

fn first_min(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.is_nonzero() && best.is_none_or(|b| c.residual < candidates[b].residual) {
            best = Some(i);
        }
    }
    best
}

/// Whether one recovery counts as exact and unambiguous.
pub fn recovery_succeeded(result: &RecoveryResult, truth: &SparseRankOnePoint, tol: &Tolerances) -> Result<bool> {
    let (u, v) = result.best.factors();
    let (u0, v0) = truth.factors();
    Ok(orbit_distance(&u, &v, &u0, &v0)? <= tol.recovery_orbit_tol && result.ambiguity_gap > tol.ambiguity_gap_tol)
}

/// Fraction of `trials` random `(s₁, s₂)`-sparse pairs recovered exactly and
/// unambiguously from their noiseless measurements.
pub fn empirical_strong_identifiability(
    map: &MeasurementMap,
    s1: usize,
    s2: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    empirical_strong_identifiability_with(map, s1, s2, trials, seed, &Tolerances::default())
}

/// [`empirical_strong_identifiability`] under explicit tolerances.
pub fn empirical_strong_identifiability_with(
    map: &MeasurementMap,
    s1: usize,
    s2: usize,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be >= 1".into()));
    }
    let (n1, n2) = (map.n1(), map.n2());
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &[t]));
            let truth = SparseRankOnePoint::random(&mut rng, n1, n2, s1, s2);
            let z = map.apply_linear(&truth.embed())?;
            if z.norm() == 0.0 {
                return Ok(false);
            }
            let opts = RecoverOptions { seed: derive_seed(seed, &[t, 1]), tolerances: *tol, ..Default::default() };
            let result = blind_recover_with(map, &z, s1, s2, &opts)?;
            recovery_succeeded(&result, &truth, tol)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(outcomes.iter().filter(|&&ok| ok).count() as f64 / trials as f64)
}

/// Measurements `M(u₁v₁ᵗ) = M(u₂v₂ᵗ)` of two orbit-distinct pairs, read off a
/// kernel element `u₁v₁ᵗ − u₂v₂ᵗ`.
pub fn colliding_measurements(map: &MeasurementMap, x: &SparseRankOnePoint) -> Result<ComplexVector> {
    let z = map.apply_linear(&x.embed())?;
    if z.iter().all(|w| *w == ZERO) {
        return Err(Error::Degenerate("first point measures to zero".into()));
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{estimate_stability_constant, SearchOptions, Verdict};
    use crate::convolution::{deconv_map, haar_subspace};
    use crate::lifting::random_dense_map;
    use crate::models::injectivity_threshold;

    #[test]
    fn exact_recovery_at_threshold() {
        let m = injectivity_threshold(4, 4, 2, 2).unwrap();
        let map = random_dense_map(4, 4, m, 17).unwrap();
        let mut rng = rng_from_seed(5);
        let truth = SparseRankOnePoint::random(&mut rng, 4, 4, 2, 2);
        let z = map.apply_linear(&truth.embed()).unwrap();
        let res = blind_recover(&map, &z, 2, 2).unwrap();
        let (u, v) = res.best.factors();
        let (u0, v0) = truth.factors();
        assert!(orbit_distance(&u, &v, &u0, &v0).unwrap() <= 1e-8);
        assert!(res.residual <= 1e-10 * z.norm());
        assert!(res.ambiguity_gap > 1e-3);
        assert!(res.residual <= res.runner_up_residual);
    }

    #[test]
    fn scaling_the_data() {
        let map = random_dense_map(3, 3, 6, 2).unwrap();
        let mut rng = rng_from_seed(6);
        let truth = SparseRankOnePoint::random(&mut rng, 3, 3, 2, 2);
        let z = map.apply_linear(&truth.embed()).unwrap();
        let lam = C64::new(-1.5, 2.0);
        let a = blind_recover(&map, &z, 2, 2).unwrap();
        let b = blind_recover(&map, &z.scaled(lam), 2, 2).unwrap();
        let (ua, va) = a.best.factors();
        let (ub, vb) = b.best.factors();
        // Same orbit up to the unimodular factor of λ.
        let lam_unit = lam / lam.norm();
        let d = orbit_distance(&ua.scaled(lam_unit), &va, &ub, &vb).unwrap();
        assert!(d < 1e-8, "{d}");
        assert!(b.residual <= 1e-10 * lam.norm() * z.norm());
    }

    #[test]
    fn zero_signal_rejected() {
        let map = random_dense_map(3, 3, 6, 2).unwrap();
        assert!(matches!(blind_recover(&map, &ComplexVector::zeros(6), 2, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn too_many_pairs_refused() {
        let map = random_dense_map(20, 20, 2, 1).unwrap();
        let z = ComplexVector::from_real(&[1.0, 1.0]);
        assert!(matches!(blind_recover(&map, &z, 10, 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn vectorization_rate_is_one() {
        let map = MeasurementMap::vectorization(3, 3);
        assert_eq!(empirical_strong_identifiability(&map, 2, 2, 10, 3).unwrap(), 1.0);
    }

    #[test]
    fn haar_subspaces_at_equality() {
        let e = haar_subspace(8, 3, 1).unwrap();
        let d = haar_subspace(8, 3, 2).unwrap();
        let map = deconv_map(&e, &d).unwrap();
        assert_eq!(empirical_strong_identifiability(&map, 3, 3, 50, 7).unwrap(), 1.0);
    }

    #[test]
    fn collision_below_threshold_is_ambiguous() {
        let map = random_dense_map(3, 3, 5, 3).unwrap();
        let cert = estimate_stability_constant(&map, 2, 2, &SearchOptions::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::CounterexampleFound);
        let point = cert.point.unwrap();
        let z = colliding_measurements(&map, &point.x).unwrap();
        let res = blind_recover(&map, &z, 2, 2).unwrap();
        assert!(res.ambiguity_gap < 1e-6, "gap {}", res.ambiguity_gap);
    }
}
