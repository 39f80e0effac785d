//! Injectivity certification and refutation: stability-constant search over
//! the difference set, rank-2 kernel search, the explicit inversion of a
//! rank-one difference, the weak-identifiability test and the orbit metric.
//!
//! All searches minimize `‖M(ψ)‖₂` over unit-Frobenius `ψ` in a set that is
//! bilinear in two parameter blocks. With one block fixed, `ψ` ranges over a
//! linear space `span(b₁, …, b_p)`, and the block update solves
//! `min ‖S ψ‖ / ‖ψ‖` on that space exactly: orthonormalize the span, then take
//! the smallest right singular vector of `S` restricted to it. A few
//! Gauss-Newton steps on the joint parameters then polish near-zeros to
//! machine precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::MeasurementMap;
use crate::models::{
    difference_jacobian, enumerate_supports, psi, support_quadruples, DifferencePoint, SparseRankOnePoint,
    SupportPattern, SupportQuad, EXHAUSTIVE_QUADRUPLE_LIMIT,
};
use crate::numerics::{
    derive_seed, gaussian_vector, inner, jacobi, kernel_basis, lstsq, norm2, rng_from_seed, singular_values,
    svd, ComplexMatrix, ComplexVector, SeededRng, C64, ZERO,
};
use crate::Tolerances;

/// Outcome classes of a certification search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    LikelyInjective,
    CounterexampleFound,
    Inconclusive,
}

impl Verdict {
    pub fn classify(value: f64, tol: &Tolerances) -> Verdict {
        if value < tol.fail_tol {
            Verdict::CounterexampleFound
        } else if value > tol.pass_tol {
            Verdict::LikelyInjective
        } else {
            Verdict::Inconclusive
        }
    }
}

/// A competing factor pair `(u, v)` found by the weak-identifiability test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair {
    pub u: ComplexVector,
    pub v: ComplexVector,
    /// Orbit distance from the reference pair `(u₀, v₀)`.
    pub orbit_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    /// `‖M(witness)‖₂`.
    pub estimated_constant: f64,
    /// Arg-min found, with unit Frobenius norm.
    pub witness: ComplexMatrix,
    pub restarts_used: usize,
    pub verdict: Verdict,
    /// Parametrization of the witness as `X − Y` (stability search only).
    pub point: Option<DifferencePoint>,
    /// Competing pair (weak-identifiability test only).
    pub pair: Option<WitnessPair>,
}

/// Budget and tolerances for the nonconvex searches.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Random starts per support quadruple (or support pair).
    pub restarts: usize,
    /// Alternating sweeps per start.
    pub max_iters: usize,
    pub seed: u64,
    /// Cap on the number of support quadruples examined.
    pub quad_limit: usize,
    pub tolerances: Tolerances,
    /// Extra start evaluated before the random ones.
    pub warm_start: Option<DifferencePoint>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 2,
            max_iters: 200,
            seed: 0,
            quad_limit: EXHAUSTIVE_QUADRUPLE_LIMIT,
            tolerances: Tolerances::default(),
            warm_start: None,
        }
    }
}

/// `‖uvᵗ/‖uvᵗ‖_F − u′v′ᵗ/‖u′v′ᵗ‖_F‖_F`. Zero exactly on the scaling
/// orbit; at most 2. Summed entrywise: the `√(2 − 2 cos)` shortcut loses
/// half the digits near zero.
pub fn orbit_distance(u: &[C64], v: &[C64], u2: &[C64], v2: &[C64]) -> Result<f64> {
    if u.len() != u2.len() {
        return Err(Error::length("orbit_distance (u)", u.len(), u2.len()));
    }
    if v.len() != v2.len() {
        return Err(Error::length("orbit_distance (v)", v.len(), v2.len()));
    }
    let norms = [norm2(u), norm2(v), norm2(u2), norm2(v2)];
    if norms.contains(&0.0) {
        return Err(Error::Precondition("orbit_distance of a zero vector".into()));
    }
    let (p, q) = (1.0 / (norms[0] * norms[1]), 1.0 / (norms[2] * norms[3]));
    let mut sum = 0.0;
    for (a, c) in u.iter().zip(u2) {
        for (b, d) in v.iter().zip(v2) {
            sum += (a * b * p - c * d * q).norm_sqr();
        }
    }
    Ok(sum.sqrt())
}

/// A unit-norm set of matrices bilinear in two parameter blocks.
trait Bilinear {
    /// Flattened (row-major) current matrix.
    fn psi(&self) -> Vec<C64>;
    /// Spanning matrices of `ψ` as a linear function of block `k`, with the
    /// current coefficients in that basis.
    fn block(&self, k: usize) -> (Vec<Vec<C64>>, Vec<C64>);
    fn set_block(&mut self, k: usize, coeffs: &[C64]);
    fn params(&self) -> Vec<C64>;
    fn set_params(&mut self, p: &[C64]);
    /// `∂ vec(ψ) / ∂ params`.
    fn jacobian(&self) -> ComplexMatrix;
    /// Multiplies `ψ` by `f`.
    fn scale(&mut self, f: f64);
    /// Moves along the scaling orbits so factor norms agree.
    fn balance(&mut self);
}

fn residual_ratio(map: &MeasurementMap, psi: &[C64]) -> f64 {
    let n = norm2(psi);
    if n == 0.0 {
        return f64::INFINITY;
    }
    map.apply_flat(psi).norm() / n
}

/// Exact minimizer of `‖S ψ‖/‖ψ‖` over `ψ ∈ span(basis)`, expressed in the
/// basis. Coefficient directions invisible in `ψ` keep their previous values.
fn rayleigh_block(map: &MeasurementMap, basis: &[Vec<C64>], prev: &[C64]) -> Option<Vec<C64>> {
    let dim = basis.first()?.len();
    let bm = ComplexMatrix::from_columns(dim, basis);
    let full = jacobi(&bm).ok()?;
    let top = full.sigma[0];
    let r = full.sigma.iter().take_while(|&&s| s > 1e-10 * top).count();
    if r == 0 {
        return None;
    }
    let u_r: Vec<Vec<C64>> = (0..r).map(|j| full.w[j].iter().map(|z| z / full.sigma[j]).collect()).collect();
    let restricted = map.stacked().matmul(&ComplexMatrix::from_columns(dim, &u_r)).ok()?;
    let inner_svd = jacobi(&restricted).ok()?;
    let w = &inner_svd.v[r - 1];

    let p = basis.len();
    let mut c = prev.to_vec();
    for j in 0..r {
        let vj = &full.v[j];
        // Replace the visible component of `prev` by Σ⁻¹ w.
        let coef = w[j] / full.sigma[j] - inner(vj, prev);
        for i in 0..p {
            c[i] += coef * vj[i];
        }
    }
    Some(c)
}

fn normalize(model: &mut impl Bilinear) -> bool {
    let n = norm2(&model.psi());
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    model.scale(1.0 / n);
    true
}

/// Gauss-Newton on `S ψ(θ) = 0` with the first-order norm constraint
/// `⟨ψ, J δ⟩ = 0`; minimum-norm steps absorb the gauge freedom.
fn gauss_newton(map: &MeasurementMap, model: &mut impl Bilinear, mut value: f64, steps: usize) -> f64 {
    let m = map.m();
    for _ in 0..steps {
        if value == 0.0 {
            break;
        }
        let psi_now = model.psi();
        let jac = model.jacobian();
        let sj = match map.stacked().matmul(&jac) {
            Ok(x) => x,
            Err(_) => break,
        };
        let p = jac.cols();
        let a = ComplexMatrix::from_fn(m + 1, p, |i, j| {
            if i < m {
                sj[(i, j)]
            } else {
                (0..psi_now.len()).map(|k| psi_now[k].conj() * jac[(k, j)]).sum()
            }
        });
        let mut rhs: Vec<C64> = map.apply_flat(&psi_now).iter().map(|z| -z).collect();
        rhs.push(ZERO);
        let delta = match lstsq(&a, &rhs, 1e-13) {
            Ok(d) => d,
            Err(_) => break,
        };
        let before = model.params();
        let after: Vec<C64> = before.iter().zip(&delta).map(|(x, d)| x + d).collect();
        model.set_params(&after);
        let candidate = residual_ratio(map, &model.psi());
        if candidate < value && normalize(model) {
            value = candidate;
        } else {
            model.set_params(&before);
            break;
        }
    }
    value
}

/// Alternating exact block minimization followed by a Gauss-Newton polish.
/// Returns the final `‖S ψ‖` at unit `‖ψ‖`.
fn minimize(map: &MeasurementMap, model: &mut impl Bilinear, max_iters: usize) -> f64 {
    if !normalize(model) {
        return f64::INFINITY;
    }
    let floor = 1e-15 * map.stacked().frobenius_norm();
    let mut value = residual_ratio(map, &model.psi());
    let mut stalled = 0;
    for _ in 0..max_iters {
        if value <= floor {
            break;
        }
        for k in 0..2 {
            let (basis, prev) = model.block(k);
            if let Some(c) = rayleigh_block(map, &basis, &prev) {
                model.set_block(k, &c);
            }
        }
        model.balance();
        if !normalize(model) {
            return f64::INFINITY;
        }
        let next = residual_ratio(map, &model.psi());
        stalled = if next > value * (1.0 - 1e-4) { stalled + 1 } else { 0 };
        value = next.min(value);
        if stalled >= 3 {
            break;
        }
    }
    let value = gauss_newton(map, model, residual_ratio(map, &model.psi()), 30);
    if normalize(model) {
        residual_ratio(map, &model.psi())
    } else {
        value
    }
}

fn outer_flat(u: &[C64], v: &[C64], sign: f64) -> Vec<C64> {
    u.iter().flat_map(|a| v.iter().map(move |b| a * b * sign)).collect()
}

fn balance_pair(u: &mut [C64], v: &mut [C64]) {
    let (nu, nv) = (norm2(u), norm2(v));
    if nu > 0.0 && nv > 0.0 {
        let lam = (nv / nu).sqrt();
        u.iter_mut().for_each(|z| *z *= lam);
        v.iter_mut().for_each(|z| *z /= lam);
    }
}

/// `embed(A,B,u,v) − embed(A′,B′,u′,v′)`.
struct DifferenceModel {
    d: DifferencePoint,
}

impl DifferenceModel {
    fn random(quad: &SupportQuad, rng: &mut SeededRng) -> Self {
        let mk = |a: &SupportPattern, b: &SupportPattern, rng: &mut SeededRng| SparseRankOnePoint {
            a: a.clone(),
            b: b.clone(),
            u: gaussian_vector(rng, a.size()),
            v: gaussian_vector(rng, b.size()),
        };
        let x = mk(&quad.a, &quad.b, rng);
        let y = mk(&quad.a2, &quad.b2, rng);
        DifferenceModel { d: DifferencePoint { x, y } }
    }
}

/// `vec(±e_i wᵗ)` for each `i` in `rows`, or `vec(±w e_jᵗ)` for `j` in `cols`.
fn unit_rows(n1: usize, n2: usize, rows: &SupportPattern, w: &[C64], sign: f64) -> Vec<Vec<C64>> {
    rows.indices()
        .iter()
        .map(|&i| {
            let mut c = vec![ZERO; n1 * n2];
            for j in 0..n2 {
                c[i * n2 + j] = w[j] * sign;
            }
            c
        })
        .collect()
}

fn unit_cols(n1: usize, n2: usize, cols: &SupportPattern, w: &[C64], sign: f64) -> Vec<Vec<C64>> {
    cols.indices()
        .iter()
        .map(|&j| {
            let mut c = vec![ZERO; n1 * n2];
            for i in 0..n1 {
                c[i * n2 + j] = w[i] * sign;
            }
            c
        })
        .collect()
}

impl Bilinear for DifferenceModel {
    fn psi(&self) -> Vec<C64> {
        psi(&self.d).expect("shapes agree").into_vec()
    }

    fn block(&self, k: usize) -> (Vec<Vec<C64>>, Vec<C64>) {
        let (n1, n2) = self.d.x.shape();
        let (ux, vx) = self.d.x.factors();
        let (uy, vy) = self.d.y.factors();
        let (mut basis, mut coeffs);
        if k == 0 {
            basis = unit_rows(n1, n2, &self.d.x.a, &vx, 1.0);
            basis.extend(unit_rows(n1, n2, &self.d.y.a, &vy, -1.0));
            coeffs = self.d.x.u.to_vec();
            coeffs.extend(self.d.y.u.iter());
        } else {
            basis = unit_cols(n1, n2, &self.d.x.b, &ux, 1.0);
            basis.extend(unit_cols(n1, n2, &self.d.y.b, &uy, -1.0));
            coeffs = self.d.x.v.to_vec();
            coeffs.extend(self.d.y.v.iter());
        }
        (basis, coeffs)
    }

    fn set_block(&mut self, k: usize, c: &[C64]) {
        let (x, y) = if k == 0 { (&mut self.d.x.u, &mut self.d.y.u) } else { (&mut self.d.x.v, &mut self.d.y.v) };
        let s = x.len();
        x.copy_from_slice(&c[..s]);
        y.copy_from_slice(&c[s..]);
    }

    fn params(&self) -> Vec<C64> {
        [&self.d.x.u, &self.d.x.v, &self.d.y.u, &self.d.y.v].iter().flat_map(|w| w.iter().copied()).collect()
    }

    fn set_params(&mut self, p: &[C64]) {
        let mut off = 0;
        for w in [&mut self.d.x.u, &mut self.d.x.v, &mut self.d.y.u, &mut self.d.y.v] {
            let len = w.len();
            w.copy_from_slice(&p[off..off + len]);
            off += len;
        }
    }

    fn jacobian(&self) -> ComplexMatrix {
        difference_jacobian(&self.d.quadruple(), &self.d)
    }

    fn scale(&mut self, f: f64) {
        let f = C64::new(f, 0.0);
        self.d.x.u.iter_mut().for_each(|z| *z *= f);
        self.d.y.u.iter_mut().for_each(|z| *z *= f);
    }

    fn balance(&mut self) {
        balance_pair(&mut self.d.x.u, &mut self.d.x.v);
        balance_pair(&mut self.d.y.u, &mut self.d.y.v);
    }
}

/// `t · u₀v₀ᵗ − embed(A, B, u, v)`.
struct WeakModel {
    base: Vec<C64>,
    t: C64,
    p: SparseRankOnePoint,
}

impl Bilinear for WeakModel {
    fn psi(&self) -> Vec<C64> {
        let e = self.p.embed();
        self.base.iter().zip(e.as_slice()).map(|(b, x)| self.t * b - x).collect()
    }

    fn block(&self, k: usize) -> (Vec<Vec<C64>>, Vec<C64>) {
        let (n1, n2) = self.p.shape();
        let (u, v) = self.p.factors();
        let mut basis = vec![self.base.clone()];
        let mut coeffs = vec![self.t];
        if k == 0 {
            basis.extend(unit_rows(n1, n2, &self.p.a, &v, -1.0));
            coeffs.extend(self.p.u.iter());
        } else {
            basis.extend(unit_cols(n1, n2, &self.p.b, &u, -1.0));
            coeffs.extend(self.p.v.iter());
        }
        (basis, coeffs)
    }

    fn set_block(&mut self, k: usize, c: &[C64]) {
        self.t = c[0];
        let w = if k == 0 { &mut self.p.u } else { &mut self.p.v };
        w.copy_from_slice(&c[1..]);
    }

    fn params(&self) -> Vec<C64> {
        let mut p = vec![self.t];
        p.extend(self.p.u.iter());
        p.extend(self.p.v.iter());
        p
    }

    fn set_params(&mut self, p: &[C64]) {
        self.t = p[0];
        let s1 = self.p.u.len();
        self.p.u.copy_from_slice(&p[1..1 + s1]);
        self.p.v.copy_from_slice(&p[1 + s1..]);
    }

    fn jacobian(&self) -> ComplexMatrix {
        let (n1, n2) = self.p.shape();
        let (u, v) = self.p.factors();
        let mut cols = vec![self.base.clone()];
        cols.extend(unit_rows(n1, n2, &self.p.a, &v, -1.0));
        cols.extend(unit_cols(n1, n2, &self.p.b, &u, -1.0));
        ComplexMatrix::from_columns(n1 * n2, &cols)
    }

    fn scale(&mut self, f: f64) {
        self.t *= f;
        self.p.u.iter_mut().for_each(|z| *z *= f);
    }

    fn balance(&mut self) {
        balance_pair(&mut self.p.u, &mut self.p.v);
    }
}

struct Candidate<T> {
    value: f64,
    witness: Vec<C64>,
    state: T,
}

/// Runs `tasks` in fixed-size chunks (parallel inside a chunk), keeping the
/// first minimum in task order; stops after a chunk once the best value is
/// below `stop_below`. The result depends only on the task list.
fn search_min<T: Send>(
    tasks: usize,
    stop_below: f64,
    run: impl Fn(usize) -> Option<Candidate<T>> + Sync,
) -> (Option<Candidate<T>>, usize) {
    const CHUNK: usize = 64;
    let mut best: Option<Candidate<T>> = None;
    let mut used = 0;
    let mut start = 0;
    while start < tasks {
        let end = (start + CHUNK).min(tasks);
        let results: Vec<Option<Candidate<T>>> = (start..end).into_par_iter().map(&run).collect();
        used += end - start;
        for c in results.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.value < b.value) {
                best = Some(c);
            }
        }
        if best.as_ref().is_some_and(|b| b.value < stop_below) {
            break;
        }
        start = end;
    }
    (best, used)
}

fn finish(
    map: &MeasurementMap,
    witness: Vec<C64>,
    tol: &Tolerances,
    restarts_used: usize,
) -> (ComplexMatrix, f64, Verdict, usize) {
    let n = norm2(&witness);
    let unit: Vec<C64> = witness.iter().map(|z| z / n).collect();
    let value = map.apply_flat(&unit).norm();
    let w = ComplexMatrix::new(map.n1(), map.n2(), unit).expect("witness shape");
    (w, value, Verdict::classify(value, tol), restarts_used)
}

/// Estimates `min ‖M(X)‖₂` over unit-Frobenius `X ∈ Δ(M¹_{s₁,s₂})` by
/// restarted alternating block minimization over every support quadruple
/// (sampled above `opts.quad_limit`).
pub fn estimate_stability_constant(
    map: &MeasurementMap,
    s1: usize,
    s2: usize,
    opts: &SearchOptions,
) -> Result<CertificationResult> {
    let (n1, n2) = (map.n1(), map.n2());
    if opts.restarts == 0 {
        return Err(Error::Precondition("restarts must be >= 1".into()));
    }
    if !(1..=n1).contains(&s1) || !(1..=n2).contains(&s2) {
        return Err(Error::Precondition(format!("sparsities ({s1}, {s2}) out of range for ({n1}, {n2})")));
    }
    let quads = support_quadruples(n1, n2, s1, s2, opts.quad_limit, opts.seed)?;
    let warm = match &opts.warm_start {
        Some(d) if d.x.shape() == (n1, n2) => Some(d.clone()),
        Some(d) => return Err(Error::shape("warm start", (n1, n2), d.x.shape())),
        None => None,
    };
    let offset = usize::from(warm.is_some());
    let tasks = offset + quads.len() * opts.restarts;

    let run = |t: usize| -> Option<Candidate<DifferencePoint>> {
        let mut model = if t < offset {
            DifferenceModel { d: warm.clone().expect("warm start present") }
        } else {
            let (q, r) = ((t - offset) / opts.restarts, (t - offset) % opts.restarts);
            let mut rng = rng_from_seed(derive_seed(opts.seed, &[q as u64, r as u64]));
            DifferenceModel::random(&quads[q], &mut rng)
        };
        let value = minimize(map, &mut model, opts.max_iters);
        value.is_finite().then(|| Candidate { value, witness: model.psi(), state: model.d })
    };
    let (best, used) = search_min(tasks, opts.tolerances.fail_tol * 1e-3, run);
    let best = best.ok_or_else(|| Error::Degenerate("every search start collapsed".into()))?;
    let (witness, value, verdict, restarts_used) = finish(map, best.witness, &opts.tolerances, used);
    Ok(CertificationResult {
        estimated_constant: value,
        witness,
        restarts_used,
        verdict,
        point: Some(best.state),
        pair: None,
    })
}

/// Searches for a unit-Frobenius `X` of rank at most 2 in `ker M`.
///
/// Each start is a random kernel element refined by a few rounds of
/// alternating projection (rank-2 truncation, projection onto the kernel);
/// the rank-2 factors of the result seed the factored block search, whose
/// output is projected back onto the kernel. Returns `None` for a trivial
/// kernel or when no start passes both membership tests
/// (`σ₃ ≤ 1e-6`, `‖M(X)‖₂ ≤ 1e-8`).
pub fn find_rank2_in_kernel(
    map: &MeasurementMap,
    max_iters: usize,
    restarts: usize,
    seed: u64,
) -> Result<Option<ComplexMatrix>> {
    let (n1, n2) = (map.n1(), map.n2());
    let tol = Tolerances::default();
    let kernel = kernel_basis(map.stacked(), tol.kernel_residual_tol)?;
    let dim = kernel.cols();
    if dim == 0 {
        return Ok(None);
    }
    let project = |x: &[C64]| -> Vec<C64> {
        let mut out = vec![ZERO; x.len()];
        for col in kernel.columns() {
            let c = inner(&col, x);
            for (o, k) in out.iter_mut().zip(&col) {
                *o += c * k;
            }
        }
        out
    };
    let full_rows = SupportPattern::full(n1);
    let full_cols = SupportPattern::full(n2);

    let run = |r: usize| -> Option<Candidate<()>> {
        let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
        let g = gaussian_vector(&mut rng, dim);
        let mut x = kernel.matvec(&g).ok()?.into_inner();
        for _ in 0..5 {
            let mat = ComplexMatrix::new(n1, n2, x).ok()?;
            x = project(crate::numerics::truncate_rank(&mat, 2).ok()?.as_slice());
        }
        let dec = svd(&ComplexMatrix::new(n1, n2, x).ok()?).ok()?;
        let factor = |j: usize, sign: f64| {
            let sj = dec.s.get(j).copied().unwrap_or(0.0).max(1e-300);
            let u: ComplexVector = (0..n1).map(|i| dec.u[(i, j)] * sj * sign).collect();
            let v: ComplexVector = (0..n2).map(|i| dec.v[(i, j)].conj()).collect();
            (u, v)
        };
        let (ux, vx) = factor(0, 1.0);
        let (uy, vy) = if dec.s.len() > 1 { factor(1, -1.0) } else { (ComplexVector::zeros(n1), vx.clone()) };
        let mut model = DifferenceModel {
            d: DifferencePoint {
                x: SparseRankOnePoint { a: full_rows.clone(), b: full_cols.clone(), u: ux, v: vx },
                y: SparseRankOnePoint { a: full_rows.clone(), b: full_cols.clone(), u: uy, v: vy },
            },
        };
        minimize(map, &mut model, max_iters);
        let projected = project(&model.psi());
        let n = norm2(&projected);
        if n == 0.0 {
            return None;
        }
        let unit: Vec<C64> = projected.iter().map(|z| z / n).collect();
        let residual = map.apply_flat(&unit).norm();
        let mat = ComplexMatrix::new(n1, n2, unit.clone()).ok()?;
        let s3 = singular_values(&mat).ok()?.get(2).copied().unwrap_or(0.0);
        let value = if s3 <= tol.rank2_sigma_tol && residual <= tol.kernel_residual_tol { 0.0 } else { f64::INFINITY };
        Some(Candidate { value, witness: unit, state: () })
    };
    let (best, _) = search_min(restarts, 0.5, run);
    Ok(best.filter(|c| c.value == 0.0).map(|c| ComplexMatrix::new(n1, n2, c.witness).expect("witness shape")))
}

/// Splits `Z = X − Y` with `X ∈ W_{A,B}`, `Y ∈ W_{A′,B}` into its rank-one
/// parts. Uses the row `p = min(A∖A′)` of `X` and `q = min(A′∖A)` of `Y`,
/// which are read off `Z` directly, and dual vectors `ω₁, ω₂` in their span
/// (sesquilinear pairing `⟨a, b⟩ = Σ āᵢ bᵢ`).
pub fn invert_rank_one_difference(
    z: &ComplexMatrix,
    a: &SupportPattern,
    a2: &SupportPattern,
    b: &SupportPattern,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (n1, n2) = z.shape();
    if a.ambient() != n1 || a2.ambient() != n1 {
        return Err(Error::length("invert_rank_one_difference (row supports)", n1, a.ambient().max(a2.ambient())));
    }
    if b.ambient() != n2 {
        return Err(Error::length("invert_rank_one_difference (column support)", n2, b.ambient()));
    }
    let p = *a
        .difference(a2)
        .first()
        .ok_or_else(|| Error::Precondition("A \\ A' is empty".into()))?;
    let q = *a2
        .difference(a)
        .first()
        .ok_or_else(|| Error::Precondition("A' \\ A is empty".into()))?;
    let xp = b.gather(z.row(p));
    let yq: ComplexVector = b.gather(z.row(q)).iter().map(|w| -w).collect();
    let (nx, ny) = (xp.norm(), yq.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::Degenerate(format!("row {} of X or row {} of Y vanishes", p + 1, q + 1)));
    }
    // ω₁ = α X_p + β Y_q with ⟨ω₁, X_p⟩ = 1, ⟨ω₁, Y_q⟩ = 0:
    //   [g_pp g_qp; g_pq g_qq] (ᾱ, β̄)ᵗ = (1, 0)ᵗ with g_ab = ⟨a, b⟩.
    let g_pp = C64::new(nx * nx, 0.0);
    let g_qq = C64::new(ny * ny, 0.0);
    let g_pq = inner(&xp, &yq);
    let g_qp = g_pq.conj();
    let det = g_pp * g_qq - g_qp * g_pq;
    if det.norm() < Tolerances::default().gram_det_tol * (nx * ny).powi(2) {
        return Err(Error::Degenerate(format!(
            "rows {} of X and {} of Y are linearly dependent (relative Gram determinant {:.3e})",
            p + 1,
            q + 1,
            det.norm() / (nx * ny).powi(2)
        )));
    }
    let alpha_bar = g_qq / det;
    let beta_bar = -g_pq / det;
    let omega1: ComplexVector =
        xp.iter().zip(yq.iter()).map(|(x, y)| alpha_bar.conj() * x + beta_bar.conj() * y).collect();

    let mut x = ComplexMatrix::zeros(n1, n2);
    for &i in a.indices() {
        let c = inner(&omega1, &b.gather(z.row(i)));
        for (&j, xj) in b.indices().iter().zip(xp.iter()) {
            x[(i, j)] = c * xj;
        }
    }
    let y = x.sub(z)?;
    Ok((x, y))
}

/// Estimates `min ‖M(D)‖₂` over unit-Frobenius
/// `D ∈ span(u₀v₀ᵗ) − M¹_{s₁,s₂}`, searching every support pair. A small
/// value exhibits a pair `(u, v)` outside the orbit of `(u₀, v₀)` with
/// `B(u, v) ≈ B(u₀, v₀)`; it is reported in `pair`.
pub fn weak_identifiability_test(
    map: &MeasurementMap,
    u0: &[C64],
    v0: &[C64],
    s1: usize,
    s2: usize,
    opts: &SearchOptions,
) -> Result<CertificationResult> {
    let (n1, n2) = (map.n1(), map.n2());
    if u0.len() != n1 {
        return Err(Error::length("weak_identifiability_test (u0)", n1, u0.len()));
    }
    if v0.len() != n2 {
        return Err(Error::length("weak_identifiability_test (v0)", n2, v0.len()));
    }
    if norm2(u0) == 0.0 || norm2(v0) == 0.0 {
        return Err(Error::Precondition("reference factors must be nonzero".into()));
    }
    let (k1, k2) = (
        ComplexVector::from(u0.to_vec()).support_size(0.0),
        ComplexVector::from(v0.to_vec()).support_size(0.0),
    );
    if k1 > s1 || k2 > s2 {
        return Err(Error::Precondition(format!(
            "reference pair has supports ({k1}, {k2}), not ({s1}, {s2})-sparse"
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::Precondition("restarts must be >= 1".into()));
    }
    let rows = enumerate_supports(n1, s1)?;
    let cols = enumerate_supports(n2, s2)?;
    let pairs: Vec<(&SupportPattern, &SupportPattern)> =
        rows.iter().flat_map(|a| cols.iter().map(move |b| (a, b))).collect();
    let base = outer_flat(u0, v0, 1.0);
    let scale = norm2(&base);
    let base: Vec<C64> = base.iter().map(|z| z / scale).collect();

    let run = |t: usize| -> Option<Candidate<WeakModel>> {
        let (pi, r) = (t / opts.restarts, t % opts.restarts);
        let (a, b) = pairs[pi];
        let mut rng = rng_from_seed(derive_seed(opts.seed, &[pi as u64, r as u64]));
        let mut model = WeakModel {
            base: base.clone(),
            t: crate::numerics::complex_normal(&mut rng),
            p: SparseRankOnePoint {
                a: a.clone(),
                b: b.clone(),
                u: gaussian_vector(&mut rng, a.size()),
                v: gaussian_vector(&mut rng, b.size()),
            },
        };
        let value = minimize(map, &mut model, opts.max_iters);
        value.is_finite().then(|| Candidate { value, witness: model.psi(), state: model })
    };
    let (best, used) = search_min(pairs.len() * opts.restarts, opts.tolerances.fail_tol * 1e-3, run);
    let best = best.ok_or_else(|| Error::Degenerate("every search start collapsed".into()))?;
    let (witness, value, verdict, restarts_used) = finish(map, best.witness, &opts.tolerances, used);

    let (mut u, v) = best.state.p.factors();
    if best.state.t.norm() > 0.0 {
        // Undo the normalization of u₀v₀ᵗ so that B(u, v) ≈ B(u₀, v₀).
        let f = scale / best.state.t;
        u.iter_mut().for_each(|z| *z *= f);
    }
    let pair = if norm2(&u) > 0.0 && norm2(&v) > 0.0 {
        let orbit = orbit_distance(u0, v0, &u, &v)?;
        Some(WitnessPair { u, v, orbit_distance: orbit })
    } else {
        None
    };
    Ok(CertificationResult { estimated_constant: value, witness, restarts_used, verdict, point: None, pair })
}
