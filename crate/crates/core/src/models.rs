//! Sparse rank-one models: support patterns, the embedded rank-one points
//! `P_A u (P_B v)ᵗ`, differences of two such points, the dimension formula for
//! the difference set and a Jacobian-rank estimator that checks it.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, gaussian_vector, numeric_rank, rng_from_seed, ComplexMatrix, ComplexVector, C64, ZERO};

/// Above this many support quadruples the enumeration switches to sampling.
pub const EXHAUSTIVE_QUADRUPLE_LIMIT: usize = 10_000;

/// An `s`-element subset of `{0, …, n−1}` (displayed 1-based).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportPattern {
    n: usize,
    indices: Vec<usize>,
}

impl SupportPattern {
    /// From 0-based indices, which must be strictly increasing and `< n`.
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(format!("support indices not strictly increasing: {indices:?}")));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::Precondition(format!("support index {last} out of range for n = {n}")));
            }
        }
        Ok(SupportPattern { n, indices })
    }

    /// From 1-based indices.
    pub fn from_one_based(n: usize, indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::Precondition("1-based support contains 0".into()));
        }
        Self::new(n, indices.iter().map(|i| i - 1).collect())
    }

    pub fn full(n: usize) -> Self {
        SupportPattern { n, indices: (0..n).collect() }
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    /// 0-based indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Indices in `self` but not in `other`, ascending.
    pub fn difference(&self, other: &SupportPattern) -> Vec<usize> {
        self.indices.iter().copied().filter(|&i| !other.contains(i)).collect()
    }

    /// Places `coefficients` on the support (`P_A` applied to the lift).
    pub fn scatter(&self, coefficients: &[C64]) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.n);
        for (&i, &c) in self.indices.iter().zip(coefficients) {
            out[i] = c;
        }
        out
    }

    pub fn gather(&self, x: &[C64]) -> ComplexVector {
        self.indices.iter().map(|&i| x[i]).collect()
    }

    /// Support of the nonzero entries of `x` (entries with modulus > `tol`).
    pub fn of_vector(x: &[C64], tol: f64) -> Self {
        SupportPattern { n: x.len(), indices: (0..x.len()).filter(|&i| x[i].norm() > tol).collect() }
    }

    /// Uniformly random `s`-subset.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, s: usize) -> Self {
        let mut idx = sample(rng, n, s).into_vec();
        idx.sort_unstable();
        SupportPattern { n, indices: idx }
    }
}

impl fmt::Debug for SupportPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}/{}", self.n)
    }
}

/// All `C(n, s)` supports in lexicographic order.
pub fn enumerate_supports(n: usize, s: usize) -> Result<Vec<SupportPattern>> {
    if s == 0 || s > n {
        return Err(Error::Precondition(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        out.push(SupportPattern { n, indices: idx.clone() });
        // Advance the rightmost index that still has room.
        let Some(pos) = (0..s).rev().find(|&p| idx[p] < n - s + p) else {
            return Ok(out);
        };
        idx[pos] += 1;
        for p in pos + 1..s {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// `P_A ũ (P_B ṽ)ᵗ`, stored through its supports and coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRankOnePoint {
    pub a: SupportPattern,
    pub b: SupportPattern,
    pub u: ComplexVector,
    pub v: ComplexVector,
}

impl SparseRankOnePoint {
    pub fn new(a: SupportPattern, b: SupportPattern, u: ComplexVector, v: ComplexVector) -> Result<Self> {
        if u.len() != a.size() {
            return Err(Error::length("SparseRankOnePoint (u)", a.size(), u.len()));
        }
        if v.len() != b.size() {
            return Err(Error::length("SparseRankOnePoint (v)", b.size(), v.len()));
        }
        Ok(SparseRankOnePoint { a, b, u, v })
    }

    /// Random supports of the given sizes with Gaussian coefficients.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n1: usize, n2: usize, s1: usize, s2: usize) -> Self {
        let a = SupportPattern::random(rng, n1, s1);
        let b = SupportPattern::random(rng, n2, s2);
        let u = gaussian_vector(rng, s1);
        let v = gaussian_vector(rng, s2);
        SparseRankOnePoint { a, b, u, v }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.a.ambient(), self.b.ambient())
    }

    /// Full-length factors `(P_A ũ, P_B ṽ)`.
    pub fn factors(&self) -> (ComplexVector, ComplexVector) {
        (self.a.scatter(&self.u), self.b.scatter(&self.v))
    }

    /// The embedded `n₁ × n₂` matrix.
    pub fn embed(&self) -> ComplexMatrix {
        let (n1, n2) = self.shape();
        let mut x = ComplexMatrix::zeros(n1, n2);
        for (&i, &ui) in self.a.indices().iter().zip(self.u.iter()) {
            for (&j, &vj) in self.b.indices().iter().zip(self.v.iter()) {
                x[(i, j)] = ui * vj;
            }
        }
        x
    }

    /// Inverse of [`embed`](Self::embed) on `W_{A,B}` with the first
    /// coefficient of `u` normalized to one. Fails when that entry vanishes.
    pub fn extract_normalized(x: &ComplexMatrix, a: &SupportPattern, b: &SupportPattern) -> Result<Self> {
        let first = a.indices()[0];
        let v: ComplexVector = b.indices().iter().map(|&j| x[(first, j)]).collect();
        let (jmax, vmax) = v
            .iter()
            .enumerate()
            .max_by(|p, q| p.1.norm().total_cmp(&q.1.norm()))
            .map(|(j, z)| (j, *z))
            .ok_or_else(|| Error::Degenerate("empty column support".into()))?;
        if vmax.norm() == 0.0 {
            return Err(Error::Degenerate("first support row vanishes; u₁ cannot be normalized".into()));
        }
        let col = b.indices()[jmax];
        let u: ComplexVector = a.indices().iter().map(|&i| x[(i, col)] / vmax).collect();
        SparseRankOnePoint::new(a.clone(), b.clone(), u, v)
    }
}

/// A pair `(X, Y)` of sparse rank-one points, realizing `X − Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferencePoint {
    pub x: SparseRankOnePoint,
    pub y: SparseRankOnePoint,
}

impl DifferencePoint {
    pub fn new(x: SparseRankOnePoint, y: SparseRankOnePoint) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::shape("DifferencePoint", x.shape(), y.shape()));
        }
        Ok(DifferencePoint { x, y })
    }

    pub fn quadruple(&self) -> SupportQuad {
        SupportQuad { a: self.x.a.clone(), b: self.x.b.clone(), a2: self.y.a.clone(), b2: self.y.b.clone() }
    }
}

/// `ψ(X, Y) = embed(X) − embed(Y)`.
pub fn psi(d: &DifferencePoint) -> Result<ComplexMatrix> {
    d.x.embed().sub(&d.y.embed())
}

fn check_sparsities(n1: usize, n2: usize, s1: usize, s2: usize) -> Result<()> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Precondition(format!("need n1, n2 >= 2, got ({n1}, {n2})")));
    }
    if !(1..=n1).contains(&s1) || !(1..=n2).contains(&s2) {
        return Err(Error::Precondition(format!(
            "sparsities ({s1}, {s2}) out of range for dimensions ({n1}, {n2})"
        )));
    }
    Ok(())
}

/// Dimension of the difference set of `(s₁, s₂)`-sparse rank-one matrices:
/// `2(n₁+n₂−2)` for full supports, `2(s₁+s₂−1)` otherwise.
pub fn expected_dimension(n1: usize, n2: usize, s1: usize, s2: usize) -> Result<usize> {
    check_sparsities(n1, n2, s1, s2)?;
    Ok(if s1 == n1 && s2 == n2 { 2 * (n1 + n2 - 2) } else { 2 * (s1 + s2 - 1) })
}

/// Minimal number of measurements for a stably `(s₁, s₂)`-injective map:
/// `2(n₁+n₂)−4` for full supports, `2(s₁+s₂)−2` otherwise.
pub fn injectivity_threshold(n1: usize, n2: usize, s1: usize, s2: usize) -> Result<usize> {
    check_sparsities(n1, n2, s1, s2)?;
    Ok(if s1 == n1 && s2 == n2 { 2 * (n1 + n2) - 4 } else { 2 * (s1 + s2) - 2 })
}

/// Supports `(A, B, A′, B′)` of one piece `W_{A,B} − W_{A′,B′}` of the
/// difference set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportQuad {
    pub a: SupportPattern,
    pub b: SupportPattern,
    pub a2: SupportPattern,
    pub b2: SupportPattern,
}

/// Support quadruples covering `Δ(M¹_{s₁,s₂})`.
///
/// Exhaustive (up to the `(A,B) ↔ (A′,B′)` swap, which only negates the
/// difference) when `C(n₁,s₁)²·C(n₂,s₂)² ≤ limit`; otherwise `limit` uniformly
/// sampled quadruples plus the structured configurations: a pair with
/// `1 ∈ A∖A′`, `2 ∈ A′∖A`, and the most disjoint pair.
pub fn support_quadruples(
    n1: usize,
    n2: usize,
    s1: usize,
    s2: usize,
    limit: usize,
    seed: u64,
) -> Result<Vec<SupportQuad>> {
    let rows = enumerate_supports(n1, s1)?;
    let cols = enumerate_supports(n2, s2)?;
    let total = binomial(n1, s1)
        .saturating_mul(binomial(n1, s1))
        .saturating_mul(binomial(n2, s2))
        .saturating_mul(binomial(n2, s2));
    if total <= limit {
        let pairs: Vec<(usize, usize)> =
            (0..rows.len()).flat_map(|i| (0..cols.len()).map(move |j| (i, j))).collect();
        let mut out = Vec::with_capacity(pairs.len() * (pairs.len() + 1) / 2);
        for (p, &(i, j)) in pairs.iter().enumerate() {
            for &(i2, j2) in &pairs[p..] {
                out.push(SupportQuad {
                    a: rows[i].clone(),
                    b: cols[j].clone(),
                    a2: rows[i2].clone(),
                    b2: cols[j2].clone(),
                });
            }
        }
        return Ok(out);
    }

    let mut set = BTreeSet::new();
    let first_rows = SupportPattern::new(n1, (0..s1).collect())?;
    let last_rows = SupportPattern::new(n1, (n1 - s1..n1).collect())?;
    let first_cols = SupportPattern::new(n2, (0..s2).collect())?;
    let last_cols = SupportPattern::new(n2, (n2 - s2..n2).collect())?;
    set.insert(SupportQuad { a: first_rows.clone(), b: first_cols.clone(), a2: last_rows, b2: last_cols });
    if s1 < n1 {
        let rest: Vec<usize> = (2..n1).take(s1 - 1).collect();
        let mut a: Vec<usize> = vec![0];
        a.extend(&rest);
        let mut a2: Vec<usize> = vec![1];
        a2.extend(&rest);
        set.insert(SupportQuad {
            a: SupportPattern::new(n1, a)?,
            b: first_cols.clone(),
            a2: SupportPattern::new(n1, a2)?,
            b2: first_cols.clone(),
        });
    } else if s2 < n2 {
        let rest: Vec<usize> = (2..n2).take(s2 - 1).collect();
        let mut b: Vec<usize> = vec![0];
        b.extend(&rest);
        let mut b2: Vec<usize> = vec![1];
        b2.extend(&rest);
        set.insert(SupportQuad {
            a: first_rows.clone(),
            b: SupportPattern::new(n2, b)?,
            a2: first_rows.clone(),
            b2: SupportPattern::new(n2, b2)?,
        });
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[0x5157]));
    let mut attempts = 0;
    while set.len() < limit && attempts < 4 * limit {
        attempts += 1;
        set.insert(SupportQuad {
            a: SupportPattern::random(&mut rng, n1, s1),
            b: SupportPattern::random(&mut rng, n2, s2),
            a2: SupportPattern::random(&mut rng, n1, s1),
            b2: SupportPattern::random(&mut rng, n2, s2),
        });
    }
    Ok(set.into_iter().collect())
}

/// Analytic Jacobian of `(u, v, u′, v′) ↦ embed(A,B,u,v) − embed(A′,B′,u′,v′)`
/// at the given parameters, as an `n₁n₂ × 2(s₁+s₂)` matrix.
pub fn difference_jacobian(quad: &SupportQuad, point: &DifferencePoint) -> ComplexMatrix {
    let (n1, n2) = point.x.shape();
    let (ux, vx) = point.x.factors();
    let (uy, vy) = point.y.factors();
    let mut cols: Vec<Vec<C64>> = Vec::new();
    // ∂/∂u_a is e_{A[a]} ṽᵗ; ∂/∂v_b is ũ e_{B[b]}ᵗ; the second point enters negated.
    let mut push = |rows: &SupportPattern, colsup: &SupportPattern, left: &ComplexVector, right: &ComplexVector, sign: f64| {
        for &i in rows.indices() {
            let mut c = vec![ZERO; n1 * n2];
            for j in 0..n2 {
                c[i * n2 + j] = right[j] * sign;
            }
            cols.push(c);
        }
        for &j in colsup.indices() {
            let mut c = vec![ZERO; n1 * n2];
            for i in 0..n1 {
                c[i * n2 + j] = left[i] * sign;
            }
            cols.push(c);
        }
    };
    push(&quad.a, &quad.b, &ux, &vx, 1.0);
    push(&quad.a2, &quad.b2, &uy, &vy, -1.0);
    ComplexMatrix::from_columns(n1 * n2, &cols)
}

/// Maximum Jacobian rank for one support quadruple over `samples` Gaussian
/// parameter draws.
pub fn jacobian_rank_for_quad(
    n1: usize,
    n2: usize,
    quad: &SupportQuad,
    samples: usize,
    seed: u64,
    rank_tol: f64,
) -> Result<usize> {
    let mut best = 0;
    for t in 0..samples as u64 {
        let mut rng = rng_from_seed(derive_seed(seed, &[t]));
        let x = SparseRankOnePoint::new(
            quad.a.clone(),
            quad.b.clone(),
            gaussian_vector(&mut rng, quad.a.size()),
            gaussian_vector(&mut rng, quad.b.size()),
        )?;
        let y = SparseRankOnePoint::new(
            quad.a2.clone(),
            quad.b2.clone(),
            gaussian_vector(&mut rng, quad.a2.size()),
            gaussian_vector(&mut rng, quad.b2.size()),
        )?;
        debug_assert_eq!(x.shape(), (n1, n2));
        let jac = difference_jacobian(quad, &DifferencePoint { x, y });
        best = best.max(numeric_rank(&jac, rank_tol)?);
    }
    Ok(best)
}

/// Empirical local complex dimension of `Δ(M¹_{s₁,s₂}(n₁,n₂))`: the largest
/// Jacobian rank over the support quadruples and `samples` random parameter
/// draws per quadruple.
pub fn jacobian_rank_dimension(
    n1: usize,
    n2: usize,
    s1: usize,
    s2: usize,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    jacobian_rank_dimension_with(n1, n2, s1, s2, samples, seed, crate::Tolerances::default().jacobian_rank_tol)
}

/// [`jacobian_rank_dimension`] with an explicit relative rank cutoff.
pub fn jacobian_rank_dimension_with(
    n1: usize,
    n2: usize,
    s1: usize,
    s2: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<usize> {
    check_sparsities(n1, n2, s1, s2)?;
    if samples == 0 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    let quads = support_quadruples(n1, n2, s1, s2, EXHAUSTIVE_QUADRUPLE_LIMIT, seed)?;
    let mut best = 0;
    for (q, quad) in quads.iter().enumerate() {
        best = best.max(jacobian_rank_for_quad(n1, n2, quad, samples, derive_seed(seed, &[q as u64]), tol)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_vector, rng_from_seed};

    #[test]
    fn support_enumeration() {
        let all = enumerate_supports(3, 3).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].one_based(), vec![1, 2, 3]);
        let two: Vec<Vec<usize>> = enumerate_supports(3, 2).unwrap().iter().map(|p| p.one_based()).collect();
        assert_eq!(two, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(enumerate_supports(6, 3).unwrap().len(), 20);
        assert!(enumerate_supports(2, 3).is_err());
        assert!(enumerate_supports(2, 0).is_err());
    }

    #[test]
    fn support_validation() {
        assert!(SupportPattern::new(3, vec![1, 1]).is_err());
        assert!(SupportPattern::new(3, vec![0, 3]).is_err());
        assert!(SupportPattern::from_one_based(3, &[0]).is_err());
        let a = SupportPattern::from_one_based(4, &[1, 3]).unwrap();
        let b = SupportPattern::from_one_based(4, &[2, 3]).unwrap();
        assert_eq!(a.difference(&b), vec![0]);
        assert_eq!(format!("{a:?}"), "{1,3}/4");
    }

    #[test]
    fn embed_examples() {
        let p = SparseRankOnePoint::new(
            SupportPattern::from_one_based(2, &[1]).unwrap(),
            SupportPattern::from_one_based(2, &[1]).unwrap(),
            ComplexVector::from_real(&[1.0]),
            ComplexVector::from_real(&[1.0]),
        )
        .unwrap();
        assert_eq!(p.embed(), ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]));

        let mut rng = rng_from_seed(1);
        let u = gaussian_vector(&mut rng, 3);
        let v = gaussian_vector(&mut rng, 4);
        let full = SparseRankOnePoint::new(SupportPattern::full(3), SupportPattern::full(4), u.clone(), v.clone()).unwrap();
        assert_eq!(full.embed(), ComplexMatrix::outer(&u, &v));
    }

    #[test]
    fn embed_structure() {
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            let p = SparseRankOnePoint::random(&mut rng, 5, 4, 2, 3);
            let x = p.embed();
            assert!(numeric_rank(&x, 1e-10).unwrap() <= 1);
            for i in 0..5 {
                for j in 0..4 {
                    if !p.a.contains(i) || !p.b.contains(j) {
                        assert_eq!(x[(i, j)], ZERO);
                    }
                }
            }
        }
    }

    #[test]
    fn coefficient_length_checked() {
        let a = SupportPattern::full(2);
        assert!(SparseRankOnePoint::new(a.clone(), a.clone(), ComplexVector::zeros(1), ComplexVector::zeros(2)).is_err());
    }

    #[test]
    fn extract_round_trip() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let mut p = SparseRankOnePoint::random(&mut rng, 5, 5, 3, 2);
            let u0 = p.u[0];
            p.u = p.u.scaled(u0.inv());
            p.v = p.v.scaled(u0);
            let q = SparseRankOnePoint::extract_normalized(&p.embed(), &p.a, &p.b).unwrap();
            for (x, y) in p.u.iter().zip(q.u.iter()).chain(p.v.iter().zip(q.v.iter())) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn psi_examples() {
        let mut rng = rng_from_seed(4);
        let x = SparseRankOnePoint::random(&mut rng, 4, 4, 2, 2);
        let same = DifferencePoint::new(x.clone(), x.clone()).unwrap();
        assert_eq!(psi(&same).unwrap().frobenius_norm(), 0.0);

        let a = SupportPattern::from_one_based(4, &[1, 2]).unwrap();
        let b = SupportPattern::from_one_based(4, &[3, 4]).unwrap();
        let x = SparseRankOnePoint::new(a.clone(), a.clone(), gaussian_vector(&mut rng, 2), gaussian_vector(&mut rng, 2)).unwrap();
        let y = SparseRankOnePoint::new(b.clone(), b.clone(), gaussian_vector(&mut rng, 2), gaussian_vector(&mut rng, 2)).unwrap();
        let d = DifferencePoint::new(x.clone(), y.clone()).unwrap();
        let z = psi(&d).unwrap();
        assert_eq!(numeric_rank(&z, 1e-10).unwrap(), 2);
        assert!(z.frobenius_norm() <= x.embed().frobenius_norm() + y.embed().frobenius_norm() + 1e-12);

        let other = SparseRankOnePoint::random(&mut rng, 3, 4, 1, 1);
        assert!(DifferencePoint::new(x, other).is_err());
    }

    #[test]
    fn dimension_formulas() {
        assert_eq!(expected_dimension(2, 2, 2, 2).unwrap(), 4);
        assert_eq!(expected_dimension(3, 3, 2, 2).unwrap(), 6);
        assert_eq!(expected_dimension(4, 5, 4, 5).unwrap(), 14);
        assert_eq!(injectivity_threshold(2, 2, 2, 2).unwrap(), 4);
        assert_eq!(injectivity_threshold(4, 4, 2, 2).unwrap(), 6);
        assert_eq!(injectivity_threshold(3, 3, 3, 3).unwrap(), 8);
        assert!(expected_dimension(3, 3, 4, 1).is_err());
        assert!(expected_dimension(1, 3, 1, 1).is_err());
        assert!(injectivity_threshold(3, 3, 0, 1).is_err());
    }

    #[test]
    fn threshold_equals_dimension() {
        for n1 in 2..=6 {
            for n2 in 2..=6 {
                for s1 in 1..=n1 {
                    for s2 in 1..=n2 {
                        assert_eq!(
                            injectivity_threshold(n1, n2, s1, s2).unwrap(),
                            expected_dimension(n1, n2, s1, s2).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn jacobian_dimension_examples() {
        assert_eq!(jacobian_rank_dimension(3, 3, 2, 2, 10, 1).unwrap(), 6);
        assert_eq!(jacobian_rank_dimension(2, 2, 2, 2, 10, 1).unwrap(), 4);
    }

    #[test]
    fn equal_supports_cap() {
        // A = A′, B = B′: the piece is the rank-≤2 matrices on a 3×3 block,
        // of dimension 2(3+3−2) = 8 ≤ 2(s₁+s₂)−2 = 10.
        let a = SupportPattern::from_one_based(4, &[1, 2, 3]).unwrap();
        let quad = SupportQuad { a: a.clone(), b: a.clone(), a2: a.clone(), b2: a };
        let r = jacobian_rank_for_quad(4, 4, &quad, 5, 9, 1e-6).unwrap();
        assert_eq!(r, 8);
        assert!(r <= 2 * (3 + 3) - 2);
    }

    #[test]
    fn quadruples_exhaustive_and_sampled() {
        // 6 row supports × 6 column supports = 36 pairs, 36·37/2 unordered.
        let q = support_quadruples(4, 4, 2, 2, EXHAUSTIVE_QUADRUPLE_LIMIT, 0).unwrap();
        assert_eq!(q.len(), 36 * 37 / 2);
        let sampled = support_quadruples(6, 6, 3, 3, 500, 0).unwrap();
        assert_eq!(sampled.len(), 500);
        assert!(sampled.iter().any(|s| s.a.contains(0) && !s.a2.contains(0) && s.a2.contains(1) && !s.a.contains(1)));
    }
}
