//! Linear measurement maps on `M(n₁, n₂)` and their bilinear counterparts.
//!
//! A map is stored as `m` matrices `Y_i ∈ M(n₂, n₁)` acting through
//! `X ↦ (tr(Y_1 X), …, tr(Y_m X))`. The bilinear map is `B(u, v) = M(u vᵗ)`.
//! Alongside the `Y_i`, every map keeps its stacked coefficient matrix: the
//! `m × n₁n₂` matrix whose row `i` is `Y_iᵗ` flattened row-major, so that
//! `M(X) = S · vec(X)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, gaussian_matrix, numeric_rank, ComplexMatrix, ComplexVector, C64};

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct MeasurementMap {
    n1: usize,
    n2: usize,
    matrices: Vec<ComplexMatrix>,
    stacked: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawMap {
    n1: usize,
    n2: usize,
    m: usize,
    matrices: Vec<ComplexMatrix>,
}

impl TryFrom<RawMap> for MeasurementMap {
    type Error = Error;
    fn try_from(raw: RawMap) -> Result<Self> {
        if raw.matrices.len() != raw.m {
            return Err(Error::InvalidData(format!(
                "declared m = {} but {} matrices supplied",
                raw.m,
                raw.matrices.len()
            )));
        }
        MeasurementMap::new(raw.n1, raw.n2, raw.matrices)
    }
}

impl From<MeasurementMap> for RawMap {
    fn from(map: MeasurementMap) -> Self {
        RawMap { n1: map.n1, n2: map.n2, m: map.matrices.len(), matrices: map.matrices }
    }
}

impl std::fmt::Debug for MeasurementMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MeasurementMap {{ n1: {}, n2: {}, m: {} }}", self.n1, self.n2, self.m())
    }
}

impl MeasurementMap {
    /// Builds a map from its `Y_i`, each of shape `n₂ × n₁`.
    pub fn new(n1: usize, n2: usize, matrices: Vec<ComplexMatrix>) -> Result<Self> {
        for y in &matrices {
            if y.shape() != (n2, n1) {
                return Err(Error::shape("MeasurementMap::new", (n2, n1), y.shape()));
            }
        }
        let stacked = stack(n1, n2, &matrices);
        Ok(MeasurementMap { n1, n2, matrices, stacked })
    }

    /// Builds a map from an `m × n₁n₂` coefficient matrix (row `i` is `Y_iᵗ`
    /// flattened row-major).
    pub fn from_stacked(n1: usize, n2: usize, stacked: ComplexMatrix) -> Result<Self> {
        if stacked.cols() != n1 * n2 {
            return Err(Error::shape("MeasurementMap::from_stacked", (stacked.rows(), n1 * n2), stacked.shape()));
        }
        let matrices = (0..stacked.rows())
            .map(|i| {
                let row = stacked.row(i);
                ComplexMatrix::from_fn(n2, n1, |b, a| row[a * n2 + b])
            })
            .collect();
        Ok(MeasurementMap { n1, n2, matrices, stacked })
    }

    /// The coordinate map `X ↦ vec(X)` (row-major), i.e. `Y_i` are matrix units.
    pub fn vectorization(n1: usize, n2: usize) -> Self {
        Self::from_stacked(n1, n2, ComplexMatrix::identity(n1 * n2)).expect("square identity")
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn stacked(&self) -> &ComplexMatrix {
        &self.stacked
    }

    /// `(tr(Y_1 X), …, tr(Y_m X))`.
    pub fn apply_linear(&self, x: &ComplexMatrix) -> Result<ComplexVector> {
        if x.shape() != (self.n1, self.n2) {
            return Err(Error::shape("apply_linear", (self.n1, self.n2), x.shape()));
        }
        Ok(self.apply_flat(x.as_slice()))
    }

    /// `M` applied to a row-major flattened `n₁ × n₂` matrix.
    pub(crate) fn apply_flat(&self, x: &[C64]) -> ComplexVector {
        debug_assert_eq!(x.len(), self.n1 * self.n2);
        (0..self.m()).map(|i| crate::numerics::dot(self.stacked.row(i), x)).collect()
    }

    /// `B(u, v) = M(u vᵗ)`.
    pub fn apply_bilinear(&self, u: &[C64], v: &[C64]) -> Result<ComplexVector> {
        if u.len() != self.n1 {
            return Err(Error::length("apply_bilinear (u)", self.n1, u.len()));
        }
        if v.len() != self.n2 {
            return Err(Error::length("apply_bilinear (v)", self.n2, v.len()));
        }
        self.apply_linear(&ComplexMatrix::outer(u, v))
    }

    /// The map with the rows of `other` appended.
    pub fn append(&self, other: &MeasurementMap) -> Result<MeasurementMap> {
        if (other.n1, other.n2) != (self.n1, self.n2) {
            return Err(Error::shape("append", (self.n1, self.n2), (other.n1, other.n2)));
        }
        let mut matrices = self.matrices.clone();
        matrices.extend(other.matrices.iter().cloned());
        MeasurementMap::new(self.n1, self.n2, matrices)
    }

    /// The first `m` measurements.
    pub fn truncate(&self, m: usize) -> MeasurementMap {
        MeasurementMap::new(self.n1, self.n2, self.matrices[..m.min(self.m())].to_vec())
            .expect("shapes already validated")
    }
}

fn stack(n1: usize, n2: usize, matrices: &[ComplexMatrix]) -> ComplexMatrix {
    ComplexMatrix::from_fn(matrices.len(), n1 * n2, |i, flat| {
        let (a, b) = (flat / n2, flat % n2);
        matrices[i][(b, a)]
    })
}

/// Rows `Y_i ∈ ℂ^{n₁}` and `Z_i ∈ ℂ^{n₂}` of the structured map
/// `X ↦ (tr(Z_iᵗ Y_i X))_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredRows {
    y: ComplexMatrix,
    z: ComplexMatrix,
}

impl StructuredRows {
    pub fn new(y: ComplexMatrix, z: ComplexMatrix) -> Result<Self> {
        if y.rows() != z.rows() {
            return Err(Error::shape("StructuredRows::new", (y.rows(), z.cols()), z.shape()));
        }
        Ok(StructuredRows { y, z })
    }

    /// Gaussian `Y` (`m × n₁`) and `Z` (`m × n₂`).
    pub fn random(n1: usize, n2: usize, m: usize, seed: u64) -> Self {
        StructuredRows {
            y: gaussian_matrix(m, n1, derive_seed(seed, &[0])),
            z: gaussian_matrix(m, n2, derive_seed(seed, &[1])),
        }
    }

    pub fn y(&self) -> &ComplexMatrix {
        &self.y
    }

    pub fn z(&self) -> &ComplexMatrix {
        &self.z
    }

    pub fn m(&self) -> usize {
        self.y.rows()
    }

    /// Factored evaluation `((Y_i·u)(Z_i·v))_i`.
    pub fn apply_bilinear(&self, u: &[C64], v: &[C64]) -> Result<ComplexVector> {
        let yu = self.y.matvec(u)?;
        let zv = self.z.matvec(v)?;
        Ok(yu.iter().zip(zv.iter()).map(|(a, b)| a * b).collect())
    }
}

/// The lifted map whose `i`-th matrix is `Z_iᵗ Y_i` (an `n₂ × n₁` outer
/// product of the two rows).
pub fn from_structured(rows: &StructuredRows) -> MeasurementMap {
    let (n1, n2) = (rows.y.cols(), rows.z.cols());
    let matrices = (0..rows.m())
        .map(|i| ComplexMatrix::outer(rows.z.row(i), rows.y.row(i)))
        .collect();
    MeasurementMap::new(n1, n2, matrices).expect("outer products have the right shape")
}

/// `m` i.i.d. Gaussian `Y_i`, the `i`-th keyed by a seed derived from `(seed, i)`.
pub fn random_dense_map(n1: usize, n2: usize, m: usize, seed: u64) -> Result<MeasurementMap> {
    if m == 0 {
        return Err(Error::Precondition("random_dense_map needs m >= 1".into()));
    }
    let matrices = (0..m as u64).map(|i| gaussian_matrix(n2, n1, derive_seed(seed, &[i]))).collect();
    MeasurementMap::new(n1, n2, matrices)
}

/// Reduces a map on `M(N₁, N₂)` to `M(k, l)` through coordinate bases:
/// `B̃(x, y) = B(E x, D y)`, i.e. `Ỹ_i = Dᵗ Y_i E`.
pub fn restrict_to_subspaces(
    map: &MeasurementMap,
    e: &ComplexMatrix,
    d: &ComplexMatrix,
    rank_tol: f64,
) -> Result<MeasurementMap> {
    if e.rows() != map.n1 {
        return Err(Error::shape("restrict_to_subspaces (E)", (map.n1, e.cols()), e.shape()));
    }
    if d.rows() != map.n2 {
        return Err(Error::shape("restrict_to_subspaces (D)", (map.n2, d.cols()), d.shape()));
    }
    for (name, basis) in [("E", e), ("D", d)] {
        let r = numeric_rank(basis, rank_tol)?;
        if r != basis.cols() {
            return Err(Error::Precondition(format!(
                "basis {name} has rank {r} < {} columns",
                basis.cols()
            )));
        }
    }
    let dt = d.transpose();
    let matrices = map
        .matrices
        .iter()
        .map(|y| dt.matmul(y)?.matmul(e))
        .collect::<Result<Vec<_>>>()?;
    MeasurementMap::new(e.cols(), d.cols(), matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_vector, rng_from_seed, ONE, ZERO};

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn vectorization_reads_entries() {
        let x = gaussian_matrix(3, 2, 1);
        let map = MeasurementMap::vectorization(3, 2);
        let out = map.apply_linear(&x).unwrap();
        assert_eq!(&out[..], x.as_slice());
        for (i, y) in map.matrices().iter().enumerate() {
            let (a, b) = (i / 2, i % 2);
            for r in 0..2 {
                for c in 0..3 {
                    assert_eq!(y[(r, c)], if (r, c) == (b, a) { ONE } else { ZERO });
                }
            }
        }
    }

    #[test]
    fn zero_input_gives_zero() {
        let map = random_dense_map(3, 4, 5, 2).unwrap();
        let out = map.apply_linear(&ComplexMatrix::zeros(3, 4)).unwrap();
        assert!(out.iter().all(|z| *z == ZERO));
        let u = ComplexVector::zeros(3);
        let v = gaussian_vector(&mut rng_from_seed(1), 4);
        assert!(map.apply_bilinear(&u, &v).unwrap().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn trace_matches_double_sum() {
        let map = random_dense_map(3, 4, 6, 9).unwrap();
        let x = gaussian_matrix(3, 4, 10);
        let out = map.apply_linear(&x).unwrap();
        for (i, y) in map.matrices().iter().enumerate() {
            let mut s = ZERO;
            for a in 0..4 {
                for b in 0..3 {
                    s += y[(a, b)] * x[(b, a)];
                }
            }
            assert!((out[i] - s).norm() < 1e-12);
            assert!((out[i] - y.matmul(&x).unwrap().trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let map = random_dense_map(3, 4, 2, 0).unwrap();
        let err = map.apply_linear(&ComplexMatrix::zeros(4, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("3x4") && msg.contains("4x3"), "{msg}");
        assert!(map.apply_bilinear(&[ONE; 2], &[ONE; 4]).is_err());
    }

    #[test]
    fn bilinear_scaling_orbit() {
        let map = random_dense_map(3, 3, 5, 4).unwrap();
        let mut rng = rng_from_seed(5);
        let u = gaussian_vector(&mut rng, 3);
        let v = gaussian_vector(&mut rng, 3);
        let lambda = C64::new(0.3, -2.0);
        let a = map.apply_bilinear(&u, &v).unwrap();
        let b = map.apply_bilinear(&u.scaled(lambda), &v.scaled(lambda.inv())).unwrap();
        assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn structured_rows_factor() {
        let rows = StructuredRows::new(
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0]]),
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0, 0.0]]),
        )
        .unwrap();
        let map = from_structured(&rows);
        let u = gaussian_vector(&mut rng_from_seed(1), 2);
        let v = gaussian_vector(&mut rng_from_seed(2), 3);
        let out = map.apply_bilinear(&u, &v).unwrap();
        assert!((out[0] - u[0] * v[0]).norm() < 1e-15);

        let rows = StructuredRows::random(3, 4, 7, 8);
        let map = from_structured(&rows);
        for y in map.matrices() {
            assert!(numeric_rank(y, 1e-10).unwrap() <= 1);
        }
        let u = gaussian_vector(&mut rng_from_seed(3), 3);
        let v = gaussian_vector(&mut rng_from_seed(4), 4);
        assert!(close(
            &map.apply_bilinear(&u, &v).unwrap(),
            &rows.apply_bilinear(&u, &v).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn mismatched_structured_rows_rejected() {
        assert!(StructuredRows::new(gaussian_matrix(3, 2, 1), gaussian_matrix(4, 2, 1)).is_err());
    }

    #[test]
    fn dense_map_generic_rank() {
        for seed in 0..20 {
            let map = random_dense_map(3, 2, 6, seed).unwrap();
            assert_eq!(numeric_rank(map.stacked(), 1e-8).unwrap(), 6);
        }
        let map = random_dense_map(3, 3, 5, 77).unwrap();
        let k = crate::numerics::kernel_basis(map.stacked(), 1e-8).unwrap();
        assert_eq!(k.cols(), 4);
        assert_eq!(random_dense_map(2, 2, 3, 1).unwrap(), random_dense_map(2, 2, 3, 1).unwrap());
        assert!(random_dense_map(2, 2, 0, 1).is_err());
    }

    #[test]
    fn restriction_identity_and_scalar() {
        let map = random_dense_map(3, 4, 5, 12).unwrap();
        let same = restrict_to_subspaces(&map, &ComplexMatrix::identity(3), &ComplexMatrix::identity(4), 1e-8).unwrap();
        assert_eq!(same, map);

        let e = gaussian_matrix(3, 1, 1);
        let d = gaussian_matrix(4, 1, 2);
        let r = restrict_to_subspaces(&map, &e, &d, 1e-8).unwrap();
        let base = map.apply_bilinear(&e.column(0), &d.column(0)).unwrap();
        let (x, y) = (C64::new(2.0, 1.0), C64::new(-0.5, 3.0));
        let out = r.apply_bilinear(&[x], &[y]).unwrap();
        let expected: Vec<C64> = base.iter().map(|b| b * x * y).collect();
        assert!(close(&out, &expected, 1e-12));
    }

    #[test]
    fn restriction_probe_oracle() {
        let map = random_dense_map(5, 4, 6, 31).unwrap();
        let e = gaussian_matrix(5, 3, 32);
        let d = gaussian_matrix(4, 2, 33);
        let r = restrict_to_subspaces(&map, &e, &d, 1e-8).unwrap();
        let mut rng = rng_from_seed(34);
        for _ in 0..50 {
            let x = gaussian_vector(&mut rng, 3);
            let y = gaussian_vector(&mut rng, 2);
            let lhs = r.apply_bilinear(&x, &y).unwrap();
            let rhs = map.apply_bilinear(&e.matvec(&x).unwrap(), &d.matvec(&y).unwrap()).unwrap();
            let scale = 1.0 + rhs.norm();
            assert!(close(&lhs, &rhs, 1e-12 * scale));
        }
    }

    #[test]
    fn rank_deficient_basis_rejected() {
        let map = random_dense_map(3, 3, 4, 1).unwrap();
        let col = gaussian_matrix(3, 1, 5).column(0);
        let e = ComplexMatrix::from_columns(3, &[col.clone(), col]);
        let err = restrict_to_subspaces(&map, &e, &ComplexMatrix::identity(3), 1e-8).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn json_round_trip() {
        let map = random_dense_map(2, 3, 4, 6).unwrap();
        let text = serde_json::to_string(&map).unwrap();
        let back: MeasurementMap = serde_json::from_str(&text).unwrap();
        assert_eq!(back, map);
        let bad = text.replace("\"m\":4", "\"m\":5");
        assert!(serde_json::from_str::<MeasurementMap>(&bad).is_err());
    }
}
