//! Algebraic curvature tensors and Jacobi operators.
//!
//! Storage convention: `R[i][j][k][l] = R(e_i, e_j, e_k, e_l) = <R(e_i, e_j) e_k, e_l>`
//! in an orthonormal basis, with the sphere generator `R1(X,Y)Z = <Y,Z>X - <X,Z>Y`,
//! so the Jacobi operator of the unit sphere tensor has eigenvalues {0, +1, ..., +1}.
//!
//! Conventions note: some references index the Jacobi quadratic form as
//! R(X, u, X, u). Under the storage convention here that quantity is
//! `evaluate(u, X, X, u)`, i.e. `jacobi_form(X, X, u, u)`; the polarized form
//! [`jacobi_form`] is the dictionary between the two slot orders.

use crate::error::{CurvError, Result, SymmetryKind};
use crate::linalg::{dot, norm, SquareMatrix};
use crate::scalar::{as_f64, real, Real};

/// Relative tolerance for the four symmetry identities.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense rank-4 array with no symmetry assumed; raw material for projection.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTensor<S> {
    n: usize,
    components: Vec<S>,
}

impl<S: Real> RawTensor<S> {
    pub fn new(n: usize, components: Vec<S>) -> Result<Self> {
        let expected = n * n * n * n;
        if components.len() != expected {
            return Err(CurvError::ShapeMismatch { n, expected, got: components.len() });
        }
        Ok(Self { n, components })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, components: vec![S::zero(); n * n * n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[S] {
        &self.components
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> S {
        self.components[flat_index(self.n, i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: S) {
        self.components[flat_index(self.n, i, j, k, l)] = value;
    }

    fn first_non_finite(&self) -> Option<(usize, usize, usize, usize)> {
        let n = self.n;
        self.components
            .iter()
            .position(|x| !x.is_finite())
            .map(|p| unflatten_index(n, p))
    }
}

#[inline]
pub fn flat_index(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

fn unflatten_index(n: usize, p: usize) -> (usize, usize, usize, usize) {
    let l = p % n;
    let k = (p / n) % n;
    let j = (p / (n * n)) % n;
    let i = p / (n * n * n);
    (i, j, k, l)
}

/// Rank-4 tensor with the curvature symmetries, validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicCurvatureTensor<S> {
    n: usize,
    components: Vec<S>,
}

/// Worst violation of one symmetry identity, with the offending index.
#[derive(Clone, Debug)]
pub struct SymmetryViolation<S> {
    pub identity: SymmetryKind,
    pub max_violation: S,
    pub index: (usize, usize, usize, usize),
}

impl<S: Real> AlgebraicCurvatureTensor<S> {
    /// Validates `data` against all four symmetry identities (relative to
    /// max |component|, floor 1) and returns the tensor if they hold.
    pub fn from_dense(n: usize, data: Vec<S>) -> Result<Self> {
        let raw = RawTensor::new(n, data)?;
        if let Some((i, j, k, l)) = raw.first_non_finite() {
            return Err(CurvError::NonFinite { i, j, k, l });
        }
        let tensor = Self { n, components: raw.components };
        let scale = tensor.component_scale();
        let tol = real::<S>(SYMMETRY_TOL) * scale;
        for v in tensor.validate_symmetries() {
            if v.max_violation > tol {
                let (i, j, k, l) = v.index;
                return Err(CurvError::SymmetryViolation {
                    identity: v.identity,
                    violation: as_f64(v.max_violation),
                    i,
                    j,
                    k,
                    l,
                    tolerance: as_f64(tol),
                });
            }
        }
        Ok(tensor)
    }

    /// Zero tensor, trivially valid.
    pub fn zeros(n: usize) -> Self {
        Self { n, components: vec![S::zero(); n * n * n * n] }
    }

    /// Skips validation; for generator code whose output is symmetric by
    /// construction. Generators remain covered by the validation tests.
    pub(crate) fn from_components_unchecked(n: usize, components: Vec<S>) -> Self {
        debug_assert_eq!(components.len(), n * n * n * n);
        Self { n, components }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[S] {
        &self.components
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> S {
        self.components[flat_index(self.n, i, j, k, l)]
    }

    /// max(1, max |component|); the reference scale for relative tolerances.
    pub fn component_scale(&self) -> S {
        self.components
            .iter()
            .fold(S::one(), |acc, &x| acc.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> S {
        self.components.iter().map(|&x| x * x).sum::<S>().sqrt()
    }

    /// Worst absolute violation of each of the four symmetry identities.
    pub fn validate_symmetries(&self) -> Vec<SymmetryViolation<S>> {
        validate_components(self.n, &self.components)
    }

    /// Componentwise linear combination `self + c * other`.
    pub fn add_scaled(&self, other: &Self, c: S) -> Result<Self> {
        if self.n != other.n {
            return Err(CurvError::DimensionMismatch { expected: self.n, got: other.n });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(&a, &b)| a + c * b)
            .collect();
        Ok(Self { n: self.n, components })
    }

    pub fn scale(&self, c: S) -> Self {
        Self {
            n: self.n,
            components: self.components.iter().map(|&x| x * c).collect(),
        }
    }

    /// Conjugates by an orthogonal matrix: components in the rotated basis
    /// with basis vectors `q.column(a)`.
    pub fn conjugate(&self, q: &SquareMatrix<S>) -> Self {
        assert_eq!(q.n(), self.n);
        let n = self.n;
        // contract one slot at a time, O(n^5)
        let mut cur = self.components.clone();
        for _slot in 0..4 {
            // rotate the last slot, then cycle slots so each gets rotated once
            let mut next = vec![S::zero(); cur.len()];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for a in 0..n {
                            let mut s = S::zero();
                            for l in 0..n {
                                s = s + cur[flat_index(n, i, j, k, l)] * q[(l, a)];
                            }
                            // cycle (i,j,k,a) -> slot order (a,i,j,k)
                            next[flat_index(n, a, i, j, k)] = s;
                        }
                    }
                }
            }
            cur = next;
        }
        Self { n, components: cur }
    }

    /// Quadrilinear contraction sum R[i][j][k][l] X_i Y_j Z_k W_l.
    pub fn evaluate(&self, x: &[S], y: &[S], z: &[S], w: &[S]) -> Result<S> {
        let n = self.n;
        for v in [x, y, z, w] {
            if v.len() != n {
                return Err(CurvError::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        let mut total = S::zero();
        for i in 0..n {
            if x[i] == S::zero() {
                continue;
            }
            for j in 0..n {
                if y[j] == S::zero() {
                    continue;
                }
                let xy = x[i] * y[j];
                for k in 0..n {
                    if z[k] == S::zero() {
                        continue;
                    }
                    let xyz = xy * z[k];
                    let base = flat_index(n, i, j, k, 0);
                    let mut inner = S::zero();
                    for l in 0..n {
                        inner = inner + self.components[base + l] * w[l];
                    }
                    total = total + xyz * inner;
                }
            }
        }
        Ok(total)
    }

    /// Jacobi operator at a unit vector: `M[a][b] = R(e_a, X, X, e_b)`.
    pub fn jacobi_operator(&self, x: &[S]) -> Result<JacobiOperator<S>> {
        let n = self.n;
        if x.len() != n {
            return Err(CurvError::DimensionMismatch { expected: n, got: x.len() });
        }
        let len = norm(x);
        if (len - S::one()).abs() > real::<S>(1e-12) {
            return Err(CurvError::NotUnit { norm: as_f64(len) });
        }
        let mut m = SquareMatrix::zeros(n);
        for a in 0..n {
            for b in 0..=a {
                // bilinear contraction over the two middle slots
                let mut s = S::zero();
                for j in 0..n {
                    if x[j] == S::zero() {
                        continue;
                    }
                    let base = flat_index(n, a, j, 0, b);
                    let mut inner = S::zero();
                    for k in 0..n {
                        inner = inner + self.components[base + k * n] * x[k];
                    }
                    s = s + x[j] * inner;
                }
                m[(a, b)] = s;
                m[(b, a)] = s;
            }
        }
        Ok(JacobiOperator { base: x.to_vec(), matrix: m })
    }

    /// Polarized Jacobi form `(R(u,X,Y,v) + R(u,Y,X,v)) / 2`; symmetric in
    /// (X,Y) and in (u,v), and `jacobi_form(X,X,u,u) = <R_X u, u>` for unit X.
    pub fn jacobi_form(&self, x: &[S], y: &[S], u: &[S], v: &[S]) -> Result<S> {
        let a = self.evaluate(u, x, y, v)?;
        let b = self.evaluate(u, y, x, v)?;
        Ok((a + b) / real::<S>(2.0))
    }
}

fn validate_components<S: Real>(n: usize, c: &[S]) -> Vec<SymmetryViolation<S>> {
    let g = |i: usize, j: usize, k: usize, l: usize| c[flat_index(n, i, j, k, l)];
    let mut worst = [
        (SymmetryKind::FirstPairAntisymmetry, S::zero(), (0, 0, 0, 0)),
        (SymmetryKind::LastPairAntisymmetry, S::zero(), (0, 0, 0, 0)),
        (SymmetryKind::PairExchange, S::zero(), (0, 0, 0, 0)),
        (SymmetryKind::FirstBianchi, S::zero(), (0, 0, 0, 0)),
    ];
    let mut consider = |slot: usize, v: S, idx: (usize, usize, usize, usize)| {
        if v.abs() > worst[slot].1 {
            worst[slot].1 = v.abs();
            worst[slot].2 = idx;
        }
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let r = g(i, j, k, l);
                    consider(0, r + g(j, i, k, l), (i, j, k, l));
                    consider(1, r + g(i, j, l, k), (i, j, k, l));
                    consider(2, r - g(k, l, i, j), (i, j, k, l));
                    consider(3, r + g(j, k, i, l) + g(k, i, j, l), (i, j, k, l));
                }
            }
        }
    }
    worst
        .into_iter()
        .map(|(identity, max_violation, index)| SymmetryViolation { identity, max_violation, index })
        .collect()
}

/// Orthogonal projection (Frobenius inner product) of an arbitrary rank-4
/// array onto the curvature-symmetry subspace: antisymmetrize the pairs,
/// symmetrize pair exchange, then drop the totally antisymmetric part via
/// `id - (1/3) sigma`, sigma the cyclic sum over the first three slots.
pub fn project_to_curvature<S: Real>(raw: &RawTensor<S>) -> Result<AlgebraicCurvatureTensor<S>> {
    if let Some((i, j, k, l)) = raw.first_non_finite() {
        return Err(CurvError::NonFinite { i, j, k, l });
    }
    let n = raw.n();
    let quarter = real::<S>(0.25);
    let half = real::<S>(0.5);
    let third = S::one() / real::<S>(3.0);

    let mut a = RawTensor::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = quarter
                        * (raw.get(i, j, k, l) - raw.get(j, i, k, l) - raw.get(i, j, l, k)
                            + raw.get(j, i, l, k));
                    a.set(i, j, k, l, v);
                }
            }
        }
    }
    let mut b = RawTensor::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    b.set(i, j, k, l, half * (a.get(i, j, k, l) + a.get(k, l, i, j)));
                }
            }
        }
    }
    let mut out = vec![S::zero(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let sigma = b.get(i, j, k, l) + b.get(j, k, i, l) + b.get(k, i, j, l);
                    out[flat_index(n, i, j, k, l)] = b.get(i, j, k, l) - third * sigma;
                }
            }
        }
    }
    Ok(AlgebraicCurvatureTensor { n, components: out })
}

/// Symmetric matrix of the Jacobi operator `R_X : Y -> R(Y,X)X` at a unit
/// base vector, together with that base vector.
#[derive(Clone, Debug)]
pub struct JacobiOperator<S> {
    base: Vec<S>,
    matrix: SquareMatrix<S>,
}

impl<S: Real> JacobiOperator<S> {
    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[S] {
        &self.base
    }

    pub fn matrix(&self) -> &SquareMatrix<S> {
        &self.matrix
    }

    /// `M X`, which is always the zero vector up to roundoff.
    pub fn apply_to_base(&self) -> Vec<S> {
        self.matrix.matvec(&self.base)
    }

    pub fn apply(&self, y: &[S]) -> Vec<S> {
        self.matrix.matvec(y)
    }

    pub fn quadratic_form(&self, u: &[S]) -> S {
        dot(&self.matrix.matvec(u), u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{constant_curvature, random_curvature, single_plane};
    use crate::linalg::basis_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize) -> Vec<f64> {
        basis_vector(n, i)
    }

    #[test]
    fn zero_tensor_is_valid() {
        let t = AlgebraicCurvatureTensor::<f64>::from_dense(2, vec![0.0; 16]).unwrap();
        assert!(t.validate_symmetries().iter().all(|v| v.max_violation == 0.0));
    }

    #[test]
    fn constant_curvature_components_roundtrip_from_dense() {
        let t = constant_curvature::<f64>(3, 1.0);
        let again =
            AlgebraicCurvatureTensor::from_dense(3, t.components().to_vec()).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn lone_component_violates_antisymmetry() {
        let mut data = vec![0.0_f64; 16];
        data[flat_index(2, 0, 1, 0, 1)] = 1.0;
        let err = AlgebraicCurvatureTensor::from_dense(2, data).unwrap_err();
        match err {
            CurvError::SymmetryViolation { identity, .. } => {
                assert_eq!(identity, SymmetryKind::FirstPairAntisymmetry)
            }
            other => panic!("expected symmetry violation, got {other}"),
        }
    }

    #[test]
    fn validate_reports_zero_for_constant_curvature() {
        let t = constant_curvature::<f64>(3, 1.0);
        for v in t.validate_symmetries() {
            assert_eq!(v.max_violation, 0.0, "{} violated", v.identity);
        }
    }

    #[test]
    fn validate_random_curvature_within_tolerance() {
        let t = random_curvature::<f64>(4, 1, 1.0);
        let scale = t.component_scale();
        for v in t.validate_symmetries() {
            assert!(v.max_violation <= 1e-12 * scale, "{} violated", v.identity);
        }
    }

    #[test]
    fn unprojected_random_arrays_visibly_break_symmetry() {
        // measure-zero chance a Gaussian array is symmetric; check 100 seeds
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3;
            let data: Vec<f64> = (0..n * n * n * n).map(|_| f64::standard_normal(&mut rng)).collect();
            let worst = validate_components(n, &data)
                .into_iter()
                .map(|v| v.max_violation)
                .fold(0.0, f64::max);
            assert!(worst > 0.1, "seed {seed} produced symmetric-looking noise ({worst})");
        }
    }

    #[test]
    fn projection_fixes_valid_tensors() {
        let t = constant_curvature::<f64>(3, 1.0);
        let raw = RawTensor::new(3, t.components().to_vec()).unwrap();
        let p = project_to_curvature(&raw).unwrap();
        for (a, b) in t.components().iter().zip(p.components()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn projection_annihilates_four_forms() {
        // omega(e0,e1,e2,e3) = 1, fully antisymmetrized over all 24 slot orders
        let n = 4;
        let mut raw = RawTensor::<f64>::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let p = [i, j, k, l];
                        let distinct = (0..4).all(|a| (0..a).all(|b| p[a] != p[b]));
                        if !distinct {
                            continue;
                        }
                        let mut inversions = 0;
                        for a in 0..4 {
                            for b in a + 1..4 {
                                if p[a] > p[b] {
                                    inversions += 1;
                                }
                            }
                        }
                        raw.set(i, j, k, l, if inversions % 2 == 0 { 1.0 } else { -1.0 });
                    }
                }
            }
        }
        let projected = project_to_curvature(&raw).unwrap();
        let max = projected.components().iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        assert!(max <= 1e-15, "four-form survived projection: {max}");
    }

    #[test]
    fn projection_output_is_valid_curvature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let data: Vec<f64> = (0..n * n * n * n).map(|_| f64::standard_normal(&mut rng)).collect();
        let raw = RawTensor::new(n, data).unwrap();
        let p = project_to_curvature(&raw).unwrap();
        let scale = p.component_scale();
        for v in p.validate_symmetries() {
            assert!(v.max_violation <= 1e-12 * scale, "{} violated", v.identity);
        }
    }

    #[test]
    fn projection_rejects_non_finite() {
        let mut raw = RawTensor::<f64>::zeros(2);
        raw.set(0, 1, 0, 1, f64::NAN);
        assert!(matches!(project_to_curvature(&raw), Err(CurvError::NonFinite { .. })));
    }

    #[test]
    fn evaluate_on_constant_curvature() {
        let t = constant_curvature::<f64>(3, 1.0);
        // <Y,Z><X,W> - <X,Z><Y,W> with X=e0, Y=e1, Z=e1, W=e0 gives 1
        let v = t.evaluate(&e(3, 0), &e(3, 1), &e(3, 1), &e(3, 0)).unwrap();
        assert_eq!(v, 1.0);
        let v = t.evaluate(&e(3, 0), &e(3, 1), &e(3, 0), &e(3, 1)).unwrap();
        assert_eq!(v, -1.0);
    }

    #[test]
    fn evaluate_repeated_first_pair_vanishes() {
        let t = random_curvature::<f64>(4, 3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..4).map(|_| f64::standard_normal(&mut rng)).collect();
        let z: Vec<f64> = (0..4).map(|_| f64::standard_normal(&mut rng)).collect();
        let w: Vec<f64> = (0..4).map(|_| f64::standard_normal(&mut rng)).collect();
        let v = t.evaluate(&x, &x, &z, &w).unwrap();
        assert!(v.abs() <= 1e-12 * t.component_scale());
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let t = constant_curvature::<f64>(3, 1.0);
        assert!(matches!(
            t.evaluate(&e(2, 0), &e(3, 1), &e(3, 1), &e(3, 0)),
            Err(CurvError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn jacobi_operator_of_sphere_is_projector() {
        let t = constant_curvature::<f64>(3, 1.0);
        let j = t.jacobi_operator(&e(3, 0)).unwrap();
        let expect = SquareMatrix::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert_eq!(j.matrix(), &expect);
    }

    #[test]
    fn jacobi_operator_kills_base() {
        let t = random_curvature::<f64>(5, 9, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let g: Vec<f64> = (0..5).map(|_| f64::standard_normal(&mut rng)).collect();
            let x = crate::linalg::normalized(&g);
            let j = t.jacobi_operator(&x).unwrap();
            assert!(norm(&j.apply_to_base()) <= 1e-12);
            assert!(j.matrix().symmetry_deviation() <= 1e-12);
        }
    }

    #[test]
    fn jacobi_operator_rejects_non_unit() {
        let t = constant_curvature::<f64>(3, 1.0);
        let err = t.jacobi_operator(&[2.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, CurvError::NotUnit { .. }));
    }

    #[test]
    fn jacobi_form_orthonormal_slots_vanish() {
        let t = constant_curvature::<f64>(3, 1.0);
        // X=e0, Y=e2, u=v=e1: polarization of lambda(<X,Y><u,u> - <X,u><Y,u>)
        let v = t.jacobi_form(&e(3, 0), &e(3, 2), &e(3, 1), &e(3, 1)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn jacobi_form_diagonal_matches_quadratic_form() {
        let t = random_curvature::<f64>(4, 11, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let x = crate::linalg::normalized(
                &(0..4).map(|_| f64::standard_normal(&mut rng)).collect::<Vec<_>>(),
            );
            let u: Vec<f64> = (0..4).map(|_| f64::standard_normal(&mut rng)).collect();
            let lhs = t.jacobi_form(&x, &x, &u, &u).unwrap();
            let rhs = t.jacobi_operator(&x).unwrap().quadratic_form(&u);
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn jacobi_form_single_plane_dead_slot() {
        let t = single_plane::<f64>(3);
        let v = t.jacobi_form(&e(3, 0), &e(3, 2), &e(3, 1), &e(3, 1)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn single_plane_jacobi_spectrum_at_diagonal_direction() {
        let t = single_plane::<f64>(3);
        let x = vec![1.0 / 2.0_f64.sqrt(), 0.0, 1.0 / 2.0_f64.sqrt()];
        let j = t.jacobi_operator(&x).unwrap();
        let eig = crate::linalg::symmetric_eigen(j.matrix()).unwrap();
        assert!((eig.values[0]).abs() <= 1e-15);
        assert!((eig.values[1]).abs() <= 1e-15);
        assert!((eig.values[2] - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn from_dense_shape_mismatch() {
        assert!(matches!(
            AlgebraicCurvatureTensor::<f64>::from_dense(3, vec![0.0; 80]),
            Err(CurvError::ShapeMismatch { .. })
        ));
    }
}
