//! Spectral analysis of Jacobi operators over the unit sphere: eigenvalue
//! profiles with clustering, the Osserman checker (spectrum independent of
//! the direction), the duality checker (eigenvector duality between base
//! points), and first-order eigenvalue-branch derivatives along sphere
//! geodesics, including the degenerate (Rellich) branch matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CurvError, Result};
use crate::linalg::{
    characteristic_polynomial, dot, norm, normalized, reject, symmetric_eigen, SquareMatrix,
    SymmetricEigen,
};
use crate::scalar::{as_f64, real, Real};
use crate::tensor::{AlgebraicCurvatureTensor, JacobiOperator};

/// Default pass tolerance for the Osserman and duality verdicts.
pub const DEFAULT_CHECK_TOL: f64 = 1e-8;
/// Default random probes per eigenspace in the duality checker.
pub const DEFAULT_PROBES_PER_EIGENSPACE: usize = 4;
/// Default step for branch finite differences.
pub const DEFAULT_BRANCH_STEP: f64 = 1e-4;
/// A sample point is regular when all inter-cluster gaps exceed this
/// multiple of the cluster tolerance.
pub const REGULAR_GAP_FACTOR: f64 = 10.0;

/// Eigenvalue clustering threshold. `Auto` resolves to 1e-6 of the spectral
/// range (with a roundoff floor); `Abs` is an absolute gap.
#[derive(Clone, Copy, Debug)]
pub enum ClusterTol<S> {
    Auto,
    Abs(S),
}

impl<S: Real> Default for ClusterTol<S> {
    fn default() -> Self {
        ClusterTol::Auto
    }
}

impl<S: Real> ClusterTol<S> {
    fn resolve(self, sorted: &[S]) -> S {
        match self {
            ClusterTol::Abs(t) => t,
            ClusterTol::Auto => {
                let lo = sorted.first().copied().unwrap_or(S::zero());
                let hi = sorted.last().copied().unwrap_or(S::zero());
                let range = hi - lo;
                let scale = lo.abs().max(hi.abs()).max(S::one());
                (real::<S>(1e-6) * range).max(real::<S>(1e-12) * scale)
            }
        }
    }
}

/// Eigendecomposition with eigenvalues grouped into clusters; the workhorse
/// behind every checker.
#[derive(Clone, Debug)]
pub struct ClusteredEigen<S> {
    pub eigen: SymmetricEigen<S>,
    /// (mean value, start position, length) per cluster, ascending.
    pub clusters: Vec<(S, usize, usize)>,
    pub cluster_tol: S,
}

impl<S: Real> ClusteredEigen<S> {
    pub fn of_matrix(m: &SquareMatrix<S>, tol: ClusterTol<S>) -> Result<Self> {
        let eigen = symmetric_eigen(m)?;
        let cluster_tol = tol.resolve(&eigen.values);
        let mut clusters: Vec<(S, usize, usize)> = Vec::new();
        for i in 0..eigen.values.len() {
            let new_cluster = i == 0 || eigen.values[i] - eigen.values[i - 1] > cluster_tol;
            if new_cluster {
                clusters.push((eigen.values[i], i, 1));
            } else {
                let last = clusters.last_mut().expect("cluster exists");
                last.2 += 1;
            }
        }
        for c in &mut clusters {
            let sum: S = eigen.values[c.1..c.1 + c.2].iter().copied().sum();
            c.0 = sum / real::<S>(c.2 as f64);
        }
        Ok(Self { eigen, clusters, cluster_tol })
    }

    /// Orthonormal basis of the eigenspace of cluster `c` (eigensolver columns).
    pub fn cluster_basis(&self, c: usize) -> Vec<Vec<S>> {
        let (_, start, len) = self.clusters[c];
        (start..start + len).map(|k| self.eigen.eigenvector(k)).collect()
    }

    /// All inter-cluster gaps exceed `REGULAR_GAP_FACTOR * cluster_tol`.
    pub fn is_regular(&self) -> bool {
        let factor = real::<S>(REGULAR_GAP_FACTOR);
        self.clusters
            .windows(2)
            .all(|w| w[1].0 - w[0].0 > factor * self.cluster_tol)
    }

    fn cluster_of_position(&self, k: usize) -> usize {
        self.clusters
            .iter()
            .position(|&(_, start, len)| k >= start && k < start + len)
            .expect("position lies in some cluster")
    }
}

/// Clustered spectrum of one Jacobi operator, plus the characteristic
/// polynomial det(tI - M) computed directly from the matrix
/// (Faddeev-LeVerrier), so it cross-checks the eigensolver.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct SpectralProfile<S> {
    /// Cluster means, strictly increasing with gaps > `cluster_tol`.
    pub eigenvalues: Vec<S>,
    /// Cluster sizes; sums to n.
    pub multiplicities: Vec<usize>,
    pub cluster_tol: S,
    /// n+1 coefficients of det(tI - M), ascending degree, leading 1.
    pub charpoly: Vec<S>,
    /// Sorted eigenvalues with multiplicity (n values).
    pub sorted_eigenvalues: Vec<S>,
    /// All inter-cluster gaps exceed 10x the cluster tolerance.
    pub regular: bool,
}

impl<S: Real> SpectralProfile<S> {
    pub fn from_matrix(m: &SquareMatrix<S>, tol: ClusterTol<S>) -> Result<Self> {
        let clustered = ClusteredEigen::of_matrix(m, tol)?;
        Ok(Self::from_clustered(&clustered, m))
    }

    fn from_clustered(clustered: &ClusteredEigen<S>, m: &SquareMatrix<S>) -> Self {
        Self {
            eigenvalues: clustered.clusters.iter().map(|c| c.0).collect(),
            multiplicities: clustered.clusters.iter().map(|c| c.2).collect(),
            cluster_tol: clustered.cluster_tol,
            charpoly: characteristic_polynomial(m),
            sorted_eigenvalues: clustered.eigen.values.clone(),
            regular: clustered.is_regular(),
        }
    }
}

/// Full eigenvalue profile of a Jacobi operator.
pub fn spectral_profile<S: Real>(
    op: &JacobiOperator<S>,
    tol: ClusterTol<S>,
) -> Result<SpectralProfile<S>> {
    SpectralProfile::from_matrix(op.matrix(), tol)
}

// ---------------------------------------------------------------------------
// Sphere sampling
// ---------------------------------------------------------------------------

/// Unit vectors drawn from the sphere (normalized Gaussians), deterministic
/// in the seed. `regular_flags` is filled once a tensor has been profiled
/// over the sample.
#[derive(Clone, Debug)]
pub struct SphereSample<S> {
    pub points: Vec<Vec<S>>,
    pub seed: u64,
    pub regular_flags: Vec<bool>,
}

impl<S: Real> SphereSample<S> {
    /// Wraps explicit points (each must be unit to 1e-12).
    pub fn from_points(points: Vec<Vec<S>>, seed: u64) -> Result<Self> {
        for p in &points {
            let len = norm(p);
            if (len - S::one()).abs() > real::<S>(1e-12) {
                return Err(CurvError::NotUnit { norm: as_f64(len) });
            }
        }
        Ok(Self { points, seed, regular_flags: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// K normalized standard-Gaussian points on the unit sphere of R^n.
pub fn sample_unit_sphere<S: Real>(n: usize, k: usize, seed: u64) -> SphereSample<S> {
    assert!(k >= 1, "need at least one sample point");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..k)
        .map(|_| {
            loop {
                let g: Vec<S> = (0..n).map(|_| S::standard_normal(&mut rng)).collect();
                let len = norm(&g);
                if len > real::<S>(1e-6) {
                    return g.iter().map(|&x| x / len).collect();
                }
            }
        })
        .collect();
    SphereSample { points, seed, regular_flags: Vec::new() }
}

/// Profiles the tensor at every sample point and records which points are
/// regular (unambiguous clustering).
pub fn flag_regularity<S: Real>(
    sample: &mut SphereSample<S>,
    t: &AlgebraicCurvatureTensor<S>,
    tol: ClusterTol<S>,
) -> Result<()> {
    let flags = sample
        .points
        .iter()
        .map(|x| {
            let op = t.jacobi_operator(x)?;
            Ok(ClusteredEigen::of_matrix(op.matrix(), tol)?.is_regular())
        })
        .collect::<Result<Vec<_>>>()?;
    sample.regular_flags = flags;
    Ok(())
}

fn mix_seed(seed: u64, index: usize) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1)
}

// ---------------------------------------------------------------------------
// Osserman checker
// ---------------------------------------------------------------------------

/// The two sample points whose sorted spectra differ the most.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct OssermanWitness<S> {
    pub sample_a: usize,
    pub sample_b: usize,
    pub point_a: Vec<S>,
    pub point_b: Vec<S>,
    /// Index into the sorted eigenvalue vector where the spread is achieved.
    pub coordinate: usize,
    pub value_a: S,
    pub value_b: S,
}

/// Constancy check of the Jacobi spectrum over the sphere.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct OssermanReport<S> {
    /// Max over sample pairs of the l-inf distance between sorted spectra.
    pub profile_spread: S,
    /// Max over samples and coefficient index of |c_k(X) - median c_k|.
    pub coeff_spread: S,
    pub tolerance: S,
    pub verdict: bool,
    pub samples: usize,
    pub regular_count: usize,
    pub witness: OssermanWitness<S>,
    /// Sorted spectrum per sample, for CSV emission.
    #[serde(skip)]
    pub sample_eigenvalues: Vec<Vec<S>>,
    #[serde(skip)]
    pub regular_flags: Vec<bool>,
}

pub fn osserman_report<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    sample: &SphereSample<S>,
    tol: ClusterTol<S>,
    tolerance: S,
) -> Result<OssermanReport<S>> {
    let n = t.n();
    let profiles: Vec<SpectralProfile<S>> = sample
        .points
        .par_iter()
        .map(|x| spectral_profile(&t.jacobi_operator(x)?, tol))
        .collect::<Result<Vec<_>>>()?;

    let k = profiles.len();
    let mut spread = S::zero();
    let mut witness = OssermanWitness {
        sample_a: 0,
        sample_b: 0,
        point_a: sample.points[0].clone(),
        point_b: sample.points[0].clone(),
        coordinate: 0,
        value_a: profiles[0].sorted_eigenvalues[0],
        value_b: profiles[0].sorted_eigenvalues[0],
    };
    for coord in 0..n {
        let (mut lo, mut hi) = (0usize, 0usize);
        for s in 1..k {
            if profiles[s].sorted_eigenvalues[coord] < profiles[lo].sorted_eigenvalues[coord] {
                lo = s;
            }
            if profiles[s].sorted_eigenvalues[coord] > profiles[hi].sorted_eigenvalues[coord] {
                hi = s;
            }
        }
        let gap = profiles[hi].sorted_eigenvalues[coord] - profiles[lo].sorted_eigenvalues[coord];
        if gap > spread {
            spread = gap;
            witness = OssermanWitness {
                sample_a: lo,
                sample_b: hi,
                point_a: sample.points[lo].clone(),
                point_b: sample.points[hi].clone(),
                coordinate: coord,
                value_a: profiles[lo].sorted_eigenvalues[coord],
                value_b: profiles[hi].sorted_eigenvalues[coord],
            };
        }
    }

    let mut coeff_spread = S::zero();
    for ci in 0..=n {
        let mut column: Vec<S> = profiles.iter().map(|p| p.charpoly[ci]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
        let median = if k % 2 == 1 {
            column[k / 2]
        } else {
            (column[k / 2 - 1] + column[k / 2]) / real::<S>(2.0)
        };
        for p in &profiles {
            coeff_spread = coeff_spread.max((p.charpoly[ci] - median).abs());
        }
    }

    let regular_flags: Vec<bool> = profiles.iter().map(|p| p.regular).collect();
    Ok(OssermanReport {
        profile_spread: spread,
        coeff_spread,
        tolerance,
        verdict: spread <= tolerance,
        samples: k,
        regular_count: regular_flags.iter().filter(|&&f| f).count(),
        witness,
        sample_eigenvalues: profiles.into_iter().map(|p| p.sorted_eigenvalues).collect(),
        regular_flags,
    })
}

impl<S: Real> OssermanReport<S> {
    /// One row per sample: `sample,regular,lambda_0,...,lambda_{n-1}`.
    pub fn to_csv(&self) -> String {
        let n = self.sample_eigenvalues.first().map_or(0, |v| v.len());
        let mut out = String::from("sample,regular");
        for i in 0..n {
            out.push_str(&format!(",lambda_{i}"));
        }
        out.push('\n');
        for (s, vals) in self.sample_eigenvalues.iter().enumerate() {
            out.push_str(&format!("{s},{}", self.regular_flags[s]));
            for v in vals {
                out.push_str(&format!(",{}", as_f64(*v)));
            }
            out.push('\n');
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Duality checker
// ---------------------------------------------------------------------------

/// One tested eigenpair: Y in the lambda-eigenspace of R_X, with the
/// residual |R_Y X - lambda X|.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct DualityRecord<S> {
    pub sample: usize,
    pub base: Vec<S>,
    pub eigenvalue: S,
    pub probe: Vec<S>,
    pub residual: S,
}

/// Eigenvector-duality check: for every eigenpair (lambda, Y) of R_X, X must
/// be a lambda-eigenvector of R_Y.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct DualityReport<S> {
    pub max_residual: S,
    pub tolerance: S,
    pub verdict: bool,
    pub samples: usize,
    pub probes_per_eigenspace: usize,
    pub witness: DualityRecord<S>,
    #[serde(skip)]
    pub records: Vec<DualityRecord<S>>,
}

pub fn duality_report<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    sample: &SphereSample<S>,
    tol: ClusterTol<S>,
    tolerance: S,
    probes_per_eigenspace: usize,
) -> Result<DualityReport<S>> {
    let near_one = S::one() - real::<S>(1e-9);
    let per_sample: Vec<Vec<DualityRecord<S>>> = sample
        .points
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let op = t.jacobi_operator(x)?;
            let clustered = ClusteredEigen::of_matrix(op.matrix(), tol)?;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(sample.seed, idx));
            let mut records = Vec::new();
            for (c, &(value, _, len)) in clustered.clusters.iter().enumerate() {
                let basis = clustered.cluster_basis(c);
                let mut probes: Vec<Vec<S>> = basis.clone();
                for _ in 0..probes_per_eigenspace {
                    if len == 1 {
                        break; // the eigenspace has only one direction
                    }
                    let coeffs: Vec<S> =
                        (0..len).map(|_| S::standard_normal(&mut rng)).collect();
                    let mut y = vec![S::zero(); x.len()];
                    for (ci, b) in coeffs.iter().zip(&basis) {
                        for (yi, bi) in y.iter_mut().zip(b) {
                            *yi = *yi + *ci * *bi;
                        }
                    }
                    probes.push(y);
                }
                for y in probes {
                    let y = normalized(&y);
                    if dot(&y, x).abs() >= near_one {
                        continue; // trivial pair Y = +-X
                    }
                    let ry = t.jacobi_operator(&y)?;
                    let image = ry.apply(x);
                    let residual = image
                        .iter()
                        .zip(x)
                        .map(|(&a, &b)| {
                            let d = a - value * b;
                            d * d
                        })
                        .sum::<S>()
                        .sqrt();
                    records.push(DualityRecord {
                        sample: idx,
                        base: x.clone(),
                        eigenvalue: value,
                        probe: y,
                        residual,
                    });
                }
            }
            Ok(records)
        })
        .collect::<Result<Vec<_>>>()?;

    let records: Vec<DualityRecord<S>> = per_sample.into_iter().flatten().collect();
    let mut max_residual = S::zero();
    let mut witness_idx = 0;
    for (i, r) in records.iter().enumerate() {
        if r.residual > max_residual {
            max_residual = r.residual;
            witness_idx = i;
        }
    }
    let witness = records.get(witness_idx).cloned().unwrap_or(DualityRecord {
        sample: 0,
        base: sample.points.first().cloned().unwrap_or_default(),
        eigenvalue: S::zero(),
        probe: Vec::new(),
        residual: S::zero(),
    });
    Ok(DualityReport {
        max_residual,
        tolerance,
        verdict: max_residual <= tolerance,
        samples: sample.len(),
        probes_per_eigenspace,
        witness,
        records,
    })
}

impl<S: Real> DualityReport<S> {
    /// One row per eigenpair record: `sample,eigenvalue,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,eigenvalue,residual\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{}\n",
                r.sample,
                as_f64(r.eigenvalue),
                as_f64(r.residual)
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Branch derivatives
// ---------------------------------------------------------------------------

/// Picks an eigenvalue cluster of a profile.
#[derive(Clone, Copy, Debug)]
pub enum ClusterSelector<S> {
    /// Cluster index, ascending order.
    Index(usize),
    /// Cluster whose mean is nearest this value.
    Nearest(S),
}

impl<S: Real> ClusterSelector<S> {
    fn resolve(self, clustered: &ClusteredEigen<S>) -> Result<usize> {
        match self {
            ClusterSelector::Index(i) => {
                if i < clustered.clusters.len() {
                    Ok(i)
                } else {
                    Err(CurvError::NoSuchCluster(format!(
                        "index {i} out of range ({} clusters)",
                        clustered.clusters.len()
                    )))
                }
            }
            ClusterSelector::Nearest(v) => clustered
                .clusters
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (a.0 - v).abs().partial_cmp(&(b.0 - v).abs()).expect("finite")
                })
                .map(|(i, _)| i)
                .ok_or_else(|| CurvError::NoSuchCluster("empty spectrum".into())),
        }
    }
}

/// Derivative of one eigenvalue branch along the sphere geodesic
/// `cos(phi) X + sin(phi) Y`, by central finite differences and by the
/// first-order formula `2 R(Y, e0, X, e0)` (the `e'(0)` term vanishes for a
/// symmetric operator, so it is never computed).
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct BranchDerivative<S> {
    pub base: Vec<S>,
    pub direction: Vec<S>,
    pub eigenvalue: S,
    pub eigenvector: Vec<S>,
    pub step: S,
    pub fd_value: S,
    pub analytic_value: S,
}

const OVERLAP_THRESHOLD: f64 = 0.9;

fn check_branch_inputs<S: Real>(x: &[S], y: &[S], h: S) -> Result<()> {
    for v in [x, y] {
        let len = norm(v);
        if (len - S::one()).abs() > real::<S>(1e-12) {
            return Err(CurvError::NotUnit { norm: as_f64(len) });
        }
    }
    let overlap = dot(x, y).abs();
    if overlap > real::<S>(1e-10) {
        return Err(CurvError::NotOrthogonal { dot: as_f64(overlap) });
    }
    if h <= S::zero() || h > real::<S>(1e-2) {
        return Err(CurvError::InvalidParameter(format!(
            "step must lie in (0, 1e-2], got {}",
            as_f64(h)
        )));
    }
    Ok(())
}

/// Eigenvalue at sorted position `k` of the Jacobi operator at
/// `cos(phi) X + sin(phi) Y`, validated by requiring the branch eigenspace
/// there to overlap `e0` by more than 0.9.
fn branch_value_at<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    x: &[S],
    y: &[S],
    phi: S,
    k: usize,
    e0: &[S],
    tol: ClusterTol<S>,
) -> Result<S> {
    let point: Vec<S> = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| phi.cos() * a + phi.sin() * b)
        .collect();
    let point = normalized(&point);
    let op = t.jacobi_operator(&point)?;
    let clustered = ClusteredEigen::of_matrix(op.matrix(), tol)?;
    // overlap of e0 with the eigenspace of the cluster containing position k
    let c = clustered.cluster_of_position(k);
    let mut overlap_sq = S::zero();
    for v in clustered.cluster_basis(c) {
        let d = dot(&v, e0);
        overlap_sq = overlap_sq + d * d;
    }
    let overlap = overlap_sq.sqrt();
    if overlap <= real::<S>(OVERLAP_THRESHOLD) {
        return Err(CurvError::BranchCrossing { step: as_f64(phi), overlap: as_f64(overlap) });
    }
    Ok(clustered.eigen.values[k])
}

/// Branch derivative for a selected simple cluster at X. The base point must
/// be regular (unambiguous clustering), mirroring the restriction of the
/// analytic construction to the regular stratum of the sphere.
pub fn branch_derivative<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    x: &[S],
    y: &[S],
    which: ClusterSelector<S>,
    tol: ClusterTol<S>,
    h: S,
) -> Result<BranchDerivative<S>> {
    check_branch_inputs(x, y, h)?;
    let op = t.jacobi_operator(x)?;
    let clustered = ClusteredEigen::of_matrix(op.matrix(), tol)?;
    if !clustered.is_regular() {
        let gap = clustered
            .clusters
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(S::infinity(), S::min);
        return Err(CurvError::IrregularPoint {
            gap: as_f64(gap),
            required: as_f64(real::<S>(REGULAR_GAP_FACTOR) * clustered.cluster_tol),
        });
    }
    let c = which.resolve(&clustered)?;
    let (value, start, len) = clustered.clusters[c];
    if len != 1 {
        return Err(CurvError::ClusterNotSimple { index: c, multiplicity: len });
    }
    let e0 = clustered.eigen.eigenvector(start);
    branch_derivative_for_eigenpair(t, x, y, value, &e0, tol, h)
}

/// Outcome of one derivative-identity trial.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct DerivativeTrial<S> {
    pub trial: usize,
    pub eigenvalue: S,
    pub fd_value: S,
    pub analytic_value: S,
    pub abs_diff: S,
}

/// Result of sweeping the finite-difference / analytic branch-derivative
/// identity over random base points, directions and simple branches.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "S: Serialize"))]
pub struct DerivativeSweep<S> {
    pub trials: usize,
    pub completed: usize,
    /// Trials rejected by the branch-crossing overlap guard.
    pub rejected_crossing: usize,
    /// Trials skipped because the point was irregular or had no simple branch.
    pub skipped: usize,
    pub max_abs_diff: S,
    pub tolerance: S,
    pub step: S,
    pub verdict: bool,
    pub records: Vec<DerivativeTrial<S>>,
}

/// Checks `|fd - analytic| <= tolerance` (default `10 |t| h`) over `trials`
/// random simple branches. The verdict fails if any completed trial exceeds
/// the tolerance or if rejections exceed 5% of the trials.
pub fn derivative_sweep<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    trials: usize,
    seed: u64,
    h: S,
    tolerance: Option<S>,
    tol: ClusterTol<S>,
) -> Result<DerivativeSweep<S>> {
    let n = t.n();
    let tolerance = tolerance.unwrap_or(real::<S>(10.0) * t.frobenius_norm() * h);
    let mut completed = 0;
    let mut rejected_crossing = 0;
    let mut skipped = 0;
    let mut max_abs_diff = S::zero();
    let mut records = Vec::new();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, trial));
        let x = loop {
            let g: Vec<S> = (0..n).map(|_| S::standard_normal(&mut rng)).collect();
            if norm(&g) > real::<S>(1e-6) {
                break normalized(&g);
            }
        };
        let y = random_orthogonal_direction(&x, &mut rng);
        let clustered = ClusteredEigen::of_matrix(t.jacobi_operator(&x)?.matrix(), tol)?;
        let simple: Vec<usize> = clustered
            .clusters
            .iter()
            .enumerate()
            .filter_map(|(c, &(_, _, len))| (len == 1).then_some(c))
            .collect();
        if simple.is_empty() {
            skipped += 1;
            continue;
        }
        let pick = simple[rng.random_range(0..simple.len())];
        match branch_derivative(t, &x, &y, ClusterSelector::Index(pick), tol, h) {
            Ok(bd) => {
                let diff = (bd.fd_value - bd.analytic_value).abs();
                max_abs_diff = max_abs_diff.max(diff);
                records.push(DerivativeTrial {
                    trial,
                    eigenvalue: bd.eigenvalue,
                    fd_value: bd.fd_value,
                    analytic_value: bd.analytic_value,
                    abs_diff: diff,
                });
                completed += 1;
            }
            Err(CurvError::BranchCrossing { .. }) => rejected_crossing += 1,
            Err(CurvError::IrregularPoint { .. }) => skipped += 1,
            Err(other) => return Err(other),
        }
    }
    let rejections = rejected_crossing + skipped;
    let verdict = max_abs_diff <= tolerance && (rejections as f64) < trials as f64 * 0.05;
    Ok(DerivativeSweep {
        trials,
        completed,
        rejected_crossing,
        skipped,
        max_abs_diff,
        tolerance,
        step: h,
        verdict,
        records,
    })
}

impl<S: Real> DerivativeSweep<S> {
    /// One row per completed trial: `trial,eigenvalue,fd,analytic,abs_diff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,eigenvalue,fd,analytic,abs_diff\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.trial,
                as_f64(r.eigenvalue),
                as_f64(r.fd_value),
                as_f64(r.analytic_value),
                as_f64(r.abs_diff)
            ));
        }
        out
    }
}

/// Branch derivative for an explicitly given eigenpair of R_X. Tolerates a
/// degenerate cluster as long as the branch can still be matched through the
/// eigenspace overlap (a cluster that does not split, e.g. a constant
/// spectrum, passes; a splitting one is reported as a crossing).
pub fn branch_derivative_for_eigenpair<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    x: &[S],
    y: &[S],
    lambda0: S,
    e0: &[S],
    tol: ClusterTol<S>,
    h: S,
) -> Result<BranchDerivative<S>> {
    check_branch_inputs(x, y, h)?;
    let op = t.jacobi_operator(x)?;
    let clustered = ClusteredEigen::of_matrix(op.matrix(), tol)?;
    // sorted position of the branch: nearest eigenvalue, refined by overlap
    let mut k = 0;
    let mut best = S::infinity();
    for (i, &v) in clustered.eigen.values.iter().enumerate() {
        let d = (v - lambda0).abs();
        if d < best {
            best = d;
            k = i;
        }
    }
    let spread = clustered.eigen.values[clustered.eigen.values.len() - 1]
        - clustered.eigen.values[0];
    if best > clustered.cluster_tol.max(real::<S>(1e-6) * spread.max(S::one())) {
        return Err(CurvError::NoSuchCluster(format!(
            "no eigenvalue near {} (closest is off by {})",
            as_f64(lambda0),
            as_f64(best)
        )));
    }
    let e0 = normalized(e0);
    let lam_plus = branch_value_at(t, x, y, h, k, &e0, tol)?;
    let lam_minus = branch_value_at(t, x, y, -h, k, &e0, tol)?;
    let fd_value = (lam_plus - lam_minus) / (real::<S>(2.0) * h);
    let analytic_value = real::<S>(2.0) * t.jacobi_form(x, y, &e0, &e0)?;
    Ok(BranchDerivative {
        base: x.to_vec(),
        direction: y.to_vec(),
        eigenvalue: lambda0,
        eigenvector: e0,
        step: h,
        fd_value,
        analytic_value,
    })
}

/// First-order splitting matrix of a degenerate eigenvalue cluster along the
/// geodesic towards Y: `M[i][j] = 2 jacobi_form(X, Y, e_i, e_j)` over an
/// orthonormal eigenbasis. Its eigenvalues are the derivatives of the
/// analytic branches emanating from the cluster (Rellich); for m = 1 this is
/// the single analytic branch derivative.
pub fn degenerate_branch_matrix<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    x: &[S],
    y: &[S],
    basis: &[Vec<S>],
) -> Result<SquareMatrix<S>> {
    let mut deviation = S::zero();
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g = dot(a, b) - if i == j { S::one() } else { S::zero() };
            deviation = deviation.max(g.abs());
        }
    }
    if deviation > real::<S>(1e-10) {
        return Err(CurvError::BasisNotOrthonormal { deviation: as_f64(deviation) });
    }
    let m = basis.len();
    let mut out = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in 0..=i {
            let v = real::<S>(2.0) * t.jacobi_form(x, y, &basis[i], &basis[j])?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Convenience: resolves the cluster through the profile at X and feeds its
/// eigenbasis to [`degenerate_branch_matrix`].
pub fn degenerate_branch_matrix_for_cluster<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    x: &[S],
    y: &[S],
    which: ClusterSelector<S>,
    tol: ClusterTol<S>,
) -> Result<SquareMatrix<S>> {
    let op = t.jacobi_operator(x)?;
    let clustered = ClusteredEigen::of_matrix(op.matrix(), tol)?;
    let c = which.resolve(&clustered)?;
    degenerate_branch_matrix(t, x, y, &clustered.cluster_basis(c))
}

/// Draws a unit direction orthogonal to `x`, deterministic in `rng`.
pub fn random_orthogonal_direction<S: Real, R: Rng + ?Sized>(x: &[S], rng: &mut R) -> Vec<S> {
    loop {
        let g: Vec<S> = (0..x.len()).map(|_| S::standard_normal(rng)).collect();
        let r = reject(&g, x);
        if norm(&r) > real::<S>(1e-6) {
            return normalized(&r);
        }
    }
}
