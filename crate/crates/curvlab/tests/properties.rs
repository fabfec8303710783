//! Property tests for the library invariants: curvature symmetries, Jacobi
//! operator algebra, projection geometry, spectral checkers, and their
//! equivariances.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curvlab::generators::{
    clifford_osserman, complex_space_form, constant_curvature, make_clifford_structures, perturb,
    random_curvature, single_plane, CliffordSystem, TensorDescriptor,
};
use curvlab::linalg::{dot, norm, normalized, random_orthogonal, symmetric_eigen, SquareMatrix};
use curvlab::scalar::Real;
use curvlab::spectral::{
    branch_derivative, duality_report, osserman_report, sample_unit_sphere, spectral_profile,
    ClusterSelector, ClusterTol, SphereSample,
};
use curvlab::tensor::{project_to_curvature, RawTensor};
use curvlab::{CurvatureTensor64, CurvError};

fn gaussian_raw(n: usize, seed: u64) -> RawTensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * n * n * n).map(|_| f64::standard_normal(&mut rng)).collect();
    RawTensor::new(n, data).unwrap()
}

fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| f64::standard_normal(rng)).collect()
}

/// A tensor from any generator family, keyed by (kind, n, seed).
fn arb_tensor() -> impl Strategy<Value = (String, CurvatureTensor64)> {
    (0usize..5, 2usize..=6, 0u64..1000).prop_map(|(kind, n, seed)| match kind {
        0 => {
            let lambda = (seed % 7) as f64 - 3.0;
            (format!("constant({n},{lambda})"), constant_curvature(n, lambda))
        }
        1 => (format!("random({n},{seed})"), random_curvature(n, seed, 1.0)),
        2 => (format!("plane({n})"), single_plane(n)),
        3 => {
            let n = if n % 2 == 1 { n + 1 } else { n };
            (format!("complex({n})"), complex_space_form(n, 1.0, 1.0).unwrap())
        }
        _ => {
            let base = constant_curvature(n, 1.0);
            let noise = random_curvature(n, seed, 1.0);
            (format!("perturbed({n},{seed})"), perturb(&base, &noise, 0.1).unwrap())
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_tensors_satisfy_symmetries((id, t) in arb_tensor()) {
        let tol = 1e-12 * t.component_scale();
        for v in t.validate_symmetries() {
            prop_assert!(v.max_violation <= tol, "{id}: {} violated by {}", v.identity, v.max_violation);
        }
    }

    #[test]
    fn jacobi_kills_base_and_is_symmetric((_, t) in arb_tensor(), seed in 0u64..500) {
        let n = t.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normalized(&gaussian_vec(n, &mut rng));
        let op = t.jacobi_operator(&x).unwrap();
        prop_assert!(norm(&op.apply_to_base()) <= 1e-12 * t.component_scale());
        prop_assert!(op.matrix().symmetry_deviation() <= 1e-12 * t.component_scale());
        // <J u, v> == <u, J v>
        let u = gaussian_vec(n, &mut rng);
        let v = gaussian_vec(n, &mut rng);
        let lhs = dot(&op.apply(&u), &v);
        let rhs = dot(&u, &op.apply(&v));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * t.component_scale() * norm(&u) * norm(&v));
    }

    #[test]
    fn projection_is_idempotent(n in 2usize..=6, seed in 0u64..1000) {
        let raw = gaussian_raw(n, seed);
        let p1 = project_to_curvature(&raw).unwrap();
        let p2 = project_to_curvature(&RawTensor::new(n, p1.components().to_vec()).unwrap()).unwrap();
        let worst = p1
            .components()
            .iter()
            .zip(p2.components())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        prop_assert!(worst <= 1e-12, "projection moved a fixed point by {worst}");
    }

    #[test]
    fn projection_is_frobenius_orthogonal(n in 2usize..=6, seed in 0u64..1000) {
        let raw = gaussian_raw(n, seed);
        let other = gaussian_raw(n, seed ^ 0xABCD);
        let p = project_to_curvature(&raw).unwrap();
        let q = project_to_curvature(&other).unwrap();
        // <raw - P raw, P other> = 0
        let mut inner = 0.0;
        for ((r, pr), qr) in raw.components().iter().zip(p.components()).zip(q.components()) {
            inner += (r - pr) * qr;
        }
        let scale = (norm(raw.components()) * norm(q.components())).max(1.0);
        prop_assert!(inner.abs() <= 1e-10 * scale, "residual not orthogonal: {inner}");
    }

    #[test]
    fn evaluate_is_multilinear((_, t) in arb_tensor(), seed in 0u64..500, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let n = t.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x1 = gaussian_vec(n, &mut rng);
        let x2 = gaussian_vec(n, &mut rng);
        let y = gaussian_vec(n, &mut rng);
        let z = gaussian_vec(n, &mut rng);
        let w = gaussian_vec(n, &mut rng);
        let combo: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
        let lhs = t.evaluate(&combo, &y, &z, &w).unwrap();
        let rhs = a * t.evaluate(&x1, &y, &z, &w).unwrap() + b * t.evaluate(&x2, &y, &z, &w).unwrap();
        let scale = t.component_scale() * (1.0 + a.abs() + b.abs());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * 64.0, "multilinearity off by {}", (lhs - rhs).abs());
    }

    #[test]
    fn jacobi_profile_contains_zero((_, t) in arb_tensor(), seed in 0u64..500) {
        let n = t.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normalized(&gaussian_vec(n, &mut rng));
        let op = t.jacobi_operator(&x).unwrap();
        let profile = spectral_profile(&op, ClusterTol::Auto).unwrap();
        let min_abs = profile
            .sorted_eigenvalues
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(min_abs <= 1e-10 * t.component_scale().max(1.0), "no zero eigenvalue (closest {min_abs})");
    }

    #[test]
    fn charpoly_matches_eigenvalue_expansion((_, t) in arb_tensor(), seed in 0u64..500) {
        let n = t.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normalized(&gaussian_vec(n, &mut rng));
        let profile = spectral_profile(&t.jacobi_operator(&x).unwrap(), ClusterTol::Auto).unwrap();
        let vieta = curvlab::linalg::polynomial_from_roots(&profile.sorted_eigenvalues);
        for (a, b) in profile.charpoly.iter().zip(&vieta) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "charpoly {a} vs product {b}");
        }
    }

    #[test]
    fn osserman_spread_is_scale_equivariant(seed in 0u64..200, c in prop::sample::select(vec![0.25f64, 0.5, 2.0, 3.0, -2.0])) {
        let t = random_curvature(4, seed, 1.0);
        let sample = sample_unit_sphere::<f64>(4, 40, seed ^ 7);
        let base = osserman_report(&t, &sample, ClusterTol::Auto, 1e-8).unwrap();
        let scaled = osserman_report(&t.scale(c), &sample, ClusterTol::Auto, 1e-8).unwrap();
        let expected = c.abs() * base.profile_spread;
        prop_assert!(
            (scaled.profile_spread - expected).abs() <= 1e-10 * expected.max(1e-300),
            "spread {} vs |c| spread {}", scaled.profile_spread, expected
        );
    }

    #[test]
    fn duality_verdict_is_scale_invariant(seed in 0u64..100, c in prop::sample::select(vec![0.5f64, 2.0, 4.0])) {
        let t = random_curvature(3, seed, 1.0);
        let sample = sample_unit_sphere::<f64>(3, 30, seed ^ 3);
        let tol = 1e-3; // loose enough that both verdicts are exercised
        let base = duality_report(&t, &sample, ClusterTol::Auto, tol, 2).unwrap();
        let scaled = duality_report(&t.scale(c), &sample, ClusterTol::Auto, c * tol, 2).unwrap();
        prop_assert_eq!(base.verdict, scaled.verdict);
    }

    #[test]
    fn branch_derivative_identity(seed in 0u64..300, h in prop::sample::select(vec![1e-3f64, 1e-4])) {
        let n = 3 + (seed % 3) as usize;
        let t = random_curvature(n, seed, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xBEEF);
        let x = normalized(&gaussian_vec(n, &mut rng));
        let y = curvlab::spectral::random_orthogonal_direction(&x, &mut rng);
        let tol_bound = 10.0 * t.frobenius_norm() * h;
        match branch_derivative(&t, &x, &y, ClusterSelector::Index(1), ClusterTol::Auto, h) {
            Ok(bd) => prop_assert!(
                (bd.fd_value - bd.analytic_value).abs() <= tol_bound,
                "identity violated: fd {} analytic {} bound {}", bd.fd_value, bd.analytic_value, tol_bound
            ),
            // rejections are allowed outcomes, not identity violations
            Err(CurvError::BranchCrossing { .. })
            | Err(CurvError::IrregularPoint { .. })
            | Err(CurvError::ClusterNotSimple { .. }) => {}
            Err(other) => return Err(TestCaseError::fail(format!("unexpected error {other}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Fixed-seed invariants (enumerations rather than random search)
// ---------------------------------------------------------------------------

#[test]
fn clifford_families_pass_osserman_for_all_admissible_sizes() {
    // m = 1 on every even n <= 16, m in {2,3} on multiples of 4
    let mut cases: Vec<(usize, usize)> = Vec::new();
    for n in (2..=16).step_by(2) {
        cases.push((n, 1));
    }
    for n in (4..=16).step_by(4) {
        cases.push((n, 2));
        cases.push((n, 3));
    }
    for (n, m) in cases {
        let structures = make_clifford_structures::<f64>(n, m, 17).unwrap();
        let lambdas: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * i as f64).collect();
        let sys = CliffordSystem::new(n, structures, 1.0, lambdas).unwrap();
        let t = clifford_osserman(&sys).unwrap();
        let sample = sample_unit_sphere::<f64>(n, 200, 23);
        let report = osserman_report(&t, &sample, ClusterTol::Auto, 1e-9).unwrap();
        assert!(
            report.profile_spread <= 1e-9,
            "clifford (n={n}, m={m}) spread {}",
            report.profile_spread
        );
    }
}

#[test]
fn osserman_spread_and_duality_residual_are_orthogonal_invariant() {
    for seed in [3u64, 11, 29] {
        let t = random_curvature(4, seed, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        let q: SquareMatrix<f64> = random_orthogonal(4, &mut rng);
        let rotated = t.conjugate(&q);

        let sample = sample_unit_sphere::<f64>(4, 50, seed);
        // profiles of the rotated tensor at X match the original at QX
        let mapped = SphereSample::from_points(
            sample.points.iter().map(|x| normalized(&q.matvec(x))).collect(),
            sample.seed,
        )
        .unwrap();

        let a = osserman_report(&t, &mapped, ClusterTol::Auto, 1e-8).unwrap();
        let b = osserman_report(&rotated, &sample, ClusterTol::Auto, 1e-8).unwrap();
        assert!(
            (a.profile_spread - b.profile_spread).abs() <= 1e-9,
            "spread changed under conjugation: {} vs {}",
            a.profile_spread,
            b.profile_spread
        );

        let da = duality_report(&t, &mapped, ClusterTol::Auto, 1e-8, 0).unwrap();
        let db = duality_report(&rotated, &sample, ClusterTol::Auto, 1e-8, 0).unwrap();
        assert!(
            (da.max_residual - db.max_residual).abs() <= 1e-9,
            "residual changed under conjugation: {} vs {}",
            da.max_residual,
            db.max_residual
        );
    }
}

#[test]
fn perturbation_metrics_are_monotone_for_complex_space_form() {
    // eps = 0 keeps both metrics at solver noise; eps = 0.1 lifts both
    let base = TensorDescriptor::complex(4, 1.0, 1.0);
    let params = curvlab::experiments::CheckParams::<f64>::default();
    for seed in 0..10u64 {
        for (eps, lo, hi) in [(0.0, 0.0, 1e-8), (0.1, 1e-3, f64::INFINITY)] {
            let d = TensorDescriptor::perturbed(base.clone(), eps, seed);
            let t = d.resolve::<f64>().unwrap();
            let (spread, residual, _, _) =
                curvlab::experiments::score_tensor(&t, &params).unwrap();
            assert!(
                spread >= lo && spread <= hi,
                "seed {seed} eps {eps}: spread {spread} outside [{lo}, {hi}]"
            );
            assert!(
                residual >= lo && residual <= hi,
                "seed {seed} eps {eps}: residual {residual} outside [{lo}, {hi}]"
            );
        }
    }
}

#[test]
fn random_curvature_in_dimension_two_is_osserman() {
    // the n=2 curvature space is one-dimensional (a multiple of the sphere tensor)
    for seed in 0..20u64 {
        let t = random_curvature::<f64>(2, seed, 1.0);
        let sample = sample_unit_sphere::<f64>(2, 100, seed);
        let report = osserman_report(&t, &sample, ClusterTol::Auto, 1e-10).unwrap();
        assert!(report.profile_spread <= 1e-10, "seed {seed}: spread {}", report.profile_spread);
    }
}

#[test]
fn random_curvature_in_higher_dimension_is_far_from_osserman() {
    let t = random_curvature::<f64>(4, 7, 1.0);
    let sample = sample_unit_sphere::<f64>(4, 200, 1);
    let report = osserman_report(&t, &sample, ClusterTol::Auto, 1e-8).unwrap();
    assert!(report.profile_spread > 0.01, "generic tensor too close to Osserman: {}", report.profile_spread);
}

#[test]
fn degenerate_branch_matrix_matches_tracked_branch_slopes() {
    // two equal plane blocks force a double eigenvalue at X = (e0+e2)/sqrt(2);
    // the Rellich matrix eigenvalues must match finite-difference slopes of
    // the two split branches, tracked through their zeroth-order eigenvectors
    let n = 4;
    let mut raw = RawTensor::<f64>::zeros(n);
    for (i, j) in [(0usize, 1usize), (2, 3)] {
        raw.set(i, j, j, i, 1.0);
        raw.set(j, i, i, j, 1.0);
        raw.set(i, j, i, j, -1.0);
        raw.set(j, i, j, i, -1.0);
    }
    let t = project_to_curvature(&raw).unwrap();

    let x = normalized(&[1.0, 0.0, 1.0, 0.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let y = curvlab::spectral::random_orthogonal_direction(&x, &mut rng);
        let clustered =
            curvlab::spectral::ClusteredEigen::of_matrix(t.jacobi_operator(&x).unwrap().matrix(), ClusterTol::Auto)
                .unwrap();
        // the double cluster at 1/2
        let c = clustered
            .clusters
            .iter()
            .position(|&(v, _, len)| len == 2 && (v - 0.5).abs() < 1e-12)
            .expect("double eigenvalue 1/2 exists");
        let basis = clustered.cluster_basis(c);
        let rellich =
            curvlab::spectral::degenerate_branch_matrix(&t, &x, &y, &basis).unwrap();
        let split = symmetric_eigen(&rellich).unwrap();

        // zeroth-order branch eigenvectors out of the Rellich eigenvectors
        let h = 1e-5_f64;
        let mut fd_slopes = Vec::new();
        for b in 0..2 {
            let w = split.eigenvector(b);
            let branch_vec: Vec<f64> = (0..n)
                .map(|r| w[0] * basis[0][r] + w[1] * basis[1][r])
                .collect();
            let mut lam = [0.0; 2];
            for (s, phi) in [(0usize, h), (1, -h)] {
                let point: Vec<f64> = x
                    .iter()
                    .zip(&y)
                    .map(|(&a, &bb)| phi.cos() * a + phi.sin() * bb)
                    .collect();
                let op = t.jacobi_operator(&normalized(&point)).unwrap();
                let eig = symmetric_eigen(op.matrix()).unwrap();
                // branch = eigenvalue whose eigenvector overlaps branch_vec most
                let (best, _) = (0..n)
                    .map(|k| (k, dot(&eig.eigenvector(k), &branch_vec).abs()))
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                lam[s] = eig.values[best];
            }
            fd_slopes.push((lam[0] - lam[1]) / (2.0 * h));
        }
        fd_slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (fd, rl) in fd_slopes.iter().zip(&split.values) {
            assert!(
                (fd - rl).abs() <= 1e-4,
                "tracked slope {fd} vs Rellich eigenvalue {rl}"
            );
        }
    }
}
