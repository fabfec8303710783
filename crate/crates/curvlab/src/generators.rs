//! Constructors for curvature tensors: space forms, Clifford families,
//! seeded random tensors, and perturbations. Everything is deterministic in
//! its parameters and seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::linalg::{random_orthogonal, SquareMatrix};
use crate::scalar::{as_f64, real, Real};
use crate::tensor::{flat_index, project_to_curvature, AlgebraicCurvatureTensor, RawTensor};

/// Space form: `R(X,Y,Z,W) = lambda (<Y,Z><X,W> - <X,Z><Y,W>)`. The Jacobi
/// spectrum at every unit X is {0} + {lambda, multiplicity n-1}.
pub fn constant_curvature<S: Real>(n: usize, lambda: S) -> AlgebraicCurvatureTensor<S> {
    assert!(n >= 2, "dimension must be at least 2");
    let mut c = vec![S::zero(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            c[flat_index(n, i, j, j, i)] = lambda;
            c[flat_index(n, i, j, i, j)] = -lambda;
        }
    }
    AlgebraicCurvatureTensor::from_components_unchecked(n, c)
}

/// Curvature concentrated on the (e0, e1) plane: the only nonzero components
/// are the symmetry completions of `R(e0,e1,e1,e0) = 1`. Not Osserman for
/// n >= 3; the standard negative control.
pub fn single_plane<S: Real>(n: usize) -> AlgebraicCurvatureTensor<S> {
    assert!(n >= 2, "dimension must be at least 2");
    let mut c = vec![S::zero(); n * n * n * n];
    c[flat_index(n, 0, 1, 1, 0)] = S::one();
    c[flat_index(n, 1, 0, 0, 1)] = S::one();
    c[flat_index(n, 0, 1, 0, 1)] = -S::one();
    c[flat_index(n, 1, 0, 1, 0)] = -S::one();
    AlgebraicCurvatureTensor::from_components_unchecked(n, c)
}

/// Anticommuting orthogonal skew complex structures with coefficients; the
/// ingredients of a Clifford-family Osserman tensor.
#[derive(Clone, Debug)]
pub struct CliffordSystem<S> {
    pub n: usize,
    pub structures: Vec<SquareMatrix<S>>,
    pub lambda0: S,
    pub lambdas: Vec<S>,
}

const CLIFFORD_TOL: f64 = 1e-12;

impl<S: Real> CliffordSystem<S> {
    pub fn new(
        n: usize,
        structures: Vec<SquareMatrix<S>>,
        lambda0: S,
        lambdas: Vec<S>,
    ) -> Result<Self> {
        if lambdas.len() != structures.len() {
            return Err(CurvError::InvalidParameter(format!(
                "{} structures but {} coefficients",
                structures.len(),
                lambdas.len()
            )));
        }
        let sys = Self { n, structures, lambda0, lambdas };
        sys.validate()?;
        Ok(sys)
    }

    /// Checks J^T = -J, J^2 = -I and pairwise anticommutation at 1e-12.
    pub fn validate(&self) -> Result<()> {
        let tol = real::<S>(CLIFFORD_TOL);
        let id = SquareMatrix::identity(self.n);
        for (s, j) in self.structures.iter().enumerate() {
            if j.n() != self.n {
                return Err(CurvError::DimensionMismatch { expected: self.n, got: j.n() });
            }
            let skew_dev = j.add(&j.transpose()).frobenius_norm();
            if skew_dev > tol {
                return Err(CurvError::CliffordInvariant(format!(
                    "J_{s} is not skew (|J + J^T| = {:.3e})",
                    as_f64(skew_dev)
                )));
            }
            let sq_dev = j.matmul(j).add(&id).frobenius_norm();
            if sq_dev > tol {
                return Err(CurvError::CliffordInvariant(format!(
                    "J_{s}^2 differs from -I by {:.3e}",
                    as_f64(sq_dev)
                )));
            }
        }
        for a in 0..self.structures.len() {
            for b in 0..a {
                let ja = &self.structures[a];
                let jb = &self.structures[b];
                let anti = ja.matmul(jb).add(&jb.matmul(ja)).frobenius_norm();
                if anti > tol {
                    return Err(CurvError::CliffordInvariant(format!(
                        "J_{a} and J_{b} do not anticommute (|J_a J_b + J_b J_a| = {:.3e})",
                        as_f64(anti)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Standard anticommuting complex structures on R^n built from 2x2 / 4x4
/// blocks and conjugated by a seeded Haar-random orthogonal matrix, so no
/// privileged basis leaks into the corpus.
///
/// Admissible: m = 1 needs n even; m in {2, 3} needs n divisible by 4.
pub fn make_clifford_structures<S: Real>(
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<SquareMatrix<S>>> {
    let blocks = canonical_clifford_structures(n, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q: SquareMatrix<S> = random_orthogonal(n, &mut rng);
    let qt = q.transpose();
    Ok(blocks.into_iter().map(|j| q.matmul(&j).matmul(&qt)).collect())
}

/// The block-diagonal structures before basis conjugation (exact entries).
pub fn canonical_clifford_structures<S: Real>(n: usize, m: usize) -> Result<Vec<SquareMatrix<S>>> {
    match m {
        0 => return Err(CurvError::InadmissibleClifford { n, m, reason: "m must be at least 1" }),
        1 => {
            if n < 2 || n % 2 != 0 {
                return Err(CurvError::InadmissibleClifford {
                    n,
                    m,
                    reason: "a complex structure needs even dimension",
                });
            }
        }
        2 | 3 => {
            if n < 4 || n % 4 != 0 {
                return Err(CurvError::InadmissibleClifford {
                    n,
                    m,
                    reason: "two or three anticommuting structures need dimension divisible by 4",
                });
            }
        }
        _ => {
            return Err(CurvError::InadmissibleClifford {
                n,
                m,
                reason: "only m <= 3 block constructions are provided",
            })
        }
    }

    let one = S::one();
    let mut out = Vec::with_capacity(m);
    if m == 1 {
        let mut j = SquareMatrix::zeros(n);
        for b in (0..n).step_by(2) {
            j[(b, b + 1)] = -one;
            j[(b + 1, b)] = one;
        }
        out.push(j);
    } else {
        // left multiplication by i, j, k on each quaternion block (1,i,j,k)
        let li = [(0usize, 1usize, -1.0), (1, 0, 1.0), (2, 3, -1.0), (3, 2, 1.0)];
        let lj = [(0, 2, -1.0), (1, 3, 1.0), (2, 0, 1.0), (3, 1, -1.0)];
        let lk = [(0, 3, -1.0), (1, 2, -1.0), (2, 1, 1.0), (3, 0, 1.0)];
        for pattern in [li, lj, lk].iter().take(m) {
            let mut j = SquareMatrix::zeros(n);
            for b in (0..n).step_by(4) {
                for &(r, c, v) in pattern {
                    j[(b + r, b + c)] = real::<S>(v);
                }
            }
            out.push(j);
        }
    }
    Ok(out)
}

/// Clifford-family Osserman tensor `R = lambda0 R1 + sum_i lambda_i R_{J_i}`
/// with `R_J(X,Y)Z = <JY,Z>JX - <JX,Z>JY - 2<JX,Y>JZ`. At every unit X the
/// Jacobi spectrum is {0} + {lambda0 + 3 lambda_i, each once} + {lambda0}.
pub fn clifford_osserman<S: Real>(sys: &CliffordSystem<S>) -> Result<AlgebraicCurvatureTensor<S>> {
    sys.validate()?;
    let n = sys.n;
    let two = real::<S>(2.0);
    let mut c = vec![S::zero(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r = S::zero();
                    if j == k && i == l && i != j {
                        r = r + sys.lambda0;
                    }
                    if i == k && j == l && i != j {
                        r = r - sys.lambda0;
                    }
                    for (s, jm) in sys.structures.iter().enumerate() {
                        let term = jm[(k, j)] * jm[(l, i)] - jm[(k, i)] * jm[(l, j)]
                            - two * jm[(j, i)] * jm[(l, k)];
                        r = r + sys.lambdas[s] * term;
                    }
                    c[flat_index(n, i, j, k, l)] = r;
                }
            }
        }
    }
    Ok(AlgebraicCurvatureTensor::from_components_unchecked(n, c))
}

/// Complex space form in the canonical basis (m = 1, no conjugation):
/// Jacobi spectrum {0, lambda0 + 3 lambda1, lambda0 (n-2 times)}.
pub fn complex_space_form<S: Real>(
    n: usize,
    lambda0: S,
    lambda1: S,
) -> Result<AlgebraicCurvatureTensor<S>> {
    let structures = canonical_clifford_structures(n, 1)?;
    let sys = CliffordSystem::new(n, structures, lambda0, vec![lambda1])?;
    clifford_osserman(&sys)
}

/// Gaussian raw tensor projected onto the curvature subspace and normalized
/// to Frobenius norm `scale`. Generically not Osserman for n >= 3.
pub fn random_curvature<S: Real>(n: usize, seed: u64, scale: S) -> AlgebraicCurvatureTensor<S> {
    assert!(n >= 2, "dimension must be at least 2");
    assert!(scale > S::zero(), "scale must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<S> = (0..n * n * n * n).map(|_| S::standard_normal(&mut rng)).collect();
    let raw = RawTensor::new(n, data).expect("shape is correct by construction");
    let projected = project_to_curvature(&raw).expect("finite Gaussian entries");
    let frob = projected.frobenius_norm();
    assert!(frob > S::zero(), "projected Gaussian tensor collapsed to zero");
    projected.scale(scale / frob)
}

/// `t + eps * noise`; the curvature-symmetry subspace is linear, so the sum
/// needs no revalidation.
pub fn perturb<S: Real>(
    t: &AlgebraicCurvatureTensor<S>,
    noise: &AlgebraicCurvatureTensor<S>,
    eps: S,
) -> Result<AlgebraicCurvatureTensor<S>> {
    t.add_scaled(noise, eps)
}

// ---------------------------------------------------------------------------
// Corpus descriptors
// ---------------------------------------------------------------------------

/// One entry of a corpus file; resolves to exactly one tensor.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorDescriptor {
    pub kind: TensorKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "DescriptorParams::is_empty")]
    pub params: DescriptorParams,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    Constant,
    Complex,
    Clifford,
    Random,
    Perturbed,
    Plane,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct DescriptorParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<TensorDescriptor>>,
}

impl DescriptorParams {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

/// Corpus file payload: a JSON array of descriptors.
pub type CorpusSpec = Vec<TensorDescriptor>;

impl TensorDescriptor {
    pub fn constant(n: usize, lambda: f64) -> Self {
        Self {
            kind: TensorKind::Constant,
            n,
            params: DescriptorParams { lambda: Some(lambda), ..Default::default() },
            seed: 0,
        }
    }

    pub fn complex(n: usize, lambda0: f64, lambda1: f64) -> Self {
        Self {
            kind: TensorKind::Complex,
            n,
            params: DescriptorParams {
                lambda0: Some(lambda0),
                lambda1: Some(lambda1),
                ..Default::default()
            },
            seed: 0,
        }
    }

    pub fn clifford(n: usize, m: usize, lambda0: f64, lambdas: Vec<f64>, seed: u64) -> Self {
        Self {
            kind: TensorKind::Clifford,
            n,
            params: DescriptorParams {
                m: Some(m),
                lambda0: Some(lambda0),
                lambdas: Some(lambdas),
                ..Default::default()
            },
            seed,
        }
    }

    pub fn random(n: usize, seed: u64, scale: f64) -> Self {
        Self {
            kind: TensorKind::Random,
            n,
            params: DescriptorParams { scale: Some(scale), ..Default::default() },
            seed,
        }
    }

    pub fn plane(n: usize) -> Self {
        Self { kind: TensorKind::Plane, n, params: DescriptorParams::default(), seed: 0 }
    }

    pub fn perturbed(base: TensorDescriptor, eps: f64, noise_seed: u64) -> Self {
        let n = base.n;
        Self {
            kind: TensorKind::Perturbed,
            n,
            params: DescriptorParams {
                eps: Some(eps),
                base: Some(Box::new(base)),
                ..Default::default()
            },
            seed: noise_seed,
        }
    }

    /// Builds the tensor this descriptor names.
    pub fn resolve<S: Real>(&self) -> Result<AlgebraicCurvatureTensor<S>> {
        let missing =
            |what: &str| CurvError::InvalidParameter(format!("{self} is missing `{what}`"));
        match self.kind {
            TensorKind::Constant => {
                let lambda = self.params.lambda.ok_or_else(|| missing("lambda"))?;
                Ok(constant_curvature(self.n, real::<S>(lambda)))
            }
            TensorKind::Complex => {
                let l0 = self.params.lambda0.ok_or_else(|| missing("lambda0"))?;
                let l1 = self.params.lambda1.ok_or_else(|| missing("lambda1"))?;
                complex_space_form(self.n, real::<S>(l0), real::<S>(l1))
            }
            TensorKind::Clifford => {
                let m = self.params.m.ok_or_else(|| missing("m"))?;
                let l0 = self.params.lambda0.ok_or_else(|| missing("lambda0"))?;
                let ls = self.params.lambdas.clone().ok_or_else(|| missing("lambdas"))?;
                let structures = make_clifford_structures(self.n, m, self.seed)?;
                let sys = CliffordSystem::new(
                    self.n,
                    structures,
                    real::<S>(l0),
                    ls.into_iter().map(real::<S>).collect(),
                )?;
                clifford_osserman(&sys)
            }
            TensorKind::Random => {
                let scale = self.params.scale.unwrap_or(1.0);
                if scale <= 0.0 {
                    return Err(CurvError::InvalidParameter("scale must be positive".into()));
                }
                Ok(random_curvature(self.n, self.seed, real::<S>(scale)))
            }
            TensorKind::Perturbed => {
                let base = self.params.base.as_ref().ok_or_else(|| missing("base"))?;
                let eps = self.params.eps.ok_or_else(|| missing("eps"))?;
                let t = base.resolve::<S>()?;
                let noise = random_curvature(self.n, self.seed, S::one());
                perturb(&t, &noise, real::<S>(eps))
            }
            TensorKind::Plane => Ok(single_plane(self.n)),
        }
    }
}

impl std::fmt::Display for TensorDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            TensorKind::Constant => {
                write!(f, "constant(n={};lambda={})", self.n, self.params.lambda.unwrap_or(1.0))
            }
            TensorKind::Complex => write!(
                f,
                "complex(n={};lambda0={};lambda1={})",
                self.n,
                self.params.lambda0.unwrap_or(1.0),
                self.params.lambda1.unwrap_or(1.0)
            ),
            TensorKind::Clifford => write!(
                f,
                "clifford(n={};m={};seed={})",
                self.n,
                self.params.m.unwrap_or(0),
                self.seed
            ),
            TensorKind::Random => write!(
                f,
                "random(n={};seed={};scale={})",
                self.n,
                self.seed,
                self.params.scale.unwrap_or(1.0)
            ),
            TensorKind::Perturbed => write!(
                f,
                "perturbed({};eps={};seed={})",
                self.params.base.as_ref().map(|b| b.to_string()).unwrap_or_default(),
                self.params.eps.unwrap_or(0.0),
                self.seed
            ),
            TensorKind::Plane => write!(f, "plane(n={})", self.n),
        }
    }
}
