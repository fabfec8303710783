//! Crate-wide error type.

use thiserror::Error;

/// Names of the four curvature symmetry identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SymmetryKind {
    /// R(X,Y,Z,W) = -R(Y,X,Z,W)
    FirstPairAntisymmetry,
    /// R(X,Y,Z,W) = -R(X,Y,W,Z)
    LastPairAntisymmetry,
    /// R(X,Y,Z,W) = R(Z,W,X,Y)
    PairExchange,
    /// R(X,Y,Z,W) + R(Y,Z,X,W) + R(Z,X,Y,W) = 0
    FirstBianchi,
}

impl std::fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SymmetryKind::FirstPairAntisymmetry => "first-pair antisymmetry",
            SymmetryKind::LastPairAntisymmetry => "last-pair antisymmetry",
            SymmetryKind::PairExchange => "pair exchange",
            SymmetryKind::FirstBianchi => "first Bianchi identity",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum CurvError {
    #[error("shape mismatch: dimension {n} needs {expected} components, got {got}")]
    ShapeMismatch { n: usize, expected: usize, got: usize },

    #[error("non-finite component at index ({i},{j},{k},{l})")]
    NonFinite { i: usize, j: usize, k: usize, l: usize },

    #[error(
        "{identity} violated: |violation| = {violation:.3e} at ({i},{j},{k},{l}), tolerance {tolerance:.3e}"
    )]
    SymmetryViolation {
        identity: SymmetryKind,
        violation: f64,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        tolerance: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector must be unit: |X| = {norm}")]
    NotUnit { norm: f64 },

    #[error("vectors must be orthogonal: |<X,Y>| = {dot:.3e}")]
    NotOrthogonal { dot: f64 },

    #[error("inadmissible Clifford parameters (n = {n}, m = {m}): {reason}")]
    InadmissibleClifford { n: usize, m: usize, reason: &'static str },

    #[error("Clifford system invariant violated: {0}")]
    CliffordInvariant(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    EigenNonConvergence { sweeps: usize, off: f64 },

    #[error("eigenvalue cluster {index} has multiplicity {multiplicity}; use the degenerate branch matrix")]
    ClusterNotSimple { index: usize, multiplicity: usize },

    #[error("no eigenvalue cluster matches the selector: {0}")]
    NoSuchCluster(String),

    #[error("branch matching failed at step {step:+.3e}: eigenvector overlap {overlap:.3} < 0.9 (crossing suspected)")]
    BranchCrossing { step: f64, overlap: f64 },

    #[error("point is not regular: inter-cluster gap {gap:.3e} <= {required:.3e}")]
    IrregularPoint { gap: f64, required: f64 },

    #[error("eigenbasis is not orthonormal: max deviation {deviation:.3e}")]
    BasisNotOrthonormal { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tensor file: {0}")]
    TensorFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CurvError>;
