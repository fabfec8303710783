//! Numerical toolkit for algebraic curvature tensors: Jacobi operator
//! spectra over the unit sphere, an Osserman-condition checker, an
//! eigenvector-duality checker, eigenvalue-branch perturbation machinery,
//! and experiment harnesses that test the equivalence of the two conditions
//! and search for counterexamples to it.
//!
//! Everything is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases at the crate root are the defaults.

pub mod error;
pub mod experiments;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod spectral;
pub mod tensor;

pub use error::{CurvError, Result, SymmetryKind};
pub use scalar::Real;

/// Default (f64) aliases for the core types.
pub type CurvatureTensor64 = tensor::AlgebraicCurvatureTensor<f64>;
pub type RawTensor64 = tensor::RawTensor<f64>;
pub type JacobiOperator64 = tensor::JacobiOperator<f64>;
pub type SquareMatrix64 = linalg::SquareMatrix<f64>;
pub type SpectralProfile64 = spectral::SpectralProfile<f64>;
pub type SphereSample64 = spectral::SphereSample<f64>;
pub type OssermanReport64 = spectral::OssermanReport<f64>;
pub type DualityReport64 = spectral::DualityReport<f64>;
pub type BranchDerivative64 = spectral::BranchDerivative<f64>;

/// Single-precision aliases.
pub type CurvatureTensor32 = tensor::AlgebraicCurvatureTensor<f32>;
pub type RawTensor32 = tensor::RawTensor<f32>;
pub type JacobiOperator32 = tensor::JacobiOperator<f32>;
