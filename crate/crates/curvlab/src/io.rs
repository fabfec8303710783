//! Tensor file format (JSON, UTF-8).
//!
//! Dense: `{"n": N, "format": "dense-rowmajor-ijkl", "components": [...]}`
//! with `components[((i*n + j)*n + k)*n + l] = R(e_i,e_j,e_k,e_l)`.
//!
//! Sparse: `{"n": N, "format": "sparse-ijkl", "entries": [[i,j,k,l,value], ...]}`,
//! unlisted entries zero.
//!
//! Loading validates the curvature symmetries and rejects violations; callers
//! must opt into projection explicitly, nothing is repaired silently.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CurvError, Result};
use crate::scalar::{as_f64, real, Real};
use crate::tensor::{flat_index, project_to_curvature, AlgebraicCurvatureTensor, RawTensor};

pub const DENSE_FORMAT: &str = "dense-rowmajor-ijkl";
pub const SPARSE_FORMAT: &str = "sparse-ijkl";

#[derive(Serialize, Deserialize)]
struct TensorFile {
    n: usize,
    format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    components: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<(usize, usize, usize, usize, f64)>>,
}

/// Reads the raw array from either format without validating symmetries.
pub fn load_raw<S: Real>(path: &Path) -> Result<RawTensor<S>> {
    let text = fs::read_to_string(path)?;
    let file: TensorFile = serde_json::from_str(&text)?;
    let n = file.n;
    if n < 2 {
        return Err(CurvError::TensorFormat(format!("dimension must be at least 2, got {n}")));
    }
    match file.format.as_str() {
        DENSE_FORMAT => {
            let components = file
                .components
                .ok_or_else(|| CurvError::TensorFormat("dense file lacks `components`".into()))?;
            if components.len() != n * n * n * n {
                return Err(CurvError::ShapeMismatch {
                    n,
                    expected: n * n * n * n,
                    got: components.len(),
                });
            }
            RawTensor::new(n, components.into_iter().map(real::<S>).collect())
        }
        SPARSE_FORMAT => {
            let entries = file
                .entries
                .ok_or_else(|| CurvError::TensorFormat("sparse file lacks `entries`".into()))?;
            let mut raw = RawTensor::zeros(n);
            for (i, j, k, l, v) in entries {
                if i >= n || j >= n || k >= n || l >= n {
                    return Err(CurvError::TensorFormat(format!(
                        "sparse index ({i},{j},{k},{l}) out of range for n = {n}"
                    )));
                }
                raw.set(i, j, k, l, real::<S>(v));
            }
            Ok(raw)
        }
        other => Err(CurvError::TensorFormat(format!("unknown format `{other}`"))),
    }
}

/// Loads and validates a curvature tensor. With `project = true` the raw
/// array is orthogonally projected onto the symmetry subspace instead of
/// being rejected on violation.
pub fn load_tensor<S: Real>(path: &Path, project: bool) -> Result<AlgebraicCurvatureTensor<S>> {
    let raw = load_raw(path)?;
    if project {
        project_to_curvature(&raw)
    } else {
        let n = raw.n();
        AlgebraicCurvatureTensor::from_dense(n, raw.components().to_vec())
    }
}

/// Writes the dense format. Output is byte-identical for identical input.
pub fn save_tensor<S: Real>(path: &Path, t: &AlgebraicCurvatureTensor<S>) -> Result<()> {
    let file = TensorFile {
        n: t.n(),
        format: DENSE_FORMAT.to_string(),
        components: Some(t.components().iter().map(|&x| as_f64(x)).collect()),
        entries: None,
    };
    fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

/// Sparse writer: emits only nonzero components.
pub fn save_tensor_sparse<S: Real>(path: &Path, t: &AlgebraicCurvatureTensor<S>) -> Result<()> {
    let n = t.n();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = t.components()[flat_index(n, i, j, k, l)];
                    if v != S::zero() {
                        entries.push((i, j, k, l, as_f64(v)));
                    }
                }
            }
        }
    }
    let file = TensorFile { n, format: SPARSE_FORMAT.to_string(), components: None, entries: Some(entries) };
    fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complex_space_form, random_curvature, single_plane};

    #[test]
    fn dense_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let t = random_curvature::<f64>(3, 5, 1.0);
        save_tensor(&path, &t).unwrap();
        let back = load_tensor::<f64>(&path, false).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn sparse_roundtrip_and_zero_fill() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let t = single_plane::<f64>(3);
        save_tensor_sparse(&path, &t).unwrap();
        let back = load_tensor::<f64>(&path, false).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn loader_rejects_symmetry_violation_without_projection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"n":2,"format":"sparse-ijkl","entries":[[0,1,0,1,1.0]]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_tensor::<f64>(&path, false),
            Err(CurvError::SymmetryViolation { .. })
        ));
        // explicit projection accepts the same file
        let projected = load_tensor::<f64>(&path, true).unwrap();
        assert_eq!(projected.n(), 2);
    }

    #[test]
    fn loader_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");

        fs::write(&path, r#"{"n":2,"format":"dense-rowmajor-ijkl","components":[1.0,2.0]}"#)
            .unwrap();
        assert!(matches!(load_tensor::<f64>(&path, false), Err(CurvError::ShapeMismatch { .. })));

        fs::write(&path, r#"{"n":2,"format":"column-major","components":[]}"#).unwrap();
        assert!(matches!(load_tensor::<f64>(&path, false), Err(CurvError::TensorFormat(_))));

        fs::write(&path, r#"{"n":2,"format":"sparse-ijkl","entries":[[0,1,0,9,1.0]]}"#).unwrap();
        assert!(matches!(load_tensor::<f64>(&path, false), Err(CurvError::TensorFormat(_))));
    }

    #[test]
    fn save_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let t = complex_space_form::<f64>(4, 1.0, 1.0).unwrap();
        save_tensor(&a, &t).unwrap();
        save_tensor(&b, &t).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}
