//! Small dense linear algebra: square matrices, a cyclic Jacobi eigensolver
//! for symmetric matrices, and the Faddeev-LeVerrier characteristic
//! polynomial. Problem sizes here are tiny (n <= 16), so everything is a
//! plain row-major `Vec`.

use rand::Rng;

use crate::error::{CurvError, Result};
use crate::scalar::{as_f64, real, Real};

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Real> SquareMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Self { n, data: rows.iter().flatten().copied().collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| {
            (0..self.n).map(|k| self[(i, k)] * other[(k, j)]).sum()
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn scale(&self, c: S) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] * c)
    }

    pub fn trace(&self) -> S {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|&x| x * x).sum::<S>().sqrt()
    }

    /// Largest absolute deviation from symmetry, max |A_ij - A_ji|.
    pub fn symmetry_deviation(&self) -> S {
        let mut worst = S::zero();
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// RMS of the off-diagonal entries, the Jacobi sweep convergence measure.
    fn off_diagonal_norm(&self) -> S {
        let mut s = S::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s = s + self[(i, j)] * self[(i, j)];
                }
            }
        }
        s.sqrt()
    }
}

impl<S> std::ops::Index<(usize, usize)> for SquareMatrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for SquareMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

#[inline]
pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// Returns `a` scaled to unit Euclidean norm. Panics on the zero vector.
pub fn normalized<S: Real>(a: &[S]) -> Vec<S> {
    let n = norm(a);
    assert!(n > S::zero(), "cannot normalize the zero vector");
    a.iter().map(|&x| x / n).collect()
}

/// `a - <a,b> b` for unit `b`.
pub fn reject<S: Real>(a: &[S], b: &[S]) -> Vec<S> {
    let c = dot(a, b);
    a.iter().zip(b).map(|(&x, &y)| x - c * y).collect()
}

pub fn basis_vector<S: Real>(n: usize, i: usize) -> Vec<S> {
    let mut e = vec![S::zero(); n];
    e[i] = S::one();
    e
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a symmetric matrix. `values` ascending, column `k`
/// of `vectors` is the eigenvector for `values[k]`; columns are orthonormal.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<S> {
    pub values: Vec<S>,
    pub vectors: SquareMatrix<S>,
}

impl<S: Real> SymmetricEigen<S> {
    pub fn eigenvector(&self, k: usize) -> Vec<S> {
        self.vectors.column(k)
    }
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations. Accurate to a few ulps of the spectral range for
/// the matrix sizes used here, and exact on diagonal input.
pub fn symmetric_eigen<S: Real>(matrix: &SquareMatrix<S>) -> Result<SymmetricEigen<S>> {
    let n = matrix.n();
    let mut a = matrix.clone();
    let mut v = SquareMatrix::identity(n);
    if n <= 1 {
        let values = if n == 1 { vec![a[(0, 0)]] } else { Vec::new() };
        return Ok(SymmetricEigen { values, vectors: v });
    }

    let norm_scale = a.frobenius_norm().max(S::one());
    let target = norm_scale * S::epsilon() * real::<S>(n as f64);

    let mut sweeps = 0;
    loop {
        let off = a.off_diagonal_norm();
        if off <= target {
            let mut values: Vec<S> = (0..n).map(|i| a[(i, i)]).collect();
            sort_eigenpairs(&mut values, &mut v);
            return Ok(SymmetricEigen { values, vectors: v });
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == S::zero() {
                    continue;
                }
                // Rotation angle that annihilates a_pq (Golub & Van Loan 8.4).
                let theta = (a[(q, q)] - a[(p, p)]) / (real::<S>(2.0) * apq);
                let t = {
                    let denom = theta.abs() + (S::one() + theta * theta).sqrt();
                    if theta >= S::zero() { S::one() / denom } else { -S::one() / denom }
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;

                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = S::zero();
                a[(q, p)] = S::zero();
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(p, k)] = a[(k, p)];
                        a[(k, q)] = s * akp + c * akq;
                        a[(q, k)] = a[(k, q)];
                    }
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    Err(CurvError::EigenNonConvergence {
        sweeps: MAX_JACOBI_SWEEPS,
        off: as_f64(a.off_diagonal_norm()),
    })
}

fn sort_eigenpairs<S: Real>(values: &mut [S], vectors: &mut SquareMatrix<S>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("eigenvalues are finite"));
    let old_values = values.to_vec();
    let old_vectors = vectors.clone();
    for (new_col, &old_col) in order.iter().enumerate() {
        values[new_col] = old_values[old_col];
        for r in 0..n {
            vectors[(r, new_col)] = old_vectors[(r, old_col)];
        }
    }
}

// ---------------------------------------------------------------------------
// Characteristic polynomial
// ---------------------------------------------------------------------------

/// Coefficients of det(tI - A), ascending by degree; `coeffs[n] = 1`.
///
/// Faddeev-LeVerrier, so the result is independent of any eigensolve and can
/// cross-check one.
pub fn characteristic_polynomial<S: Real>(a: &SquareMatrix<S>) -> Vec<S> {
    let n = a.n();
    let mut coeffs = vec![S::zero(); n + 1];
    coeffs[n] = S::one();
    let mut m = SquareMatrix::zeros(n); // M_0 = 0
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        m = a.matmul(&m);
        let c_prev = coeffs[n - k + 1];
        for i in 0..n {
            m[(i, i)] = m[(i, i)] + c_prev;
        }
        let am = a.matmul(&m);
        coeffs[n - k] = -am.trace() / real::<S>(k as f64);
    }
    coeffs
}

/// Expands prod_k (t - roots[k]) into ascending coefficients. Test oracle for
/// [`characteristic_polynomial`].
pub fn polynomial_from_roots<S: Real>(roots: &[S]) -> Vec<S> {
    let mut coeffs = vec![S::zero(); roots.len() + 1];
    coeffs[0] = S::one();
    let mut degree = 0;
    for &r in roots {
        coeffs[degree + 1] = coeffs[degree];
        degree += 1;
        for k in (1..degree).rev() {
            coeffs[k] = coeffs[k - 1] - r * coeffs[k];
        }
        coeffs[0] = -r * coeffs[0];
    }
    coeffs
}

// ---------------------------------------------------------------------------
// Random orthogonal matrices
// ---------------------------------------------------------------------------

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix by modified
/// Gram-Schmidt with re-orthogonalization (R has positive diagonal, which
/// makes the factor unique and Haar).
pub fn random_orthogonal<S: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> SquareMatrix<S> {
    let tiny = real::<S>(1e-6);
    let mut columns: Vec<Vec<S>> = Vec::with_capacity(n);
    while columns.len() < n {
        let mut col: Vec<S> = (0..n).map(|_| S::standard_normal(rng)).collect();
        for _ in 0..2 {
            for prev in &columns {
                col = reject(&col, prev);
            }
        }
        let len = norm(&col);
        if len < tiny {
            continue; // effectively dependent draw, try again
        }
        columns.push(col.iter().map(|&x| x / len).collect());
    }
    SquareMatrix::from_fn(n, |i, j| columns[j][i])
}
