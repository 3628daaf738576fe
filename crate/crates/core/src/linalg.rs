//! Dense complex linear algebra shared by the frame, duality and moment code.

use nalgebra::linalg::{SymmetricEigen, SVD};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const EIGEN_EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as orthonormal columns in the same order.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigenpairs {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// V·diag(φ(λ))·V^H.
    pub fn reassemble<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= s);
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eigenpairs(m: &CMatrix) -> Result<Eigenpairs> {
    if !m.is_square() {
        return Err(Error::dim("hermitian eigenproblem", m.nrows(), m.ncols()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigenpairs {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    // Symmetrize explicitly; the solver only reads one triangle.
    let sym = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::try_new(sym, EIGEN_EPS, MAX_ITER).ok_or_else(|| {
        Error::Numeric(format!(
            "hermitian eigensolver did not converge (n = {n}, max |entry| = {:e})",
            max_abs(m)
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigenpairs { values, vectors })
}

/// Thin singular value decomposition with singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    /// V^H; row k is the conjugated k-th right singular vector.
    pub v_adjoint: CMatrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// k-th right singular vector as a column.
    pub fn right_vector(&self, k: usize) -> CVector {
        self.v_adjoint.row(k).adjoint()
    }

    pub fn left_vector(&self, k: usize) -> CVector {
        self.u.column(k).into_owned()
    }

    /// Number of singular values above `rel_cutoff · σ_max`.
    pub fn rank(&self, rel_cutoff: f64) -> usize {
        let cut = rel_cutoff * self.sigma_max();
        self.singular_values.iter().filter(|&&s| s > cut).count()
    }
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidConfig("singular value decomposition of an empty matrix".into()));
    }
    let dec = SVD::try_new(m.clone(), true, true, EIGEN_EPS, MAX_ITER)
        .ok_or_else(|| Error::Numeric(format!("SVD did not converge for a {rows}x{cols} matrix")))?;
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^H");
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    Ok(Svd {
        u: CMatrix::from_fn(rows, k, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| dec.singular_values[i]).collect(),
        v_adjoint: CMatrix::from_fn(k, cols, |r, c| v_t[(order[r], c)]),
    })
}

/// SVD whose right factor spans the full column space: a wide matrix is
/// padded with zero rows so that null directions show up as zero singular
/// values with explicit right vectors.
pub fn svd_full_right(m: &CMatrix) -> Result<Svd> {
    if m.nrows() >= m.ncols() {
        return svd(m);
    }
    let mut padded = CMatrix::zeros(m.ncols(), m.ncols());
    padded.rows_mut(0, m.nrows()).copy_from(m);
    svd(&padded)
}

pub fn to_vector(values: &[Complex64]) -> CVector {
    CVector::from_column_slice(values)
}
