//! Markov-chain data types, norms, transient stepping and uniformization.
//!
//! Distributions are row vectors: one step maps `p^T` to `p^T P`.

mod io;
mod matrix;

pub use io::{
    load_distribution, load_matrix, read_csv_matrix, read_matrix_market, save_distribution,
    save_matrix, write_csv_matrix, write_matrix_market, MatrixFormat,
};
pub use matrix::{CsrMatrix, DenseMatrix, Matrix};
pub(crate) use matrix::{axpy, dist1, dot, norm1, norm2};

use crate::error::{Error, Result};

/// Row-sum tolerance used when none is given.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Row-sum tolerance for generator matrices.
pub const GENERATOR_TOL: f64 = 1e-10;

/// A validated row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    matrix: Matrix,
}

impl StochasticMatrix {
    /// Validates with the default tolerance.
    pub fn new(m: impl Into<Matrix>) -> Result<Self> {
        validate_stochastic(m, STOCHASTIC_TOL)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::Dense(DenseMatrix::identity(n)) }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }

    pub fn to_dense_chain(&self) -> Self {
        Self { matrix: Matrix::Dense(self.matrix.to_dense()) }
    }

    pub fn to_sparse_chain(&self) -> Self {
        Self { matrix: Matrix::Sparse(self.matrix.to_sparse()) }
    }

    /// `out^T = x^T P`.
    #[inline]
    pub fn step_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.vec_mul_into(x, out);
    }
}

/// Validates `m` as a transition matrix. Entries in `(-tol, 0)` are clamped to zero.
pub fn validate_stochastic(m: impl Into<Matrix>, tol: f64) -> Result<StochasticMatrix> {
    let mut matrix = m.into();
    if matrix.rows() != matrix.cols() {
        return Err(Error::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
    }
    for i in 0..matrix.rows() {
        let mut bad = None;
        matrix.for_each_in_row(i, |j, v| {
            if bad.is_none() && (v < -tol || v.is_nan()) {
                bad = Some(j);
            }
        });
        if let Some(col) = bad {
            return Err(Error::NegativeEntry { row: i, col });
        }
        let sum = matrix.row_sum(i);
        if !((sum - 1.0).abs() <= tol) {
            return Err(Error::RowSumViolation { row: i, sum });
        }
    }
    for v in matrix.values_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(StochasticMatrix { matrix })
}

/// A CTMC rate matrix: non-negative off-diagonal, zero row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    matrix: Matrix,
}

impl GeneratorMatrix {
    pub fn new(m: impl Into<Matrix>) -> Result<Self> {
        let matrix = m.into();
        if matrix.rows() != matrix.cols() {
            return Err(Error::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        for i in 0..matrix.rows() {
            let mut bad = None;
            matrix.for_each_in_row(i, |j, v| {
                if bad.is_none() && ((j != i && v < 0.0) || v.is_nan()) {
                    bad = Some(j);
                }
            });
            if let Some(col) = bad {
                return Err(Error::NegativeEntry { row: i, col });
            }
            let sum = matrix.row_sum(i);
            if !(sum.abs() <= GENERATOR_TOL) {
                return Err(Error::GeneratorRowSum { row: i, sum });
            }
        }
        Ok(Self { matrix })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `max_i |Q(i,i)|`.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.n()).map(|i| self.matrix.get(i, i).abs()).fold(0.0, f64::max)
    }
}

/// `P = I + Q/gamma`. Defaults to the largest exit rate (or 1 for `Q = 0`).
///
/// The diagonal is recomputed from the off-diagonal rates so that row sums are
/// exact up to rounding even when `Q`'s own row sums are only accurate to 1e-10.
pub fn uniformize(q: &GeneratorMatrix, gamma: Option<f64>) -> Result<StochasticMatrix> {
    let required = q.max_exit_rate();
    let gamma = match gamma {
        Some(g) if !(g >= required) || g <= 0.0 => {
            return Err(Error::GammaTooSmall { gamma: g, required });
        }
        Some(g) => g,
        None if required == 0.0 => 1.0,
        None => required,
    };
    let n = q.n();
    let off_diag_scaled = |i: usize, f: &mut dyn FnMut(usize, f64)| {
        q.matrix.for_each_in_row(i, |j, v| {
            if j != i && v != 0.0 {
                f(j, v / gamma)
            }
        })
    };
    let matrix = match &q.matrix {
        Matrix::Dense(_) => {
            let mut p = DenseMatrix::zeros(n, n);
            for i in 0..n {
                let mut out = 0.0;
                off_diag_scaled(i, &mut |j, v| {
                    p.set(i, j, v);
                    out += v;
                });
                p.set(i, i, 1.0 - out);
            }
            Matrix::Dense(p)
        }
        Matrix::Sparse(_) => {
            let mut triplets = Vec::new();
            for i in 0..n {
                let mut out = 0.0;
                off_diag_scaled(i, &mut |j, v| {
                    triplets.push((i, j, v));
                    out += v;
                });
                if 1.0 - out != 0.0 {
                    triplets.push((i, i, 1.0 - out));
                }
            }
            Matrix::Sparse(CsrMatrix::from_triplets(n, n, &triplets)?)
        }
    };
    validate_stochastic(matrix, STOCHASTIC_TOL)
}

/// A vector of probability mass per state.
///
/// Approximated distributions use the same type with `strict == false`;
/// their entries may be negative and need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    values: Vec<f64>,
    strict: bool,
}

impl Distribution {
    pub fn strict(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = values.iter().position(|&v| !(v >= -1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "distribution entry {i} is negative ({})",
                values[i]
            )));
        }
        let sum: f64 = values.iter().sum();
        if !((sum - 1.0).abs() <= 1e-10) {
            return Err(Error::InvalidArgument(format!("distribution sums to {sum}")));
        }
        Ok(Self { values, strict: true })
    }

    pub fn approximate(values: Vec<f64>) -> Self {
        Self { values, strict: false }
    }

    pub fn uniform(n: usize) -> Self {
        Self { values: vec![1.0 / n as f64; n], strict: true }
    }

    pub fn point(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidArgument(format!("state {i} out of range for {n} states")));
        }
        let mut values = vec![0.0; n];
        values[i] = 1.0;
        Ok(Self { values, strict: true })
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn l1_norm(&self) -> f64 {
        norm1(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        norm2(&self.values)
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// `p_k^T = p_0^T P^k` by `k` successive vector-matrix products.
pub fn transient(p: &StochasticMatrix, p0: &Distribution, k: usize) -> Result<Distribution> {
    if p0.len() != p.n() {
        return Err(Error::dims(p.n(), p0.len()));
    }
    let mut cur = p0.values.clone();
    let mut next = vec![0.0; p.n()];
    for _ in 0..k {
        p.step_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Distribution { values: cur, strict: p0.strict })
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &DenseMatrix) -> f64 {
    m.inf_norm()
}

/// `sum_j |v(j)| * sum_i |M(j,i)|`, which sits between `||v^T M||_1` and
/// `||v||_1 * ||M||_inf`.
pub fn weighted_abs_row_sums(v: &[f64], m: &DenseMatrix) -> Result<f64> {
    if v.len() != m.rows() {
        return Err(Error::dims(m.rows(), v.len()));
    }
    Ok(weighted_sum(v, &m.row_abs_sums()))
}

/// `<|v|, r>` for precomputed absolute row sums `r`.
#[inline]
pub(crate) fn weighted_sum(v: &[f64], row_abs: &[f64]) -> f64 {
    v.iter().zip(row_abs).map(|(a, r)| a.abs() * r).sum()
}
