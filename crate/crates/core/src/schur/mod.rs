//! QR decomposition, complex Schur decomposition and extraction of the
//! aggregated stationary vector.
//!
//! The Schur form is computed in complex arithmetic: Householder reduction to
//! upper Hessenberg form, then single-shift QR sweeps with Wilkinson shifts
//! applied through Givens rotations. The result satisfies `M = U T U^H`, so
//! the columns of `U` are Schur vectors and the first column of `U` is an
//! eigenvector for `T(0,0)`. Eigenvalues are reordered by unitary swaps to
//! descending real part, ties broken by ascending imaginary magnitude.

mod cmatrix;

pub use cmatrix::{CMatrix, C64};

use cmatrix::{ONE, ZERO};

use crate::arnoldi::Aggregation;
use crate::error::{Error, Result};
use crate::mchain::DenseMatrix;

/// Relative subdiagonal size below which an entry is deflated.
pub const DEFAULT_SCHUR_TOL: f64 = 1e-12;
/// Imaginary residue above which a stationary vector is rejected.
pub const COMPLEX_TOL: f64 = 1e-8;

const SORT_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QRPair {
    pub q: CMatrix,
    pub r: CMatrix,
}

/// Gram-Schmidt QR of the columns of `m` (two passes per column). The diagonal
/// of `R` is real and non-negative.
pub fn qr_decompose(m: &CMatrix) -> Result<QRPair> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q_cols: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut r = CMatrix::zeros(cols, cols);
    for j in 0..cols {
        let mut w = m.column(j);
        let input_norm = cnorm(&w);
        for _pass in 0..2 {
            for (i, q) in q_cols.iter().enumerate() {
                let h = cdot(q, &w);
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= h * qk;
                }
                r[(i, j)] += h;
            }
        }
        let norm = cnorm(&w);
        if j >= rows || !(norm > crate::orthonorm::RANK_TOL * input_norm) {
            return Err(Error::RankDeficient(j));
        }
        r[(j, j)] = C64::new(norm, 0.0);
        w.iter_mut().for_each(|x| *x /= norm);
        q_cols.push(w);
    }
    let mut q = CMatrix::zeros(rows, cols);
    for (j, col) in q_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            q[(i, j)] = v;
        }
    }
    Ok(QRPair { q, r })
}

pub fn qr_decompose_real(m: &DenseMatrix) -> Result<QRPair> {
    qr_decompose(&CMatrix::from_real(m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchurDecomposition {
    u: CMatrix,
    t: CMatrix,
    eigenvalues: Vec<C64>,
}

impl SchurDecomposition {
    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn t(&self) -> &CMatrix {
        &self.t
    }

    /// Diagonal of `T`, in sorted order.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn n(&self) -> usize {
        self.t.rows()
    }

    /// `U T U^H`.
    pub fn reconstruct(&self) -> CMatrix {
        self.u.matmul(&self.t).matmul(&self.u.adjoint())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurOptions {
    /// Total QR sweeps allowed; `None` means `30 * n`.
    pub max_sweeps: Option<usize>,
    pub tol: f64,
    /// Skip the final eigenvalue reordering.
    pub unsorted: bool,
}

impl Default for SchurOptions {
    fn default() -> Self {
        Self { max_sweeps: None, tol: DEFAULT_SCHUR_TOL, unsorted: false }
    }
}

pub fn schur_decompose(m: &DenseMatrix, opts: SchurOptions) -> Result<SchurDecomposition> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    schur_decompose_complex(&CMatrix::from_real(m), opts)
}

pub fn schur_decompose_complex(m: &CMatrix, opts: SchurOptions) -> Result<SchurDecomposition> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::NotSquare { rows: n, cols: m.cols() });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("Schur tolerance {}", opts.tol)));
    }
    let mut t = m.clone();
    let mut u = CMatrix::identity(n);
    if !is_hessenberg(&t) {
        reduce_to_hessenberg(&mut t, &mut u);
    }
    let max_sweeps = opts.max_sweeps.unwrap_or(30 * n.max(1));
    hessenberg_qr(&mut t, &mut u, opts.tol, max_sweeps)?;
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    if !opts.unsorted {
        sort_schur(&mut t, &mut u);
    }
    let eigenvalues = (0..n).map(|i| t[(i, i)]).collect();
    Ok(SchurDecomposition { u, t, eigenvalues })
}

fn is_hessenberg(m: &CMatrix) -> bool {
    let n = m.rows();
    (2..n).all(|i| (0..i - 1).all(|j| m[(i, j)] == ZERO))
}

/// Householder reduction `M = U H U^H` with `H` upper Hessenberg.
fn reduce_to_hessenberg(h: &mut CMatrix, u: &mut CMatrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = cnorm(&v);
        if xnorm == 0.0 {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm = cnorm(&v);
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);

        // Left: rows k+1.., H <- (I - 2 v v^H) H.
        for j in k..n {
            let s: C64 = v.iter().enumerate().map(|(a, va)| va.conj() * h[(k + 1 + a, j)]).sum();
            for (a, va) in v.iter().enumerate() {
                h[(k + 1 + a, j)] -= 2.0 * va * s;
            }
        }
        // Right: columns k+1.., H <- H (I - 2 v v^H), and the same for U.
        for mat in [&mut *h, &mut *u] {
            for i in 0..n {
                let s: C64 = v.iter().enumerate().map(|(a, va)| mat[(i, k + 1 + a)] * va).sum();
                for (a, va) in v.iter().enumerate() {
                    mat[(i, k + 1 + a)] -= 2.0 * s * va.conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// `(c, s)` with `[[c, s], [-conj(s), c]] [a; b] = [r; 0]`, `c` real.
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, ONE);
    }
    let (na, nb) = (a.norm(), b.norm());
    let nrm = na.hypot(nb);
    let phase = a / na;
    (na / nrm, phase * b.conj() / nrm)
}

/// Rows `k, k+1` of `m` over columns `cols` <- `G [row_k; row_k1]`.
fn rotate_rows(m: &mut CMatrix, k: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (x, y) = (m[(k, j)], m[(k + 1, j)]);
        m[(k, j)] = c * x + s * y;
        m[(k + 1, j)] = -s.conj() * x + c * y;
    }
}

/// Columns `k, k+1` of `m` over rows `rows` <- `[col_k, col_k1] G^H`.
fn rotate_cols(m: &mut CMatrix, k: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let (x, y) = (m[(i, k)], m[(i, k + 1)]);
        m[(i, k)] = c * x + s.conj() * y;
        m[(i, k + 1)] = -s * x + c * y;
    }
}

fn hessenberg_qr(t: &mut CMatrix, u: &mut CMatrix, tol: f64, max_sweeps: usize) -> Result<()> {
    let n = t.rows();
    if n < 2 {
        return Ok(());
    }
    let scale = t.inf_norm();
    let negligible = |t: &CMatrix, l: usize| {
        let sub = t[(l, l - 1)].norm();
        let diag = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
        let reference = if diag > 0.0 { diag } else { scale };
        sub <= tol * reference || sub <= f64::MIN_POSITIVE
    };

    let mut rotations: Vec<(f64, C64)> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            if negligible(t, lo) {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence(max_sweeps));
        }
        sweeps += 1;
        since_deflation += 1;

        let shift = if since_deflation % 11 == 10 {
            // Exceptional shift to break cycles.
            t[(hi, hi)] + C64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };

        for k in lo..=hi {
            t[(k, k)] -= shift;
        }
        rotations.clear();
        for k in lo..hi {
            let (c, s) = givens(t[(k, k)], t[(k + 1, k)]);
            rotate_rows(t, k, c, s, k..n);
            t[(k + 1, k)] = ZERO;
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            rotate_cols(t, k, c, s, 0..(k + 2).min(n));
            rotate_cols(u, k, c, s, 0..n);
        }
        for k in lo..=hi {
            t[(k, k)] += shift;
        }
    }
    Ok(())
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let bc = b * c;
    if bc == ZERO {
        return d;
    }
    let disc = (half * half + bc).sqrt();
    let den = if (half + disc).norm() >= (half - disc).norm() { half + disc } else { half - disc };
    if den == ZERO {
        d
    } else {
        d - bc / den
    }
}

fn comes_before(a: C64, b: C64) -> bool {
    if a.re > b.re + SORT_TIE {
        return true;
    }
    (a.re - b.re).abs() <= SORT_TIE && a.im.abs() < b.im.abs() - SORT_TIE
}

/// Stable bubble sort of the diagonal through adjacent unitary swaps.
fn sort_schur(t: &mut CMatrix, u: &mut CMatrix) {
    let n = t.rows();
    for pass in 0..n {
        let mut swapped = false;
        for k in 0..n.saturating_sub(1 + pass) {
            if comes_before(t[(k + 1, k + 1)], t[(k, k)]) {
                swap_adjacent(t, u, k);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

/// Exchanges `T(k,k)` and `T(k+1,k+1)` keeping `T` triangular.
fn swap_adjacent(t: &mut CMatrix, u: &mut CMatrix, k: usize) {
    let n = t.rows();
    let (t11, t22, t12) = (t[(k, k)], t[(k + 1, k + 1)], t[(k, k + 1)]);
    // First column of the rotation: eigenvector of the 2x2 block for t22.
    let (x1, x2) = (t12, t22 - t11);
    let nrm = x1.norm().hypot(x2.norm());
    if nrm == 0.0 {
        return;
    }
    let (x1, x2) = (x1 / nrm, x2 / nrm);
    // Rows: G^H = [[conj x1, conj x2], [-x2, x1]].
    for j in k..n {
        let (a, b) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = x1.conj() * a + x2.conj() * b;
        t[(k + 1, j)] = -x2 * a + x1 * b;
    }
    // Columns: G = [[x1, -conj x2], [x2, conj x1]].
    let cols = |m: &mut CMatrix, rows: usize| {
        for i in 0..rows {
            let (a, b) = (m[(i, k)], m[(i, k + 1)]);
            m[(i, k)] = a * x1 + b * x2;
            m[(i, k + 1)] = -a * x2.conj() + b * x1.conj();
        }
    };
    cols(t, k + 2);
    cols(u, n);
    t[(k + 1, k)] = ZERO;
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Eigenpair whose eigenvalue has real part closest to one (then smallest
/// imaginary magnitude). Returns a unit-norm right eigenvector of the
/// decomposed matrix.
pub fn leading_eigvec(s: &SchurDecomposition) -> (C64, Vec<C64>) {
    let n = s.n();
    let mut sel = 0;
    for i in 1..n {
        let (a, b) = (s.eigenvalues[i], s.eigenvalues[sel]);
        let (da, db) = ((a.re - 1.0).abs(), (b.re - 1.0).abs());
        if da < db - SORT_TIE || ((da - db).abs() <= SORT_TIE && a.im.abs() < b.im.abs() - SORT_TIE) {
            sel = i;
        }
    }
    let lambda = s.eigenvalues[sel];
    if sel == 0 {
        return (lambda, s.u.column(0));
    }
    // Back substitution on (T - lambda I) y = 0 with y(sel) = 1.
    let smin = (f64::EPSILON * s.t.inf_norm()).max(f64::MIN_POSITIVE);
    let mut y = vec![ZERO; sel + 1];
    y[sel] = ONE;
    for i in (0..sel).rev() {
        let rhs: C64 = (i + 1..=sel).map(|k| s.t[(i, k)] * y[k]).sum();
        let mut den = s.t[(i, i)] - lambda;
        if den.norm() < smin {
            den = C64::new(smin, 0.0);
        }
        y[i] = -rhs / den;
    }
    let mut v: Vec<C64> = (0..n).map(|r| (0..=sel).map(|k| s.u[(r, k)] * y[k]).sum()).collect();
    let nrm = cnorm(&v);
    v.iter_mut().for_each(|x| *x /= nrm);
    (lambda, v)
}

/// Attaches the aggregated stationary vector: the left eigenvector of `Pi` for
/// the eigenvalue closest to one, scaled so that `||pi^T A||_1 = 1`.
pub fn aggregated_stationary(agg: &Aggregation) -> Result<Aggregation> {
    let mut out = agg.clone();
    attach_stationary(&mut out)?;
    Ok(out)
}

pub(crate) fn attach_stationary(agg: &mut Aggregation) -> Result<()> {
    let s = schur_decompose(&agg.pi().transpose(), SchurOptions::default())?;
    let (_, v) = leading_eigvec(&s);
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .filter(|z| z.norm() > 0.0)
        .ok_or(Error::ZeroVector)?;
    let phase = pivot.conj() / pivot.norm();
    let aligned: Vec<C64> = v.iter().map(|z| z * phase).collect();
    let imag = aligned.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > COMPLEX_TOL {
        return Err(Error::ComplexStationary(imag));
    }
    let mut pi: Vec<f64> = aligned.iter().map(|z| z.re).collect();
    let approx = agg.disaggregate(&pi);
    let l1: f64 = approx.iter().map(|x| x.abs()).sum();
    if !(l1 > 0.0) {
        return Err(Error::ZeroVector);
    }
    // Orient so the approximated stationary distribution has positive mass.
    let sign = if approx.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    pi.iter_mut().for_each(|x| *x *= sign / l1);
    agg.set_stationary(pi);
    Ok(())
}

fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
