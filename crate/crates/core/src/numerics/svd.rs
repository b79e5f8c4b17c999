//! Singular value decompositions.
//!
//! Small matrices (min dimension ≤ [`DENSE_LIMIT`]) go through one-sided
//! Jacobi, which returns every singular triplet to near machine precision.
//! Larger matrices use randomized subspace iteration (oversampling 8, four
//! power iterations), widening the sketch if the residual check fails.
//! Tall matrices are reduced by a QR step before Jacobi.
//!
//! Sign convention: the largest-magnitude entry of every right singular
//! vector is positive; the matching left vector is flipped with it.

use super::matrix::{axpy, dot, norm, DenseMatrix};
use crate::error::{Error, Result};
use crate::rng::{roles, CounterRng};

pub const DENSE_LIMIT: usize = 200;
const OVERSAMPLING: usize = 8;
const POWER_ITERATIONS: usize = 4;
const MAX_POWER_ITERATIONS: usize = 64;
const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = left · diag(values) · rightᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// rows × r, orthonormal columns.
    pub left: DenseMatrix,
    /// cols × r, orthonormal columns.
    pub right: DenseMatrix,
}

impl Svd {
    pub fn rank_count(&self) -> usize {
        self.singular_values.len()
    }

    pub fn left_vector(&self, i: usize) -> Vec<f64> {
        self.left.column(i)
    }

    pub fn right_vector(&self, i: usize) -> Vec<f64> {
        self.right.column(i)
    }

    fn truncate(self, k: usize) -> Svd {
        let keep = |m: &DenseMatrix| {
            let mut out = DenseMatrix::zeros(m.rows(), k);
            for i in 0..m.rows() {
                out.row_mut(i).copy_from_slice(&m.row(i)[..k]);
            }
            out
        };
        Svd {
            singular_values: self.singular_values[..k].to_vec(),
            left: keep(&self.left),
            right: keep(&self.right),
        }
    }
}

/// Full thin SVD by one-sided (Hestenes) Jacobi rotations.
pub fn jacobi_svd(m: &DenseMatrix) -> Result<Svd> {
    if m.rows() >= 2 * m.cols() && m.cols() >= 8 {
        if let Some(svd) = qr_then_jacobi(m)? {
            return Ok(svd);
        }
    }
    if m.rows() >= m.cols() {
        jacobi_tall(m)
    } else {
        let t = jacobi_tall(&m.transpose())?;
        let mut svd = Svd {
            singular_values: t.singular_values,
            left: t.right,
            right: t.left,
        };
        canonicalize_signs(&mut svd);
        Ok(svd)
    }
}

/// Tall matrices: `M = QR`, then Jacobi on the small square `R`.
/// Returns `None` when `M` is column-rank deficient.
fn qr_then_jacobi(m: &DenseMatrix) -> Result<Option<Svd>> {
    let q = orthonormal_columns(m);
    if (0..q.cols()).any(|j| q.column(j).iter().all(|&x| x == 0.0)) {
        return Ok(None);
    }
    let r = q.transpose_matmul(m);
    let small = jacobi_tall(&r)?;
    Ok(Some(Svd {
        singular_values: small.singular_values,
        left: q.matmul(&small.left),
        right: small.right,
    }))
}

/// All singular values, descending.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(jacobi_svd(m)?.singular_values)
}

fn jacobi_tall(m: &DenseMatrix) -> Result<Svd> {
    let (rows, cols) = (m.rows(), m.cols());
    // Column-major working copies of A and V.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (rows.max(1) as f64).sqrt();
    let mut norms2: Vec<f64> = a.iter().map(|c| dot(c, c)).collect();
    let scale = norms2.iter().cloned().fold(0.0, f64::max);
    let negligible = scale * f64::EPSILON * f64::EPSILON;

    let mut converged = cols < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = norms2[p];
                let beta = norms2[q];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(&a[p], &a[q]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                norms2[p] = dot(&a[p], &a[p]);
                norms2[q] = dot(&a[q], &a[q]);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps ({rows}x{cols})"
        )));
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let sigma: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));

    let sigma_max = order.first().map_or(0.0, |&i| sigma[i]);
    let zero_cut = sigma_max * f64::EPSILON * (rows.max(cols) as f64);
    let mut left_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut values = Vec::with_capacity(cols);
    let mut right = DenseMatrix::zeros(cols, cols);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[j];
        let u = if s > zero_cut && s > 0.0 {
            a[j].iter().map(|x| x / s).collect()
        } else {
            complete_basis(&left_cols, rows)
        };
        left_cols.push(u);
        values.push(if s > zero_cut { s } else { s.max(0.0) });
        for i in 0..cols {
            right.set(i, k, v[j][i]);
        }
    }
    let mut left = DenseMatrix::zeros(rows, cols);
    for (k, col) in left_cols.iter().enumerate() {
        for i in 0..rows {
            left.set(i, k, col[i]);
        }
    }
    let mut svd = Svd {
        singular_values: values,
        left,
        right,
    };
    canonicalize_signs(&mut svd);
    Ok(svd)
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (x, y) = (&mut lo[p], &mut hi[0]);
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// A unit vector orthogonal to every vector in `basis`.
fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    for e in 0..dim {
        let mut u = vec![0.0; dim];
        u[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let proj = dot(b, &u);
                axpy(-proj, b, &mut u);
            }
        }
        let n = norm(&u);
        if n > 1e-8 {
            u.iter_mut().for_each(|x| *x /= n);
            return u;
        }
    }
    vec![0.0; dim]
}

fn canonicalize_signs(svd: &mut Svd) {
    let r = svd.singular_values.len();
    for k in 0..r {
        let rows = svd.right.rows();
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for i in 0..rows {
            let x = svd.right.get(i, k);
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            for i in 0..rows {
                svd.right.set(i, k, -svd.right.get(i, k));
            }
            for i in 0..svd.left.rows() {
                svd.left.set(i, k, -svd.left.get(i, k));
            }
        }
    }
}

/// Top-`k` singular triplets of `m`.
///
/// Every returned triplet satisfies `‖M qᵢ − σᵢ pᵢ‖ ≤ tol·‖M‖_F`; the
/// randomized path keeps iterating until it does or gives up.
pub fn top_singular(m: &DenseMatrix, k: usize, tol: f64) -> Result<Svd> {
    let min_dim = m.rows().min(m.cols());
    if k == 0 || k > min_dim {
        return Err(Error::param(format!(
            "k = {k} must be in 1..={min_dim} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if min_dim <= DENSE_LIMIT {
        return Ok(jacobi_svd(m)?.truncate(k));
    }
    randomized(m, k, tol)
}

fn randomized(m: &DenseMatrix, k: usize, tol: f64) -> Result<Svd> {
    let min_dim = m.rows().min(m.cols());
    let fro = m.frobenius_norm();
    let mut width = (k + OVERSAMPLING).min(min_dim);
    let mut iterations = 0;
    // Slowly decaying spectra stall subspace iteration, so each failed
    // round doubles the sketch; at full width the range is captured exactly.
    loop {
        let mut rng = CounterRng::new(width as u64, roles::SVD_SKETCH);
        let mut omega = DenseMatrix::zeros(m.cols(), width);
        for i in 0..m.cols() {
            rng.fill_normal(omega.row_mut(i));
        }
        let mut q = orthonormal_columns(&m.matmul(&omega));
        for _ in 0..POWER_ITERATIONS {
            let z = orthonormal_columns(&m.transpose_matmul(&q));
            q = orthonormal_columns(&m.matmul(&z));
        }
        iterations += POWER_ITERATIONS;

        // B = Qᵀ M is width × cols.
        let b = q.transpose_matmul(m);
        let small = jacobi_svd(&b)?;
        let svd = Svd {
            singular_values: small.singular_values,
            left: q.matmul(&small.left),
            right: small.right,
        }
        .truncate(k);
        if residuals_ok(m, &svd, tol * fro) {
            return Ok(svd);
        }
        if width == min_dim || iterations >= MAX_POWER_ITERATIONS {
            return Err(Error::Numeric(format!(
                "randomized SVD residual above {tol:e}·‖M‖_F (sketch width {width}, {iterations} power iterations)"
            )));
        }
        width = (width * 2).min(min_dim);
    }
}

fn residuals_ok(m: &DenseMatrix, svd: &Svd, bound: f64) -> bool {
    (0..svd.rank_count()).all(|i| {
        let q = svd.right_vector(i);
        let p = svd.left_vector(i);
        let mut r = m.matvec(&q);
        axpy(-svd.singular_values[i], &p, &mut r);
        norm(&r) <= bound
    })
}

/// Orthonormal basis for the column space (modified Gram-Schmidt, applied
/// twice). Dependent columns come back as zero columns.
pub fn orthonormal_columns(m: &DenseMatrix) -> DenseMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut c = m.column(j);
        let original = norm(&c);
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(b, &c);
                axpy(-proj, b, &mut c);
            }
        }
        let n = norm(&c);
        if n > original * 1e-12 && n > 0.0 {
            c.iter_mut().for_each(|x| *x /= n);
        } else {
            c.iter_mut().for_each(|x| *x = 0.0);
        }
        basis.push(c);
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for (j, c) in basis.iter().enumerate() {
        for i in 0..rows {
            out.set(i, j, c[i]);
        }
    }
    out
}

/// Precomputed Moore-Penrose pseudo-inverse of a full-column-rank matrix.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    svd: Svd,
}

impl PseudoInverse {
    pub fn new(v: &DenseMatrix) -> Result<Self> {
        if v.rows() < v.cols() {
            return Err(Error::param(format!(
                "pseudo-inverse solve needs rows ≥ cols, got {}x{}",
                v.rows(),
                v.cols()
            )));
        }
        let svd = jacobi_svd(v)?;
        let sigma_max = svd.singular_values.first().copied().unwrap_or(0.0);
        let sigma_min = svd.singular_values.last().copied().unwrap_or(0.0);
        let tol = sigma_max * f64::EPSILON * v.rows().max(v.cols()) as f64;
        if sigma_min <= tol || sigma_min == 0.0 {
            return Err(Error::Singular { sigma_min });
        }
        Ok(Self { svd })
    }

    pub fn svd(&self) -> &Svd {
        &self.svd
    }

    pub fn sigma_min(&self) -> f64 {
        *self.svd.singular_values.last().unwrap()
    }

    /// Left singular coefficients `Pᵀ y`.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        self.svd.left.transpose_matvec(y)
    }

    /// `V† y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut coef = self.project(y);
        for (c, s) in coef.iter_mut().zip(&self.svd.singular_values) {
            *c /= s;
        }
        self.svd.right.matvec(&coef)
    }
}

/// `argmin_x ‖Vx − y‖₂` for full-column-rank `V`.
pub fn pinv_solve(v: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != v.rows() {
        return Err(Error::param(format!(
            "right-hand side has length {}, expected {}",
            y.len(),
            v.rows()
        )));
    }
    Ok(PseudoInverse::new(v)?.apply(y))
}
