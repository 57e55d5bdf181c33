//! Dense symmetric linear algebra kernels.
//!
//! Besides eigendecomposition and SPD solves, this module implements two
//! closed-form inverse identities that the rest of the crate relies on:
//! a symmetric rank-two update inverse (`rank2_inverse`, `rank2_apply`)
//! and a leave-one-column-out row of a Gram inverse via the Schur
//! complement (`loo_row_inverse`). Both are exactly testable against
//! direct inversion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for symmetry checks on input matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative singularity threshold for closed-form denominators.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Column `i` of `eigenvectors` pairs with `eigenvalues[i]`; the columns
/// are orthonormal and `V diag(lambda) V^T` reconstructs the input.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = {
            let mut m = self.eigenvectors.clone();
            for (j, mut col) in m.column_iter_mut().enumerate() {
                col *= self.eigenvalues[j];
            }
            m
        };
        &scaled * self.eigenvectors.transpose()
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = max_abs(a);
    let mut asym = 0.0_f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            tolerance: SYMMETRY_TOL * scale,
        });
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// non-increasing. Errors on asymmetric input or failed convergence.
///
/// Cyclic Jacobi rotations; slower than a tridiagonalization approach but
/// reliably accurate to near machine precision, which the reconstruction
/// invariant requires.
pub fn eig_sym(a: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    check_symmetric(a)?;
    let p = a.nrows();
    // Work on the symmetrized matrix so tiny asymmetries cannot leak in.
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::identity(p, p);

    let frob = m.norm().max(f64::MIN_POSITIVE);
    let target = 1e-15 * frob;
    let mut converged = p < 2;
    for _sweep in 0..100 {
        let mut off_sq = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                off_sq += m[(i, j)] * m[(i, j)];
            }
        }
        if (2.0 * off_sq).sqrt() <= target {
            converged = true;
            break;
        }
        for r in 0..p {
            for c in (r + 1)..p {
                let mrc = m[(r, c)];
                if mrc.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let tau = (m[(c, c)] - m[(r, r)]) / (2.0 * mrc);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                for k in 0..p {
                    let mkr = m[(k, r)];
                    let mkc = m[(k, c)];
                    m[(k, r)] = cos * mkr - sin * mkc;
                    m[(k, c)] = sin * mkr + cos * mkc;
                }
                for k in 0..p {
                    let mrk = m[(r, k)];
                    let mck = m[(c, k)];
                    m[(r, k)] = cos * mrk - sin * mck;
                    m[(c, k)] = sin * mrk + cos * mck;
                }
                for k in 0..p {
                    let vkr = v[(k, r)];
                    let vkc = v[(k, c)];
                    v[(k, r)] = cos * vkr - sin * vkc;
                    v[(k, c)] = sin * vkr + cos * vkc;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigNoConvergence);
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).expect("eigenvalue is NaN"));
    let eigenvalues = DVector::from_iterator(p, order.iter().map(|&i| m[(i, i)]));
    let mut eigenvectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &v.column(src));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Solve `A x = b` for symmetric positive definite `A` via Cholesky.
pub fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    check_symmetric(a)?;
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but rhs has length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let chol = nalgebra::Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(b))
}

/// Reusable Cholesky factor for repeated SPD solves against one matrix.
pub(crate) struct SpdFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SpdFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(a)?;
        let chol = nalgebra::Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { chol })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }
}

/// Which of the two update vectors to apply the inverse to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateSide {
    U,
    V,
}

struct Rank2Terms {
    /// `A^{-1} u`
    p: DVector<f64>,
    /// `A^{-1} v`
    q: DVector<f64>,
    /// `u^T A^{-1} u`
    a: f64,
    /// `u^T A^{-1} v`
    b: f64,
    /// `v^T A^{-1} v`
    c: f64,
    det: f64,
}

impl Rank2Terms {
    fn compute(p: DVector<f64>, q: DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> Result<Self> {
        let a = u.dot(&p);
        let b = u.dot(&q);
        let c = v.dot(&q);
        let det = (1.0 - c) * a + (1.0 + b) * (1.0 + b);
        let scale = 1.0 + ((1.0 - c) * a).abs() + (1.0 + b) * (1.0 + b);
        if det.abs() < SINGULARITY_TOL * scale {
            return Err(Error::SingularUpdate {
                det,
                threshold: SINGULARITY_TOL * scale,
            });
        }
        Ok(Self { p, q, a, b, c, det })
    }
}

/// Inverse of the symmetric rank-two update `uu^T + uv^T + vu^T + A`,
/// given `A^{-1}`, without refactorizing.
///
/// The denominator `(1 - v^T A^{-1} v) u^T A^{-1} u + (1 + u^T A^{-1} v)^2`
/// can legitimately vanish; that case is reported as an error instead of
/// returning garbage.
pub fn rank2_inverse(
    a_inv: &DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = a_inv.nrows();
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "A^-1 is {}x{} but u, v have lengths {}, {}",
            n,
            a_inv.ncols(),
            u.len(),
            v.len()
        )));
    }
    let t = Rank2Terms::compute(a_inv * u, a_inv * v, u, v)?;

    // A^{-1} - [(1-c) pp^T + (1+b)(pq^T + qp^T) - a qq^T] / det
    let mut out = a_inv.clone();
    let s1 = (1.0 - t.c) / t.det;
    let s2 = (1.0 + t.b) / t.det;
    let s3 = t.a / t.det;
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] -= s1 * t.p[i] * t.p[j] + s2 * (t.p[i] * t.q[j] + t.q[i] * t.p[j])
                - s3 * t.q[i] * t.q[j];
        }
    }
    Ok(out)
}

/// Apply the inverse of `uu^T + uv^T + vu^T + A` to `u` or `v` using only
/// two SPD solves against `A`.
pub fn rank2_apply(
    a: &DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    side: UpdateSide,
) -> Result<DVector<f64>> {
    let factor = SpdFactor::new(a)?;
    let t = Rank2Terms::compute(factor.solve(u), factor.solve(v), u, v)?;
    let out = match side {
        UpdateSide::U => (&t.p * (1.0 + t.b) - &t.q * t.a) / t.det,
        UpdateSide::V => (&t.q * (1.0 + t.b + t.a) - &t.p * (t.b + t.c)) / t.det,
    };
    Ok(out)
}

/// First row of the Gram inverse applied to a vector,
/// `e_1^T (W^T W)^{-1} omega`, computed by splitting off column one and
/// using the Schur complement of the remaining Gram block.
///
/// Requires `p > n` is not enforced beyond `W^T W` being invertible; the
/// denominator `||W_1||^2 - W_1^T pi W_1` vanishes exactly when column one
/// lies in the span of the others.
pub fn loo_row_inverse(w: &DMatrix<f64>, omega: &DVector<f64>) -> Result<f64> {
    let n = w.ncols();
    if omega.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "W has {} columns but omega has length {}",
            n,
            omega.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("W has no columns".into()));
    }
    let w1 = w.column(0);
    let w1_sq = w1.dot(&w1);
    if n == 1 {
        if w1_sq <= 0.0 {
            return Err(Error::CollinearColumns(0.0));
        }
        return Ok(omega[0] / w1_sq);
    }

    let rest = w.columns(1, n - 1);
    let gram_rest = rest.transpose() * rest;
    let factor = SpdFactor::new(&gram_rest).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::CollinearColumns(0.0),
        other => other,
    })?;

    let t = rest.transpose() * w1; // W~^T W_1
    let omega_rest = DVector::from_iterator(n - 1, omega.iter().skip(1).copied());

    let num = omega[0] - t.dot(&factor.solve(&omega_rest));
    let den = w1_sq - t.dot(&factor.solve(&t));
    if den.abs() <= SINGULARITY_TOL * w1_sq.max(f64::MIN_POSITIVE) {
        return Err(Error::CollinearColumns(den));
    }
    Ok(num / den)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    pub fn random_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
    }

    pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let b = random_matrix(rng, n, n);
        (&b + b.transpose()) * 0.5
    }

    pub fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let b = random_matrix(rng, n, n);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.5
    }

    /// Random orthogonal matrix via QR of a Gaussian matrix, signs fixed.
    pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let qr = random_matrix(rng, n, n).qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                let mut col = q.column_mut(j);
                col *= -1.0;
            }
        }
        q
    }
}
