//! Dense linear algebra for the small systems that appear in kernel
//! regression: symmetric eigendecomposition (cyclic Jacobi), Cholesky with a
//! conditioned solve ladder, a one-sided Jacobi SVD for tall feature
//! matrices, and a pivoted solver for small general systems.
//!
//! Matrices are `Vec<f64>`; symmetric/general routines use row-major order,
//! the SVD uses column-major order (documented per function). Sizes here are
//! tiny (|D| ≤ a few dozen), so O(n³) with Jacobi sweeps is both simple and
//! accurate.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};

/// Gram matrix too ill-conditioned to solve; carries the measured condition
/// number so callers can report it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularGram {
    pub condition: f64,
}

impl core::fmt::Display for SingularGram {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "gram matrix numerically singular (condition {:e} exceeds 1e15)",
            self.condition
        )
    }
}

impl core::error::Error for SingularGram {}

/// `a · b` for equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Eigenvalues and eigenvectors of a symmetric matrix (row-major, n×n) by
/// cyclic Jacobi rotations. Returns eigenvalues in descending order and the
/// matching eigenvectors as columns of a row-major n×n matrix.
pub fn jacobi_eigh(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    // Symmetrize defensively; callers assemble Gram matrices symmetrically,
    // but roundoff from |x−y|-style expressions can leave ulp asymmetry.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off <= f64::MIN_POSITIVE {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let scale = abs(m[p * n + p]) + abs(m[q * n + q]);
                if abs(apq) <= 1e-300 || abs(apq) <= f64::EPSILON * 1e-2 * scale {
                    continue;
                }
                rotated = true;
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                let tau = s / (1.0 + c);
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = m[k * n + p];
                        let akq = m[k * n + q];
                        let new_kp = akp - s * (akq + tau * akp);
                        let new_kq = akq + s * (akp - tau * akq);
                        m[k * n + p] = new_kp;
                        m[p * n + k] = new_kp;
                        m[k * n + q] = new_kq;
                        m[q * n + k] = new_kq;
                    }
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp - s * (vkq + tau * vkp);
                    v[k * n + q] = vkq + s * (vkp - tau * vkq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let eigvals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut eigvecs = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            eigvecs[row * n + new_col] = v[row * n + old_col];
        }
    }
    (eigvals, eigvecs)
}

/// Cholesky factor L (row-major lower triangle) of a symmetric
/// positive-definite matrix, or `None` on a non-positive pivot.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves L Lᵀ x = y given the Cholesky factor.
pub fn cholesky_solve(l: &[f64], n: usize, y: &[f64]) -> Vec<f64> {
    let mut z = y.to_vec();
    for i in 0..n {
        for k in 0..i {
            let lik = l[i * n + k];
            z[i] -= lik * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let lki = l[k * n + i];
            z[i] -= lki * z[k];
        }
        z[i] /= l[i * n + i];
    }
    z
}

/// Solution of a symmetric system through its eigendecomposition, truncating
/// eigenvalues with |λ| ≤ `rel_cutoff · max|λ|`. Returns the solution and the
/// numerical rank.
pub fn eigh_solve_truncated(
    eigvals: &[f64],
    eigvecs: &[f64],
    n: usize,
    y: &[f64],
    rel_cutoff: f64,
) -> (Vec<f64>, usize) {
    let lam_max = eigvals.iter().fold(0.0f64, |m, &l| m.max(abs(l)));
    let cutoff = lam_max * rel_cutoff;
    let mut x = vec![0.0; n];
    let mut rank = 0;
    for k in 0..n {
        let lam = eigvals[k];
        if abs(lam) <= cutoff || lam_max == 0.0 {
            continue;
        }
        rank += 1;
        let mut proj = 0.0;
        for row in 0..n {
            proj += eigvecs[row * n + k] * y[row];
        }
        let scale = proj / lam;
        for row in 0..n {
            x[row] += scale * eigvecs[row * n + k];
        }
    }
    (x, rank)
}

/// Conditioned solve ladder for symmetric positive-semidefinite systems:
/// Cholesky when the spectral condition number is ≤ 1e12, eigendecomposition
/// solve up to 1e15, and a [`SingularGram`] error beyond that. Returns the
/// solution together with the measured condition number.
pub fn solve_spd_ladder(a: &[f64], n: usize, y: &[f64]) -> Result<(Vec<f64>, f64), SingularGram> {
    let (eigvals, eigvecs) = jacobi_eigh(a, n);
    let lam_max = eigvals.iter().fold(0.0f64, |m, &l| m.max(abs(l)));
    let lam_min = eigvals.iter().fold(f64::INFINITY, |m, &l| m.min(abs(l)));
    let condition = if lam_max == 0.0 || lam_min == 0.0 {
        f64::INFINITY
    } else {
        lam_max / lam_min
    };
    if !(condition <= 1e15) {
        return Err(SingularGram { condition });
    }
    if condition <= 1e12 {
        if let Some(l) = cholesky(a, n) {
            return Ok((cholesky_solve(&l, n, y), condition));
        }
        // A PSD matrix this well conditioned should factor; fall through to
        // the eigensolve if roundoff says otherwise.
    }
    let (x, _rank) = eigh_solve_truncated(&eigvals, &eigvecs, n, y, 0.0);
    Ok((x, condition))
}

/// Thin SVD of a column-major `n_rows × n_cols` matrix by one-sided Jacobi
/// orthogonalization. On return the columns of `a` hold `uₖ·sₖ`, and the
/// returned pair is (singular values descending, right vectors V column-major
/// `n_cols × n_cols`). Exactly duplicated columns produce exact zero singular
/// values, which is what makes rank detection on degenerate feature matrices
/// reliable.
pub fn jacobi_svd_columns(a: &mut [f64], n_rows: usize, n_cols: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n_rows * n_cols);
    let mut v = vec![0.0; n_cols * n_cols];
    for i in 0..n_cols {
        v[i * n_cols + i] = 1.0;
    }
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n_cols {
            for q in (p + 1)..n_cols {
                let (mut gpp, mut gqq, mut gpq) = (0.0, 0.0, 0.0);
                for r in 0..n_rows {
                    let xp = a[p * n_rows + r];
                    let xq = a[q * n_rows + r];
                    gpp += xp * xp;
                    gqq += xq * xq;
                    gpq += xp * xq;
                }
                if abs(gpq) <= 1e-30 || gpq * gpq <= (f64::EPSILON * 1e-2) * gpp * gqq {
                    continue;
                }
                rotated = true;
                let theta = (gqq - gpp) / (2.0 * gpq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for r in 0..n_rows {
                    let xp = a[p * n_rows + r];
                    let xq = a[q * n_rows + r];
                    a[p * n_rows + r] = c * xp - s * xq;
                    a[q * n_rows + r] = s * xp + c * xq;
                }
                for r in 0..n_cols {
                    let vp = v[p * n_cols + r];
                    let vq = v[q * n_cols + r];
                    v[p * n_cols + r] = c * vp - s * vq;
                    v[q * n_cols + r] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sing: Vec<f64> = (0..n_cols)
        .map(|k| {
            let mut g = 0.0;
            for r in 0..n_rows {
                let x = a[k * n_rows + r];
                g += x * x;
            }
            sqrt(g)
        })
        .collect();
    // Order columns by descending singular value (stable selection swap).
    for i in 0..n_cols {
        let mut best = i;
        for j in (i + 1)..n_cols {
            if sing[j] > sing[best] {
                best = j;
            }
        }
        if best != i {
            sing.swap(i, best);
            for r in 0..n_rows {
                a.swap(i * n_rows + r, best * n_rows + r);
            }
            for r in 0..n_cols {
                v.swap(i * n_cols + r, best * n_cols + r);
            }
        }
    }
    (sing, v)
}

/// Solves a small general system by Gaussian elimination with partial
/// pivoting (row-major `a`, length n², right-hand side length n). Returns
/// `None` when a pivot underflows to zero.
pub fn solve_dense(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for row in (col + 1)..n {
            if abs(m[row * n + col]) > abs(m[piv * n + col]) {
                piv = row;
            }
        }
        if abs(m[piv * n + col]) == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            rhs.swap(col, piv);
        }
        let d = m[col * n + col];
        for row in (col + 1)..n {
            let f = m[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..n {
            s -= m[row * n + k] * x[k];
        }
        x[row] = s / m[row * n + row];
    }
    Some(x)
}
