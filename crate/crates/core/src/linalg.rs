//! Small dense symmetric matrix routines.
//!
//! Dimensions here are tiny (the process dimension, at most a handful), so a
//! cyclic Jacobi sweep is both exact to machine precision and fast enough.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Symmetry tolerance, relative to the largest absolute entry.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_CLAMP_TOL * max|eigenvalue|` are clamped to zero.
pub const PSD_CLAMP_TOL: f64 = 1e-12;
/// Eigenvalues below `PINV_RANK_TOL * max|eigenvalue|` are treated as zero.
pub const PINV_RANK_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Max-norm of a vector.
pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidParameter(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let a = asymmetry(m);
    if a > SYMMETRY_TOL * max_abs(m).max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { asymmetry: a });
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors in the columns, so
/// that `m = Q diag(l) Q^T`. Only the upper triangle symmetrized with the lower
/// one is used, so slightly asymmetric input is accepted.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    let mut q = DMatrix::<f64>::identity(n, n);
    let scale = max_abs(&a);
    if n <= 1 || scale == 0.0 {
        return (a.diagonal(), q);
    }
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    (a.diagonal(), q)
}

fn reconstruct(vals: &DVector<f64>, vecs: &DMatrix<f64>) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(vals);
    let r = vecs * d * vecs.transpose();
    (&r + r.transpose()) * 0.5
}

/// Symmetric PSD square root `R` with `R R = M`.
pub fn matrix_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let (vals, vecs) = symmetric_eigen(m);
    let scale = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = -PSD_CLAMP_TOL * scale;
    let mut roots = vals.clone();
    for v in roots.iter_mut() {
        if *v < threshold {
            return Err(Error::Indefinite {
                eigenvalue: *v,
                threshold,
            });
        }
        *v = v.max(0.0).sqrt();
    }
    Ok(reconstruct(&roots, &vecs))
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix.
pub fn pseudo_inverse(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(s)?;
    let (vals, vecs) = symmetric_eigen(s);
    let scale = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cutoff = PINV_RANK_TOL * scale;
    let inv = vals.map(|v| if scale == 0.0 || v.abs() <= cutoff { 0.0 } else { 1.0 / v });
    Ok(reconstruct(&inv, &vecs))
}

/// Matrix built from row vectors; rejects ragged input.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidParameter("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Row vectors of a matrix, for reporting.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn sqrt_of_diag() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let r = matrix_sqrt_psd(&m).unwrap();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(r[(1, 1)], 0.0);
        assert_eq!(r[(0, 1)], 0.0);
    }

    #[test]
    fn sqrt_of_identity() {
        let m = DMatrix::<f64>::identity(3, 3);
        let r = matrix_sqrt_psd(&m).unwrap();
        assert!(frob_rel(&r, &m) < 1e-15);
    }

    #[test]
    fn sqrt_multiplies_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = matrix_sqrt_psd(&m).unwrap();
        assert!(frob_rel(&(&r * &r), &m) < 1e-10);
        // eigenvalues 1 and 3 -> R = [[(1+sqrt3)/2, (sqrt3-1)/2], ...]
        let s3 = 3f64.sqrt();
        assert!((r[(0, 0)] - (1.0 + s3) / 2.0).abs() < 1e-12);
        assert!((r[(0, 1)] - (s3 - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_asymmetric_and_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(matrix_sqrt_psd(&m), Err(Error::NotSymmetric { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(matches!(matrix_sqrt_psd(&m), Err(Error::Indefinite { .. })));
        // tiny negative round-off is clamped
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-14]);
        assert!(matrix_sqrt_psd(&m).is_ok());
    }

    #[test]
    fn pinv_cases() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse(&m).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(p[(1, 1)], 0.0);

        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let p = pseudo_inverse(&m).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((&m * &p - &id).abs().max() < 1e-8);

        let z = DMatrix::<f64>::zeros(2, 2);
        assert_eq!(pseudo_inverse(&z).unwrap(), z);
    }

    #[test]
    fn pinv_moore_penrose_identities_rank_deficient() {
        // rank one: u u^T
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let m = &u * u.transpose();
        let p = pseudo_inverse(&m).unwrap();
        assert!((&m * &p * &m - &m).abs().max() < 1e-8);
        assert!((&p * &m * &p - &p).abs().max() < 1e-8);
        let mp = &m * &p;
        let pm = &p * &m;
        assert!((&mp - mp.transpose()).abs().max() < 1e-8);
        assert!((&pm - pm.transpose()).abs().max() < 1e-8);
    }

    #[test]
    fn jacobi_reconstructs() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                5.0, 1.0, -0.3, 0.2, 1.0, 4.0, 0.7, 0.0, -0.3, 0.7, 3.0, 1.1, 0.2, 0.0, 1.1, 2.0,
            ],
        );
        let (vals, vecs) = symmetric_eigen(&m);
        assert!(frob_rel(&reconstruct(&vals, &vecs), &m) < 1e-14);
        let qtq = vecs.transpose() * &vecs;
        assert!((qtq - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-14);
    }
}
