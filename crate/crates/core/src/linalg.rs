//! Dense spectral utilities: SVD, symmetric eigenvalues, pseudo-inverse and
//! orthogonal projection.
//!
//! All routines take `nalgebra` dense matrices by reference and never mutate
//! their arguments. Rank decisions use the tolerance
//! `max(rows, cols) * eps * sigma_1` unless a caller passes its own.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

const SVD_MAX_ITER: usize = 10_000;
const JACOBI_MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

/// Thin singular value decomposition `A = U diag(sigma) V^T`.
///
/// `singular_values` is sorted nonincreasing; `u` is `rows x k` and `v` is
/// `cols x k` with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub u: Matrix,
    pub v: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for j in 0..k {
            us.column_mut(j).scale_mut(self.singular_values[j]);
        }
        us * self.v.transpose()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Smallest of the `min(rows, cols)` singular values.
    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }
}

pub fn ensure_finite(a: &Matrix) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Default numerical rank tolerance for a matrix with the given shape and
/// largest singular value.
pub fn default_rank_tol(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Convergence threshold for the bidiagonal QR sweeps. Tighter values make
/// nalgebra's deflation misbehave on clustered singular values.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

pub fn svd(a: &Matrix) -> Result<SvdResult> {
    ensure_finite(a)?;
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SvdResult {
            singular_values: Vec::new(),
            u: Matrix::zeros(rows, 0),
            v: Matrix::zeros(cols, 0),
        });
    }
    let dec = a
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::SvdNoConvergence(SVD_MAX_ITER))?;
    let u = dec.u.ok_or(Error::SvdNoConvergence(SVD_MAX_ITER))?;
    let v_t = dec.v_t.ok_or(Error::SvdNoConvergence(SVD_MAX_ITER))?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let mut su = Matrix::zeros(rows, k);
    let mut sv = Matrix::zeros(cols, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(dec.singular_values[src].max(0.0));
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_t.row(src).transpose());
    }
    Ok(SvdResult {
        singular_values: sigma,
        u: su,
        v: sv,
    })
}

/// Smallest singular value, i.e. the `min(rows, cols)`-th one. Zero for an
/// empty matrix.
pub fn sigma_min(a: &Matrix) -> Result<f64> {
    Ok(svd(a)?.sigma_min())
}

/// Moore-Penrose pseudo-inverse. Singular values `<= tol * sigma_1` are
/// truncated; pass `None` for the default rank tolerance.
pub fn pinv(a: &Matrix, tol: Option<f64>) -> Result<Matrix> {
    let (rows, cols) = a.shape();
    let dec = svd(a)?;
    let smax = dec.sigma_max();
    let cutoff = match tol {
        Some(t) => {
            if t < 0.0 {
                return Err(Error::Domain(format!("negative pinv tolerance {t}")));
            }
            t * smax
        }
        None => default_rank_tol(rows, cols, smax),
    };
    let mut out = Matrix::zeros(cols, rows);
    for (j, &s) in dec.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (dec.v.column(j) / s) * dec.u.column(j).transpose();
        }
    }
    Ok(out)
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    ensure_finite(s)?;
    let scale = s.amax().max(1.0);
    let asym = (s - s.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned ascending with matching eigenvector columns.
pub fn sym_eigen(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_symmetric(s)?;
    let n = s.nrows();
    let mut a = (s + s.transpose()) * 0.5;
    let mut q = Matrix::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);

    let mut converged = n <= 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            converged = true;
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
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - sn * akr;
                    a[(k, r)] = sn * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - sn * ark;
                    a[(r, k)] = sn * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - sn * qkr;
                    q[(k, r)] = sn * qkp + c * qkr;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &q.column(src));
    }
    Ok((values, vectors))
}

pub fn sym_eigenvalues(s: &Matrix) -> Result<Vec<f64>> {
    Ok(sym_eigen(s)?.0)
}

pub fn min_eig_sym(s: &Matrix) -> Result<f64> {
    sym_eigenvalues(s)?
        .first()
        .copied()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))
}

/// Numerical rank of a symmetric positive semidefinite matrix from its
/// eigenvalues. `tol` is relative to the largest eigenvalue magnitude;
/// `None` uses `n * eps`.
pub fn psd_rank(eigs: &[f64], tol: Option<f64>) -> usize {
    let lmax = eigs.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let cutoff = tol.unwrap_or(eigs.len() as f64 * f64::EPSILON) * lmax;
    eigs.iter().filter(|&&l| l > cutoff).count()
}

/// Smallest positive eigenvalue `lambda_{n-r+1}` where `r` is the numerical
/// rank at relative tolerance `tol`.
pub fn min_pos_eig_sym(s: &Matrix, tol: Option<f64>) -> Result<f64> {
    let eigs = sym_eigenvalues(s)?;
    let r = psd_rank(&eigs, tol);
    if r == 0 || eigs.iter().all(|&l| l <= 0.0) {
        return Err(Error::NoPositiveEigenvalue);
    }
    Ok(eigs[eigs.len() - r])
}

/// Orthonormal basis of the column span of `basis`, rank decided by SVD.
pub fn orthonormal_basis(basis: &Matrix) -> Result<Matrix> {
    if basis.ncols() == 0 || basis.nrows() == 0 {
        return Ok(Matrix::zeros(basis.nrows(), 0));
    }
    let dec = svd(basis)?;
    let tol = default_rank_tol(basis.nrows(), basis.ncols(), dec.sigma_max());
    let r = dec.rank(tol);
    Ok(dec.u.columns(0, r).into_owned())
}

/// Orthogonal projection of `y` onto the column span of `basis`.
pub fn project(y: &Vector, basis: &Matrix) -> Result<Vector> {
    if basis.ncols() == 0 {
        return Ok(Vector::zeros(y.len()));
    }
    if basis.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, basis has {} rows",
            y.len(),
            basis.nrows()
        )));
    }
    let q = orthonormal_basis(basis)?;
    Ok(&q * (q.transpose() * y))
}

/// Spectral norm `||A||_2`.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(svd(a)?.sigma_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn svd_identity() {
        let s = svd(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(s.singular_values.len(), 3);
        for v in s.singular_values {
            assert_relative_eq!(v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn svd_rank_one() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = svd(&a).unwrap();
        assert_relative_eq!(s.singular_values[0], 2.0, epsilon = 1e-14);
        assert!(s.singular_values[1].abs() < 1e-14);
        assert_eq!(sigma_min(&a).unwrap().abs() < 1e-14, true);
    }

    #[test]
    fn svd_rotation_scaled() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        let s = svd(&a).unwrap();
        for v in &s.singular_values {
            assert_relative_eq!(*v, 2f64.sqrt(), epsilon = 1e-14);
        }
        assert!((s.reconstruct() - &a).norm() < 1e-12);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut a = Matrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert_eq!(svd(&a).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn svd_wide_and_tall_shapes() {
        let a = Matrix::from_fn(3, 7, |i, j| ((i * 7 + j) as f64).sin());
        for m in [a.clone(), a.transpose()] {
            let s = svd(&m).unwrap();
            assert_eq!(s.singular_values.len(), 3);
            assert!((s.reconstruct() - &m).norm() < 1e-12 * m.norm().max(1.0));
            let k = s.singular_values.len();
            assert!((s.u.transpose() * &s.u - Matrix::identity(k, k)).amax() < 1e-12);
            assert!((s.v.transpose() * &s.v - Matrix::identity(k, k)).amax() < 1e-12);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn sigma_min_of_design_matrix() {
        let v = Matrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
        assert_relative_eq!(sigma_min(&v).unwrap(), 1.0, epsilon = 1e-12);
        let eigs = sym_eigenvalues(&(&v * v.transpose())).unwrap();
        assert_relative_eq!(eigs[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pinv_examples() {
        let i2 = Matrix::identity(2, 2);
        assert!((pinv(&i2, None).unwrap() - &i2).amax() < 1e-14);

        let z = Matrix::zeros(2, 3);
        let pz = pinv(&z, None).unwrap();
        assert_eq!(pz.shape(), (3, 2));
        assert_eq!(pz.amax(), 0.0);

        let a = Matrix::from_row_slice(2, 4, &[1.0, 2.0, 0.0, -1.0, 0.5, 0.0, 3.0, 1.0]);
        let p = pinv(&a, None).unwrap();
        let closed = a.transpose() * (&a * a.transpose()).try_inverse().unwrap();
        assert!((&p - &closed).amax() < 1e-12);
        assert!((&a * &p - Matrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn pinv_rejects_negative_tol() {
        assert!(matches!(
            pinv(&Matrix::identity(2, 2), Some(-1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn eigen_examples() {
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, 0.0]));
        assert_relative_eq!(min_pos_eig_sym(&d, None).unwrap(), 1.0, epsilon = 1e-14);
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 2.0, 1.0]));
        assert_relative_eq!(min_eig_sym(&d).unwrap(), 1.0, epsilon = 1e-14);
        let ones = Matrix::from_element(3, 3, 1.0);
        assert_relative_eq!(min_pos_eig_sym(&ones, None).unwrap(), 3.0, epsilon = 1e-12);
        assert_eq!(
            min_pos_eig_sym(&Matrix::zeros(3, 3), None).unwrap_err(),
            Error::NoPositiveEigenvalue
        );
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(min_eig_sym(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let b = Matrix::from_fn(5, 5, |i, j| ((i + 2 * j) as f64 * 0.7).cos());
        let s = &b * b.transpose();
        let (vals, vecs) = sym_eigen(&s).unwrap();
        let recon = &vecs * Matrix::from_diagonal(&Vector::from_vec(vals)) * vecs.transpose();
        assert!((recon - &s).amax() < 1e-11);
    }

    #[test]
    fn project_examples() {
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let e2 = Matrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!(project(&e1, &e2).unwrap().norm() < 1e-15);
        let span_e1 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert!((project(&e1, &span_e1).unwrap() - &e1).norm() < 1e-15);
        let y = Vector::from_vec(vec![1.0, 1.0]);
        let p = project(&y, &span_e1).unwrap();
        assert!((p - Vector::from_vec(vec![1.0, 0.0])).norm() < 1e-15);
        assert_eq!(project(&y, &Matrix::zeros(2, 0)).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn project_rank_deficient_basis() {
        let basis = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let y = Vector::from_vec(vec![3.0, 4.0, 5.0]);
        let p = project(&y, &basis).unwrap();
        assert!((p - Vector::from_vec(vec![3.0, 0.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn clustered_singular_values_are_accurate() {
        // scaled 4-simplex design: singular values {sqrt 5, 2.47495 (x4)}
        let set = crate::excitation::simplex_inputs(4, 4, 1.0).unwrap().scaled(2.213666946677292).unwrap();
        let v = crate::affine_fit::assemble_v(&set);
        let s = svd(&v).unwrap();
        assert!((s.sigma_min() - 5f64.sqrt()).abs() < 1e-12);
        let eig = min_eig_sym(&(&v * v.transpose())).unwrap();
        assert!((s.sigma_min().powi(2) - eig).abs() < 1e-10);
    }
}
