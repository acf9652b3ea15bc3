//! Subspace-angle lower bounds on `sigma_min(V)`.
//!
//! For `d = m` the design matrix is square and its smallest singular value
//! is bounded below by a product of two factors: how well `u_0` complements
//! `U_m = [u_1 ... u_m]` (measured by [`theta`]), and how far each `u_i` is
//! from the span of the shorter remaining inputs. The rank-one eigenvalue
//! estimate used for both steps is exposed as [`kaur_bound`].

use crate::affine_fit::InputSet;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Relative eigenvalue cutoff used to decide the range of a PSD matrix.
pub const PSD_RANK_RTOL: f64 = 1e-10;

/// `1 - sqrt((m+1 - (1 - 1^T x)^2 / (1 + |x|^2)) / (m+1))`, clamped to `[0, 1]`.
///
/// Equals 1 at `x = -1_m` and vanishes on the hyperplane `1^T x = 1`.
pub fn theta(x: &Vector) -> f64 {
    // With a = (1, -x): (m+1)|a|^2 - (1^T a)^2 = (m+1) sum_i (a_i - mean(a))^2,
    // which avoids the cancellation of the direct form near x = -1.
    let m1 = x.len() as f64 + 1.0;
    let mean = (1.0 - x.sum()) / m1;
    let spread = (1.0 - mean).powi(2) + x.iter().map(|&xi| (-xi - mean).powi(2)).sum::<f64>();
    let inner = spread / (1.0 + x.norm_squared());
    (1.0 - inner.sqrt()).clamp(0.0, 1.0)
}

/// Cosine of the angle between `y` and the column span of `span_vectors`.
pub fn subspace_cos(y: &Vector, span_vectors: &Matrix) -> Result<f64> {
    let ny = y.norm();
    if ny == 0.0 {
        return Err(Error::Domain("angle undefined for the zero vector".into()));
    }
    let p = linalg::project(y, span_vectors)?;
    Ok((p.norm() / ny).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleDecomposition {
    /// Indices into `u_1..u_m` (1-based, matching the input set order)
    /// sorted by nonincreasing norm, ties by index.
    pub order: Vec<usize>,
    /// `cos theta(u_{i_s}, S_{I_s})` for `s = 1..m-1`.
    pub cosines: Vec<f64>,
    /// `Theta(U_m^{-1} u_0)`.
    pub theta_value: f64,
    /// `||u_{i_m}||^2`.
    pub min_norm_sq: f64,
}

impl AngleDecomposition {
    pub fn angle_product(&self) -> f64 {
        self.cosines.iter().map(|c| 1.0 - c).product()
    }

    pub fn bound(&self) -> f64 {
        let m1 = (self.order.len() + 1) as f64;
        self.theta_value * m1.min(self.min_norm_sq * self.angle_product())
    }
}

/// Lower bound on `sigma_min(V)^2` built from `u_0..u_m` (the first `m + 1`
/// inputs). Appending further inputs never lowers `sigma_min`, so the bound
/// stays valid for the full set.
pub fn thm_lower_bound(inputs: &InputSet) -> Result<(f64, AngleDecomposition)> {
    let m = inputs.m();
    if inputs.len() < m + 1 {
        return Err(Error::Domain(format!(
            "need at least m + 1 = {} inputs, got {}",
            m + 1,
            inputs.len()
        )));
    }
    let us = inputs.inputs();
    let mut um = Matrix::zeros(m, m);
    for j in 0..m {
        um.set_column(j, &us[j + 1]);
    }
    let dec = linalg::svd(&um)?;
    if !(dec.sigma_min() > 1e-12 * dec.sigma_max()) {
        return Err(Error::SingularInputBasis(dec.sigma_min()));
    }
    let x = um
        .clone()
        .lu()
        .solve(&us[0])
        .ok_or(Error::SingularInputBasis(dec.sigma_min()))?;
    let theta_value = theta(&x);

    let mut order: Vec<usize> = (1..=m).collect();
    order.sort_by(|&a, &b| us[b].norm().total_cmp(&us[a].norm()));

    let mut cosines = Vec::with_capacity(m.saturating_sub(1));
    for s in 0..m.saturating_sub(1) {
        let rest = &order[s + 1..];
        let mut span = Matrix::zeros(m, rest.len());
        for (c, &i) in rest.iter().enumerate() {
            span.set_column(c, &us[i]);
        }
        cosines.push(subspace_cos(&us[order[s]], &span)?);
    }
    let min_norm_sq = us[order[m - 1]].norm_squared();
    let decomposition = AngleDecomposition {
        order,
        cosines,
        theta_value,
        min_norm_sq,
    };
    Ok((decomposition.bound(), decomposition))
}

/// `(1 - cos theta(u, ran Q)) * min{|u|^2, lambda_min^+(Q)}`, a lower bound
/// on the smallest positive eigenvalue of `u u^T + Q` for SPSD `Q != 0`.
pub fn kaur_bound(u: &Vector, q: &Matrix) -> Result<f64> {
    if q.nrows() != u.len() {
        return Err(Error::DimensionMismatch(format!(
            "u has length {}, Q is {}x{}",
            u.len(),
            q.nrows(),
            q.ncols()
        )));
    }
    let (eigs, vecs) = linalg::sym_eigen(q)?;
    let lmax = eigs.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    if lmax == 0.0 {
        return Err(Error::NoPositiveEigenvalue);
    }
    let lmin = eigs[0];
    if lmin < -1e-10 * lmax.max(1.0) {
        return Err(Error::NotPsd(lmin));
    }
    let rank = linalg::psd_rank(&eigs, Some(PSD_RANK_RTOL));
    if rank == 0 {
        return Err(Error::NoPositiveEigenvalue);
    }
    let n = eigs.len();
    let lambda_pos = eigs[n - rank];
    let nu2 = u.norm_squared();
    if nu2 == 0.0 {
        return Ok(0.0);
    }
    let range = vecs.columns(n - rank, rank).into_owned();
    let cos = subspace_cos(u, &range)?;
    Ok((1.0 - cos) * nu2.min(lambda_pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine_fit::assemble_v;
    use crate::excitation::designs::complete_inputs;
    use crate::linalg::min_pos_eig_sym;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn theta_examples() {
        assert_relative_eq!(theta(&v(&[-1.0, -1.0])), 1.0, epsilon = 1e-15);
        assert_relative_eq!(theta(&v(&[-1.0, -1.0, -1.0])), 1.0, epsilon = 1e-15);
        assert_eq!(theta(&v(&[1.0, 0.0])), 0.0);
        assert!(theta(&v(&[0.25, 0.75])).abs() < 1e-15);
        assert_relative_eq!(theta(&v(&[0.0, 0.0])), 1.0 - (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(theta(&v(&[0.0, 0.0])), 0.183503419072274, epsilon = 1e-12);
    }

    #[test]
    fn subspace_cos_examples() {
        let e1 = v(&[1.0, 0.0]);
        assert!(subspace_cos(&e1, &Matrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap() < 1e-15);
        assert_relative_eq!(subspace_cos(&e1, &Matrix::identity(2, 2)).unwrap(), 1.0, epsilon = 1e-15);
        let y = v(&[1.0, 1.0]) / 2f64.sqrt();
        assert_relative_eq!(
            subspace_cos(&y, &Matrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap(),
            1.0 / 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(subspace_cos(&v(&[0.0, 0.0]), &Matrix::identity(2, 2)).is_err());
    }

    #[test]
    fn tight_case_m2() {
        let set = InputSet::from_rows(&[vec![-1.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (bound, dec) = thm_lower_bound(&set).unwrap();
        assert_relative_eq!(dec.theta_value, 1.0, epsilon = 1e-14);
        assert_eq!(dec.cosines.len(), 1);
        assert!(dec.cosines[0] < 1e-15);
        assert_relative_eq!(dec.min_norm_sq, 1.0);
        assert_relative_eq!(bound, 1.0, epsilon = 1e-14);
        let s = crate::linalg::sigma_min(&assemble_v(&set)).unwrap();
        assert_relative_eq!(s * s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vanishing_theta_gives_zero_bound() {
        // U_m = I, u_0 = (0.5, 0.5): 1^T U_m^{-1} u_0 = 1
        let set = InputSet::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (bound, _) = thm_lower_bound(&set).unwrap();
        assert!(bound.abs() < 1e-15);
    }

    #[test]
    fn nco_completion_simplifies_bound() {
        let partial = [v(&[0.9, 0.2]), v(&[-0.3, 0.7])];
        let set = complete_inputs(&partial).unwrap();
        let (bound, dec) = thm_lower_bound(&set).unwrap();
        assert_relative_eq!(dec.theta_value, 1.0, epsilon = 1e-12);
        assert!(dec.min_norm_sq <= 3.0);
        assert_relative_eq!(bound, dec.min_norm_sq * dec.angle_product(), epsilon = 1e-12);
        assert_eq!(dec.order, vec![1, 2]);
    }

    #[test]
    fn ordering_is_stable_on_ties() {
        let set = InputSet::from_rows(&[
            vec![-1.0, -1.0, -1.0],
            vec![0.0, 1.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let (_, dec) = thm_lower_bound(&set).unwrap();
        assert_eq!(dec.order, vec![2, 1, 3]);
    }

    #[test]
    fn singular_basis_rejected() {
        let set = InputSet::from_rows(&[vec![-1.0, -1.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(matches!(thm_lower_bound(&set), Err(Error::SingularInputBasis(_))));
        let short = InputSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(thm_lower_bound(&short).is_err());
    }

    #[test]
    fn kaur_examples() {
        let e = |i: usize| {
            let mut x = Vector::zeros(3);
            x[i] = 1.0;
            x
        };
        let q = &e(1) * e(1).transpose();
        assert_relative_eq!(kaur_bound(&e(0), &q).unwrap(), 1.0, epsilon = 1e-14);
        let p = &e(0) * e(0).transpose();
        assert_relative_eq!(min_pos_eig_sym(&(p + &q), None).unwrap(), 1.0, epsilon = 1e-14);
        assert!(kaur_bound(&e(1), &q).unwrap().abs() < 1e-14);
        assert_relative_eq!(kaur_bound(&(e(0) * 2.0), &q).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn kaur_rejects_indefinite_and_zero() {
        let q = Matrix::from_diagonal(&v(&[1.0, -1.0]));
        assert!(matches!(kaur_bound(&v(&[1.0, 0.0]), &q), Err(Error::NotPsd(_))));
        assert!(matches!(
            kaur_bound(&v(&[1.0, 0.0]), &Matrix::zeros(2, 2)),
            Err(Error::NoPositiveEigenvalue)
        ));
    }
}
