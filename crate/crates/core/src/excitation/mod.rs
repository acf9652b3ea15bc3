//! Exciting input sets: constructive designs, optimality checks and
//! subspace-angle lower bounds on the smallest singular value of the design
//! matrix.

mod angles;
mod designs;
mod montecarlo;

pub use angles::{kaur_bound, subspace_cos, theta, thm_lower_bound, AngleDecomposition, PSD_RANK_RTOL};
pub use designs::{
    check_nco, complete_inputs, nco_residual, orthogonal_inputs, simplex_inputs,
    verify_tight_frame,
};
pub use montecarlo::{monte_carlo_sigma, sample_ratio, DistributionRow};

use crate::affine_fit::{assemble_v, sigma_ceiling, InputSet};
use crate::error::Result;
use crate::linalg;

/// Summary of an input set's excitation quality.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub sigma_min_v: f64,
    /// `sigma_ceiling(d, m, r_u)`.
    pub sigma_upper: f64,
    /// Subspace-angle lower bound on `sigma_min(V)^2`; `None` when `U_m` is
    /// singular or there are fewer than `m + 1` inputs.
    pub thm_lower_bound: Option<f64>,
    pub nco_residual: f64,
    pub per_input_norms: Vec<f64>,
}

pub fn analyze(inputs: &InputSet) -> Result<DesignReport> {
    let sigma_min_v = linalg::sigma_min(&assemble_v(inputs))?;
    let d = inputs.len().saturating_sub(1);
    let thm = thm_lower_bound(inputs).ok().map(|(b, _)| b);
    Ok(DesignReport {
        sigma_min_v,
        sigma_upper: sigma_ceiling(d, inputs.m(), inputs.r_u()),
        thm_lower_bound: thm,
        nco_residual: nco_residual(inputs),
        per_input_norms: inputs.inputs().iter().map(|u| u.norm()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_invariants_hold_for_designs() {
        for m in 1..=4 {
            for set in [
                orthogonal_inputs(m, m + 1, 1.3).unwrap(),
                simplex_inputs(m, m, 0.8).unwrap().with_constraint(0.8).unwrap(),
            ] {
                let r = analyze(&set).unwrap();
                let lb = r.thm_lower_bound.unwrap();
                assert!(lb <= r.sigma_min_v * r.sigma_min_v + 1e-9);
                assert!(r.sigma_min_v <= r.sigma_upper + 1e-9);
                assert!(r.nco_residual < 1e-12);
                assert_eq!(r.per_input_norms.len(), set.len());
            }
        }
    }
}
