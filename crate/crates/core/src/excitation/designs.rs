//! Constructive input designs and their structural checks.

use crate::affine_fit::InputSet;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Checks `U 1 = 0`. Returns whether the residual `||sum_j u_j||` is within
/// `tol * max(1, max_j ||u_j||)`, together with the residual.
pub fn check_nco(inputs: &InputSet, tol: f64) -> (bool, f64) {
    let residual = nco_residual(inputs);
    let scale = inputs.max_norm().max(1.0);
    (residual <= tol * scale, residual)
}

pub fn nco_residual(inputs: &InputSet) -> f64 {
    inputs
        .inputs()
        .iter()
        .fold(Vector::zeros(inputs.m()), |acc, u| acc + u)
        .norm()
}

fn check_dims(m: usize, d: usize, alpha: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::Domain("m must be >= 1".into()));
    }
    if d < m {
        return Err(Error::Domain(format!("d = {d} < m = {m}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Canonical basis plus `u_0 = -1_m`, padded with zero inputs, scaled by
/// `alpha`. Satisfies `U 1 = 0`; `sigma_min(V) = min{sqrt(d+1), alpha}`.
pub fn orthogonal_inputs(m: usize, d: usize, alpha: f64) -> Result<InputSet> {
    check_dims(m, d, alpha)?;
    let mut inputs = Vec::with_capacity(d + 1);
    inputs.push(Vector::from_element(m, -alpha));
    for j in 0..m {
        let mut e = Vector::zeros(m);
        e[j] = alpha;
        inputs.push(e);
    }
    inputs.resize(d + 1, Vector::zeros(m));
    InputSet::new(m, inputs)
}

/// Vertices of a regular m-simplex of circumradius `alpha`, padded with
/// zero inputs. `sigma_min(V) = min{sqrt(d+1), alpha sqrt((m+1)/m)}`.
pub fn simplex_inputs(m: usize, d: usize, alpha: f64) -> Result<InputSet> {
    check_dims(m, d, alpha)?;
    let mf = m as f64;
    let a = -1.0 / mf.sqrt();
    let b = ((mf + 1.0) / mf).sqrt();
    let c = (1.0 - (mf + 1.0).sqrt()) / (mf * mf.sqrt());
    let mut inputs = Vec::with_capacity(d + 1);
    inputs.push(Vector::from_element(m, alpha * a));
    for j in 0..m {
        let mut u = Vector::from_element(m, c);
        u[j] += b;
        inputs.push(u * alpha);
    }
    inputs.resize(d + 1, Vector::zeros(m));
    InputSet::new(m, inputs)
}

/// Balanced normalized tight frame check: unit norms, zero sum and frame
/// operator `((d+1)/m) I`, each within `tol`.
pub fn verify_tight_frame(inputs: &InputSet, tol: f64) -> bool {
    if inputs.is_empty() {
        return false;
    }
    if inputs.inputs().iter().any(|u| (u.norm() - 1.0).abs() > tol) {
        return false;
    }
    if nco_residual(inputs) > tol {
        return false;
    }
    let u = inputs.matrix();
    let m = inputs.m();
    let target = Matrix::identity(m, m) * (inputs.len() as f64 / m as f64);
    (&u * u.transpose() - target).amax() <= tol
}

/// Prepends `u_0 = -(u_1 + ... + u_m)` to `m` linearly independent inputs.
pub fn complete_inputs(partial: &[Vector]) -> Result<InputSet> {
    let m = partial.len();
    if m == 0 {
        return Err(Error::Domain("need at least one input".into()));
    }
    let um = InputSet::new(m, partial.to_vec())?.matrix();
    let dec = linalg::svd(&um)?;
    if !(dec.sigma_min() > 1e-10 * dec.sigma_max()) {
        return Err(Error::SingularInputBasis(dec.sigma_min()));
    }
    let sum = partial.iter().fold(Vector::zeros(m), |acc, u| acc + u);
    let mut inputs = Vec::with_capacity(m + 1);
    inputs.push(-sum);
    inputs.extend(partial.iter().cloned());
    InputSet::new(m, inputs)
}
