//! Local affine regression `y_j = g0 + G u_j + eps_j` and its certified
//! max-norm error bound.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Relative rank criterion for the design matrix: full row rank means
/// `sigma_min(V) > FULL_RANK_RTOL * sigma_max(V)`.
pub const FULL_RANK_RTOL: f64 = 1e-10;

/// Ordered control inputs `u_0..u_d` in `R^m` with an optional norm bound.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSet {
    m: usize,
    inputs: Vec<Vector>,
    r_u: f64,
}

impl InputSet {
    /// Unconstrained input set (`r_u = inf`).
    pub fn new(m: usize, inputs: Vec<Vector>) -> Result<Self> {
        Self::with_radius(m, inputs, f64::INFINITY)
    }

    pub fn with_radius(m: usize, inputs: Vec<Vector>, r_u: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("input dimension m must be >= 1".into()));
        }
        if r_u.is_nan() || r_u <= 0.0 {
            return Err(Error::Domain(format!("input radius must be positive, got {r_u}")));
        }
        for (j, u) in inputs.iter().enumerate() {
            if u.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "input {j} has length {}, expected {m}",
                    u.len()
                )));
            }
            if !u.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite);
            }
            if r_u.is_finite() && u.norm() > r_u + 1e-12 {
                return Err(Error::Domain(format!(
                    "input {j} has norm {} > r_u = {r_u}",
                    u.norm()
                )));
            }
        }
        Ok(Self { m, inputs, r_u })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map(|r| r.len()).unwrap_or(0);
        Self::new(m, rows.iter().map(|r| Vector::from_vec(r.clone())).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Index of the last input, so the set holds `d + 1` inputs. Undefined
    /// (panics) for an empty set; use `len` there.
    pub fn d(&self) -> usize {
        self.inputs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vector] {
        &self.inputs
    }

    pub fn r_u(&self) -> f64 {
        self.r_u
    }

    pub fn max_norm(&self) -> f64 {
        self.inputs.iter().fold(0.0, |m, u| m.max(u.norm()))
    }

    /// `m x (d+1)` matrix `U = [u_0 ... u_d]`.
    pub fn matrix(&self) -> Matrix {
        let mut u = Matrix::zeros(self.m, self.inputs.len());
        for (j, col) in self.inputs.iter().enumerate() {
            u.set_column(j, col);
        }
        u
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let r_u = if self.r_u.is_finite() { self.r_u * alpha.abs() } else { self.r_u };
        Self::with_radius(self.m, self.inputs.iter().map(|u| u * alpha).collect(), r_u)
    }

    /// Same inputs with a different constraint radius (re-validated).
    pub fn with_constraint(&self, r_u: f64) -> Result<Self> {
        Self::with_radius(self.m, self.inputs.clone(), r_u)
    }

    /// First `count` inputs.
    pub fn prefix(&self, count: usize) -> Result<Self> {
        Self::with_radius(self.m, self.inputs[..count.min(self.inputs.len())].to_vec(), self.r_u)
    }
}

/// Outputs `y_0..y_d` paired with an [`InputSet`], plus the disturbance radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n: usize,
    outputs: Vec<Vector>,
    r_eps: f64,
}

impl ObservationSet {
    pub fn new(n: usize, outputs: Vec<Vector>, r_eps: f64) -> Result<Self> {
        if !(r_eps >= 0.0) {
            return Err(Error::Domain(format!("r_eps must be >= 0, got {r_eps}")));
        }
        for (j, y) in outputs.iter().enumerate() {
            if y.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "output {j} has length {}, expected {n}",
                    y.len()
                )));
            }
        }
        Ok(Self { n, outputs, r_eps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn outputs(&self) -> &[Vector] {
        &self.outputs
    }

    pub fn r_eps(&self) -> f64 {
        self.r_eps
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn matrix(&self) -> Matrix {
        let mut y = Matrix::zeros(self.n, self.outputs.len());
        for (j, col) in self.outputs.iter().enumerate() {
            y.set_column(j, col);
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionEstimate {
    pub g0_hat: Vector,
    pub g_hat: Matrix,
    pub sigma_min_v: f64,
    pub bound_maxnorm: f64,
    pub residual_fro: f64,
}

impl RegressionEstimate {
    /// `[g0_hat G_hat]` as one `n x (m+1)` matrix.
    pub fn stacked(&self) -> Matrix {
        let n = self.g0_hat.len();
        let m = self.g_hat.ncols();
        let mut out = Matrix::zeros(n, m + 1);
        out.set_column(0, &self.g0_hat);
        out.columns_mut(1, m).copy_from(&self.g_hat);
        out
    }

    /// Affine prediction `g0_hat + G_hat u`.
    pub fn predict(&self, u: &Vector) -> Vector {
        &self.g0_hat + &self.g_hat * u
    }
}

/// Design matrix `V = [1^T; U]` of shape `(m+1) x (d+1)`.
pub fn assemble_v(inputs: &InputSet) -> Matrix {
    let cols = inputs.len();
    let m = inputs.m();
    let mut v = Matrix::zeros(m + 1, cols);
    for (j, u) in inputs.inputs().iter().enumerate() {
        v[(0, j)] = 1.0;
        v.view_mut((1, j), (m, 1)).copy_from(u);
    }
    v
}

/// `r_eps * sqrt(d+1) / sigma_min(V)`.
pub fn error_bound(r_eps: f64, d: usize, sigma_min_v: f64) -> Result<f64> {
    if !(sigma_min_v > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_min(V) must be positive, got {sigma_min_v}"
        )));
    }
    Ok(r_eps * ((d + 1) as f64).sqrt() / sigma_min_v)
}

/// Upper bound `min{sqrt(d+1), r_u sqrt((d+1)/m)}` on `sigma_min(V)` for
/// inputs constrained to the ball of radius `r_u`.
pub fn sigma_ceiling(d: usize, m: usize, r_u: f64) -> f64 {
    let unconstrained = ((d + 1) as f64).sqrt();
    if r_u.is_infinite() {
        return unconstrained;
    }
    unconstrained.min(r_u * ((d + 1) as f64 / m as f64).sqrt())
}

/// Least-squares fit `[g0_hat G_hat] = Y V^+` with its max-norm bound.
///
/// ```
/// use excite_id::affine_fit::{fit_affine, ObservationSet};
/// use excite_id::excitation::simplex_inputs;
/// use excite_id::linalg::{Matrix, Vector};
///
/// let inputs = simplex_inputs(2, 2, 1.0)?;
/// let g0 = Vector::from_row_slice(&[1.0, 0.0]);
/// let g = Matrix::identity(2, 2);
/// let outputs = inputs.inputs().iter().map(|u| &g0 + &g * u).collect();
/// let est = fit_affine(&inputs, &ObservationSet::new(2, outputs, 1e-3)?)?;
/// assert!((est.g_hat - g).amax() <= est.bound_maxnorm);
/// # Ok::<(), excite_id::Error>(())
/// ```
pub fn fit_affine(inputs: &InputSet, obs: &ObservationSet) -> Result<RegressionEstimate> {
    if inputs.len() != obs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs but {} outputs",
            inputs.len(),
            obs.len()
        )));
    }
    if inputs.is_empty() || inputs.d() < inputs.m() {
        let sigma_min = if inputs.is_empty() {
            0.0
        } else {
            linalg::sigma_min(&assemble_v(inputs))?
        };
        return Err(Error::InsufficientExcitation { sigma_min });
    }
    let v = assemble_v(inputs);
    let dec = linalg::svd(&v)?;
    let smin = dec.sigma_min();
    if !(smin > FULL_RANK_RTOL * dec.sigma_max()) {
        return Err(Error::InsufficientExcitation { sigma_min: smin });
    }
    let v_pinv = linalg::pinv(&v, None)?;
    let y = obs.matrix();
    let coef = &y * v_pinv;
    let residual_fro = (&y - &coef * &v).norm();
    let m = inputs.m();
    Ok(RegressionEstimate {
        g0_hat: coef.column(0).into_owned(),
        g_hat: coef.columns(1, m).into_owned(),
        sigma_min_v: smin,
        bound_maxnorm: error_bound(obs.r_eps(), inputs.d(), smin)?,
        residual_fro,
    })
}
