//! Differential-drive robot in the explicit-Euler, control-affine form
//! `x+ = x + dt G(x) u` with state `(x1, x2, heading)` and wheel speeds
//! `u = (left, right)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    /// Wheel radius in m.
    pub wheel_radius: f64,
    /// Wheel separation in m.
    pub wheel_separation: f64,
    /// Sampling time in s.
    pub dt: f64,
    /// Input norm bound in rad/s.
    pub r_u: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            wheel_radius: 0.03,
            wheel_separation: 0.3,
            dt: 0.1,
            r_u: 20.0,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wheel_radius", self.wheel_radius),
            ("wheel_separation", self.wheel_separation),
            ("dt", self.dt),
            ("r_u", self.r_u),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Input matrix `dt G(x)`, shape `3 x 2`.
    pub fn input_matrix(&self, x: &Vector) -> Matrix {
        let (r, l, dt) = (self.wheel_radius, self.wheel_separation, self.dt);
        let c = 0.5 * dt * r * x[2].cos();
        let s = 0.5 * dt * r * x[2].sin();
        let w = dt * r / l;
        Matrix::from_row_slice(3, 2, &[c, c, s, s, -w, w])
    }

    /// Lipschitz constant of the drift `x -> x`.
    pub fn lipschitz_g0(&self) -> f64 {
        1.0
    }

    /// Lipschitz constant of `x -> dt G(x)` in the operator 2-norm.
    pub fn lipschitz_g(&self) -> f64 {
        self.dt * self.wheel_radius / 2f64.sqrt()
    }

    /// Noise radius `(L_g0 + L_G u_max) r_x` for samples within `r_x` of a
    /// center under inputs of norm at most `u_max`.
    pub fn noise_radius(&self, r_x: f64, u_max: f64) -> f64 {
        (self.lipschitz_g0() + self.lipschitz_g() * u_max) * r_x
    }
}

pub fn robot_step(x: &Vector, u: &Vector, params: &RobotParams) -> Vector {
    x + params.input_matrix(x) * u
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.sin().atan2(a.cos());
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Gerono lemniscate `(a sin wt, a sin wt cos wt)` traversed once per period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemniscate {
    pub amplitude: f64,
    pub period: f64,
}

impl Default for Lemniscate {
    fn default() -> Self {
        Self {
            amplitude: 0.4,
            period: 60.0,
        }
    }
}

impl Lemniscate {
    fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn position(&self, t: f64) -> (f64, f64) {
        let s = self.omega() * t;
        (self.amplitude * s.sin(), self.amplitude * s.sin() * s.cos())
    }

    /// Pose at `t = 0`: origin, heading along the tangent.
    pub fn initial_state(&self) -> Vector {
        Vector::from_row_slice(&[0.0, 0.0, PI / 4.0])
    }

    /// Forward speed and turn rate along the curve.
    pub fn velocity(&self, t: f64) -> (f64, f64) {
        let w = self.omega();
        let a = self.amplitude;
        let s = w * t;
        let (dx, dy) = (a * w * s.cos(), a * w * (2.0 * s).cos());
        let (ddx, ddy) = (-a * w * w * s.sin(), -2.0 * a * w * w * (2.0 * s).sin());
        let v2 = dx * dx + dy * dy;
        (v2.sqrt(), (dx * ddy - dy * ddx) / v2)
    }

    /// Wheel speeds `(left, right)` sampled every `dt` for `steps` steps.
    pub fn inputs(&self, params: &RobotParams, steps: usize) -> Vec<Vector> {
        let half = 0.5 * params.wheel_separation;
        (0..steps)
            .map(|i| {
                let (v, w) = self.velocity(i as f64 * params.dt);
                Vector::from_row_slice(&[(v - w * half) / params.wheel_radius, (v + w * half) / params.wheel_radius])
            })
            .collect()
    }
}
