use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Finite dictionary of observables `Psi = (psi_1, ..., psi_M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dictionary {
    /// `psi_p(x) = x_p`, `M = n`.
    Identity(usize),
    /// `(1, x_1, ..., x_n)`, `M = n + 1`.
    Affine(usize),
    /// `(1, x_1, x_2, cos x_3, sin x_3)` on planar poses.
    Unicycle,
}

impl Dictionary {
    pub fn from_name(name: &str, n: usize) -> Result<Self> {
        match name {
            "identity" => Ok(Self::Identity(n)),
            "affine" => Ok(Self::Affine(n)),
            "unicycle" | "robot" => {
                if n != 3 {
                    return Err(Error::Domain(format!("unicycle dictionary needs n = 3, got {n}")));
                }
                Ok(Self::Unicycle)
            }
            other => Err(Error::Domain(format!(
                "unknown dictionary '{other}' (expected identity, affine or unicycle)"
            ))),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Identity(_) => "identity",
            Self::Affine(_) => "affine",
            Self::Unicycle => "unicycle",
        }
    }

    pub fn state_dim(&self) -> usize {
        match *self {
            Self::Identity(n) | Self::Affine(n) => n,
            Self::Unicycle => 3,
        }
    }

    /// Number of observables `M`.
    pub fn len(&self) -> usize {
        match *self {
            Self::Identity(n) => n,
            Self::Affine(n) => n + 1,
            Self::Unicycle => 5,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> Vec<String> {
        match *self {
            Self::Identity(n) => (0..n).map(|i| format!("x{i}")).collect(),
            Self::Affine(n) => std::iter::once("1".to_string())
                .chain((0..n).map(|i| format!("x{i}")))
                .collect(),
            Self::Unicycle => ["1", "x0", "x1", "cos(x2)", "sin(x2)"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        debug_assert_eq!(x.len(), self.state_dim());
        match *self {
            Self::Identity(_) => x.clone(),
            Self::Affine(n) => {
                let mut z = Vector::zeros(n + 1);
                z[0] = 1.0;
                z.rows_mut(1, n).copy_from(x);
                z
            }
            Self::Unicycle => Vector::from_row_slice(&[1.0, x[0], x[1], x[2].cos(), x[2].sin()]),
        }
    }

    /// Jacobian `d Psi / dx`, shape `M x n`.
    pub fn jacobian(&self, x: &Vector) -> Matrix {
        match *self {
            Self::Identity(n) => Matrix::identity(n, n),
            Self::Affine(n) => {
                let mut j = Matrix::zeros(n + 1, n);
                j.view_mut((1, 0), (n, n)).fill_with_identity();
                j
            }
            Self::Unicycle => {
                let mut j = Matrix::zeros(5, 3);
                j[(1, 0)] = 1.0;
                j[(2, 1)] = 1.0;
                j[(3, 2)] = -x[2].sin();
                j[(4, 2)] = x[2].cos();
                j
            }
        }
    }

    /// Lifted time derivative `dPsi(x) f` for a state velocity `f`.
    pub fn lie_derivative(&self, x: &Vector, f: &Vector) -> Vector {
        self.jacobian(x) * f
    }
}
