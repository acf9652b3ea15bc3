use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("SVD did not converge within {0} iterations")]
    SvdNoConvergence(usize),

    #[error("symmetric eigensolver did not converge within {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("no positive eigenvalue")]
    NoPositiveEigenvalue,

    #[error("insufficient excitation: sigma_min(V) = {sigma_min:e}")]
    InsufficientExcitation { sigma_min: f64 },

    #[error("bound undefined: U_m is singular (sigma_min = {0:e})")]
    SingularInputBasis(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ill-conditioned nodes: kernel matrix not positive definite (min eigenvalue {min_eig:e})")]
    IllConditionedNodes { min_eig: f64 },

    #[error("duplicate nodes at indices {0} and {1}")]
    DuplicateNodes(usize, usize),

    #[error("Wendland kernel (n={n}, k={k}) not implemented; supported: n in 1..=3, k in 0..=2")]
    UnsupportedKernel { n: usize, k: usize },

    #[error("rank-deficient data matrix: dictionary directions {0:?} are not excited")]
    RankDeficientDictionary(Vec<String>),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error comes from the numerics (conditioning, convergence,
    /// excitation) rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Self::NonFinite
                | Self::SvdNoConvergence(_)
                | Self::EigenNoConvergence(_)
                | Self::NotPsd(_)
                | Self::NoPositiveEigenvalue
                | Self::InsufficientExcitation { .. }
                | Self::SingularInputBasis(_)
                | Self::IllConditionedNodes { .. }
                | Self::RankDeficientDictionary(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
