//! Bilinear EDMD with flexible sampling.
//!
//! Raw samples `(x, u, y)` taken under arbitrary inputs are grouped around
//! chosen centers `x_i`. A local affine regression per cluster recovers
//! `g0(x_i)` and the columns of `G(x_i)`, which stand in for data taken
//! under the unit inputs `e_0 = 0, e_1, ..., e_m`. Those artificial samples
//! feed one least-squares regression per unit input, giving matrices
//! `K^0..K^m` (discrete time) or `L^0..L^m` (generator) that act on lifted
//! states.

use log::warn;
use rayon::prelude::*;

use super::dictionary::Dictionary;
use crate::affine_fit::{fit_affine, InputSet, ObservationSet, RegressionEstimate};
use crate::error::{Error, Result};
use crate::excitation::thm_lower_bound;
use crate::linalg::{self, Matrix, Vector};

/// Whether samples carry successor states or lifted time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `y = F(x, u)`, the raw successor state in `R^n`.
    Operator,
    /// `y = dPsi(x) f(x, u)`, the lifted time derivative in `R^M`.
    Generator,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Operator => "operator",
            Mode::Generator => "generator",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "operator" => Ok(Mode::Operator),
            "generator" => Ok(Mode::Generator),
            other => Err(Error::Domain(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vector,
    pub u: Vector,
    pub y: Vector,
}

/// How sample-to-center proximity is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterMetric {
    /// Euclidean distance between states, threshold `r_i`.
    State,
    /// Distance between lifted states, threshold `lipschitz * r_i`.
    Observable { lipschitz: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Index of the center in the list passed to [`cluster`].
    pub center_index: usize,
    pub center: Vector,
    pub radius: f64,
    pub samples: Vec<Sample>,
}

impl Cluster {
    pub fn input_set(&self, m: usize) -> Result<InputSet> {
        InputSet::new(m, self.samples.iter().map(|s| s.u.clone()).collect())
    }

    /// Largest realized distance of a sample state from the center.
    pub fn realized_radius(&self) -> f64 {
        self.samples
            .iter()
            .fold(0.0, |r, s| r.max((&s.x - &self.center).norm()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredDataset {
    pub mode: Mode,
    pub m: usize,
    /// Clusters with at least `m + 1` samples, in center order.
    pub clusters: Vec<Cluster>,
    /// Centers dropped for having fewer than `m + 1` samples.
    pub undersampled: Vec<usize>,
    /// Samples outside every ball.
    pub unassigned: usize,
}

/// Assigns every sample to the nearest center whose ball contains it.
pub fn cluster(
    samples: &[Sample],
    centers: &[Vector],
    radii: &[f64],
    lift: &Dictionary,
    metric: ClusterMetric,
    mode: Mode,
    m: usize,
) -> Result<ClusteredDataset> {
    if centers.len() != radii.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} centers but {} radii",
            centers.len(),
            radii.len()
        )));
    }
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            if centers[i] == centers[j] {
                return Err(Error::Domain(format!("centers {i} and {j} coincide")));
            }
        }
    }
    let (embed, scale): (Box<dyn Fn(&Vector) -> Vector + Sync>, f64) = match metric {
        ClusterMetric::State => (Box::new(|x: &Vector| x.clone()), 1.0),
        ClusterMetric::Observable { lipschitz } => (Box::new(move |x: &Vector| lift.eval(x)), lipschitz),
    };
    let embedded_centers: Vec<Vector> = centers.iter().map(&embed).collect();

    let mut members: Vec<Vec<Sample>> = vec![Vec::new(); centers.len()];
    let mut unassigned = 0;
    for s in samples {
        if s.u.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "sample input has length {}, expected {m}",
                s.u.len()
            )));
        }
        let z = embed(&s.x);
        let best = embedded_centers
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (&z - c).norm()))
            .filter(|&(i, dist)| dist <= scale * radii[i])
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, _)) => members[i].push(s.clone()),
            None => unassigned += 1,
        }
    }

    let mut clusters = Vec::new();
    let mut undersampled = Vec::new();
    for (i, samples) in members.into_iter().enumerate() {
        if samples.len() < m + 1 {
            warn!("cluster {i} has {} samples, needs {}; excluded", samples.len(), m + 1);
            undersampled.push(i);
        } else {
            clusters.push(Cluster {
                center_index: i,
                center: centers[i].clone(),
                radius: radii[i],
                samples,
            });
        }
    }
    Ok(ClusteredDataset {
        mode,
        m,
        clusters,
        undersampled,
        unassigned,
    })
}

/// `(Theta-angle bound)^{-1/2}` for the first `m + 1` inputs: an upper bound
/// on `1 / sigma_min(V)`. Returns `+inf` when the bound is zero or undefined.
pub fn sigma_tilde(inputs: &InputSet) -> f64 {
    match thm_lower_bound(inputs) {
        Ok((b, _)) if b > 0.0 => 1.0 / b.sqrt(),
        Ok(_) => {
            warn!("angle bound vanishes; sigma_tilde is infinite");
            f64::INFINITY
        }
        Err(e) => {
            warn!("angle bound undefined ({e}); sigma_tilde is infinite");
            f64::INFINITY
        }
    }
}

/// Local affine model of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFit {
    pub center_index: usize,
    pub center: Vector,
    pub sample_count: usize,
    pub estimate: RegressionEstimate,
    pub sigma_tilde: f64,
}

impl ClusterFit {
    /// Estimated `Y~^k_i`: `g0_hat` for `k = 0`, else column `k-1` of `G_hat`.
    pub fn component(&self, k: usize) -> Vector {
        if k == 0 {
            self.estimate.g0_hat.clone()
        } else {
            self.estimate.g_hat.column(k - 1).into_owned()
        }
    }
}

/// Fits `y = g0 + G u` on one cluster. `r_eps` is the disturbance radius
/// used for the reported bound.
pub fn fit_cluster(cluster: &Cluster, m: usize, r_eps: f64) -> Result<ClusterFit> {
    let inputs = cluster.input_set(m)?;
    let out_dim = cluster.samples[0].y.len();
    let obs = ObservationSet::new(
        out_dim,
        cluster.samples.iter().map(|s| s.y.clone()).collect(),
        r_eps,
    )?;
    let estimate = fit_affine(&inputs, &obs)?;
    Ok(ClusterFit {
        center_index: cluster.center_index,
        center: cluster.center.clone(),
        sample_count: cluster.samples.len(),
        estimate,
        sigma_tilde: sigma_tilde(&inputs),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlexibleFit {
    pub fits: Vec<ClusterFit>,
    /// Clusters whose design matrix was rank deficient.
    pub unfit: Vec<(usize, Error)>,
}

/// Fits every cluster in parallel; results stay in cluster order.
pub fn fit_clusters(data: &ClusteredDataset, r_eps: f64) -> FlexibleFit {
    let results: Vec<(usize, Result<ClusterFit>)> = data
        .clusters
        .par_iter()
        .map(|c| (c.center_index, fit_cluster(c, data.m, r_eps)))
        .collect();
    let mut fits = Vec::new();
    let mut unfit = Vec::new();
    for (i, r) in results {
        match r {
            Ok(f) => fits.push(f),
            Err(e) => {
                warn!("cluster {i} unfit: {e}");
                unfit.push((i, e));
            }
        }
    }
    FlexibleFit { fits, unfit }
}

/// `r_eps * max_i sqrt(n_i) * sigma_tilde_i`, with `n_i` the number of
/// samples in cluster `i`: the max-norm bound on `Y^k - Y~^k`.
pub fn flexible_sampling_bound(r_eps: f64, fits: &[ClusterFit]) -> f64 {
    fits.iter()
        .map(|f| r_eps * (f.sample_count as f64).sqrt() * f.sigma_tilde)
        .fold(0.0, f64::max)
}

/// Artificial regression data built from cluster estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtificialData {
    pub mode: Mode,
    /// `X = [Psi(x_1) ... Psi(x_d)]`.
    pub x: Matrix,
    /// Regression targets per unit input `e_0 = 0, e_1..e_m`: lifted
    /// successors `Psi(F(x_i, e_k))` (operator) or `Y^0 + Y~^k` (generator).
    pub targets: Vec<Matrix>,
    /// Generator mode only: the estimated components `Y~^0..Y~^m`.
    pub components: Option<Vec<Matrix>>,
}

pub fn artificial_data(fits: &[ClusterFit], mode: Mode, lift: &Dictionary, m: usize) -> Result<ArtificialData> {
    let d = fits.len();
    if d == 0 {
        return Err(Error::Domain("no fitted clusters".into()));
    }
    let big_m = lift.len();
    let mut x = Matrix::zeros(big_m, d);
    for (i, f) in fits.iter().enumerate() {
        x.set_column(i, &lift.eval(&f.center));
    }
    match mode {
        Mode::Operator => {
            let targets = (0..=m)
                .map(|k| {
                    let mut y = Matrix::zeros(big_m, d);
                    for (i, f) in fits.iter().enumerate() {
                        let succ = if k == 0 { f.component(0) } else { f.component(0) + f.component(k) };
                        y.set_column(i, &lift.eval(&succ));
                    }
                    y
                })
                .collect();
            Ok(ArtificialData {
                mode,
                x,
                targets,
                components: None,
            })
        }
        Mode::Generator => {
            let components: Vec<Matrix> = (0..=m)
                .map(|k| {
                    let mut y = Matrix::zeros(big_m, d);
                    for (i, f) in fits.iter().enumerate() {
                        let c = f.component(k);
                        if c.len() != big_m {
                            return Err(Error::DimensionMismatch(format!(
                                "generator outputs have length {}, dictionary has {big_m}",
                                c.len()
                            )));
                        }
                        y.set_column(i, &c);
                    }
                    Ok(y)
                })
                .collect::<Result<_>>()?;
            let targets = (0..=m)
                .map(|k| if k == 0 { components[0].clone() } else { &components[0] + &components[k] })
                .collect();
            Ok(ArtificialData {
                mode,
                x,
                targets,
                components: Some(components),
            })
        }
    }
}

/// Matrices `K^0..K^m` (or `L^0..L^m`) acting on lifted states.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearSurrogate {
    pub mode: Mode,
    pub dictionary: Dictionary,
    pub matrices: Vec<Matrix>,
    pub sigma_tilde: Vec<f64>,
}

impl BilinearSurrogate {
    /// Number of inputs `m`.
    pub fn m(&self) -> usize {
        self.matrices.len() - 1
    }

    /// Operator: `z+ = (K^0 + sum_k u_k (K^k - K^0)) z`.
    /// Generator: `dz/dt = (L^0 + sum_k u_k (L^k - L^0)) z`.
    pub fn predict(&self, z: &Vector, u: &Vector) -> Vector {
        let base = &self.matrices[0];
        let mut out = base * z;
        for (k, uk) in u.iter().enumerate() {
            if *uk != 0.0 {
                out += (&self.matrices[k + 1] - base) * z * *uk;
            }
        }
        out
    }

    /// Effective matrix for a constant input.
    pub fn matrix_for(&self, u: &Vector) -> Matrix {
        let base = &self.matrices[0];
        let mut out = base.clone();
        for (k, uk) in u.iter().enumerate() {
            out += (&self.matrices[k + 1] - base) * *uk;
        }
        out
    }
}

/// Solves `K^k = argmin ||K X - Y^k||_F` via the pseudo-inverse of `X`.
pub fn edmd_fit(data: &ArtificialData, lift: &Dictionary) -> Result<BilinearSurrogate> {
    let x = &data.x;
    let dec = linalg::svd(x)?;
    let tol = 1e-10 * dec.sigma_max();
    if x.ncols() < x.nrows() || dec.singular_values.iter().any(|&s| s <= tol) {
        let names = lift.names();
        let mut deficient = Vec::new();
        // Left singular directions with (near) zero singular value, plus the
        // directions missing entirely when d < M.
        let full = linalg::svd(&(x * x.transpose()))?;
        for (j, &s) in full.singular_values.iter().enumerate() {
            if s <= tol * dec.sigma_max() {
                let col = full.u.column(j);
                let p = col.iamax();
                if !deficient.contains(&names[p]) {
                    deficient.push(names[p].clone());
                }
            }
        }
        return Err(Error::RankDeficientDictionary(deficient));
    }
    let x_pinv = linalg::pinv(x, None)?;
    let matrices = data.targets.iter().map(|y| y * &x_pinv).collect();
    Ok(BilinearSurrogate {
        mode: data.mode,
        dictionary: *lift,
        matrices,
        sigma_tilde: Vec::new(),
    })
}

/// Clustering, local fits, artificial data and EDMD in one call.
pub fn fit_surrogate(data: &ClusteredDataset, lift: &Dictionary, r_eps: f64) -> Result<(BilinearSurrogate, FlexibleFit)> {
    let flex = fit_clusters(data, r_eps);
    let art = artificial_data(&flex.fits, data.mode, lift, data.m)?;
    let mut sur = edmd_fit(&art, lift)?;
    sur.sigma_tilde = flex.fits.iter().map(|f| f.sigma_tilde).collect();
    Ok((sur, flex))
}
