//! Flexible-sampling benchmark on the differential-drive robot.
//!
//! Around `d` centers, `d_i + 1` neighbor states are drawn from a small ball
//! and driven one step with inputs from one of four strategies. Local affine
//! fits recover `g0` and `G` at each center; their estimates feed a bilinear
//! EDMD surrogate on `{1, x1, x2, cos x3, sin x3}` that is then rolled out
//! along a lemniscate.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use super::model::{robot_step, wrap_angle, Lemniscate, RobotParams};
use crate::affine_fit::{assemble_v, InputSet};
use crate::error::{Error, Result};
use crate::excitation::{complete_inputs, orthogonal_inputs, simplex_inputs};
use crate::koopman::{artificial_data, edmd_fit, fit_cluster, BilinearSurrogate, ClusterFit, Cluster, Dictionary, Mode, Sample};
use crate::linalg::{self, Vector};
use crate::rng::{substream, StreamTag};
use crate::stats;

/// Number of wheel inputs.
pub const ROBOT_M: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Random,
    Orthogonal,
    Simplex,
    Angle,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Random, Strategy::Orthogonal, Strategy::Simplex, Strategy::Angle];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Orthogonal => "orthogonal",
            Strategy::Simplex => "simplex",
            Strategy::Angle => "angle",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown strategy '{s}' (expected random, orthogonal, simplex or angle)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Number of centers.
    pub d: usize,
    /// Centers are uniform in `[-box_half, box_half]^2`.
    pub box_half: f64,
    /// Neighbor ball radius.
    pub r_x: f64,
    /// Samples per center (`d_i + 1`) for the surrogate fits.
    pub neighbors: usize,
    /// Sample count used for the extra random-strategy surrogate.
    pub extra_random_neighbors: Option<usize>,
    /// Sample counts for the `sigma_min` ECDFs.
    pub ecdf_neighbors: Vec<usize>,
    /// Scale of the orthogonal and simplex designs.
    pub alpha: f64,
    pub seed: u64,
    pub lemniscate: Lemniscate,
    /// Rollout length in steps.
    pub rollout_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 180,
            box_half: 0.5,
            r_x: 1e-3,
            neighbors: 3,
            extra_random_neighbors: Some(4),
            ecdf_neighbors: vec![3, 4, 5, 6, 10, 20, 30],
            alpha: 2.0 * PI,
            seed: 1,
            lemniscate: Lemniscate::default(),
            rollout_steps: 600,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Domain("d must be >= 1".into()));
        }
        if !(self.r_x > 0.0) || !(self.box_half > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::Domain("r_x, box_half and alpha must be positive".into()));
        }
        let counts = std::iter::once(self.neighbors)
            .chain(self.extra_random_neighbors)
            .chain(self.ecdf_neighbors.iter().copied());
        for c in counts {
            if c < ROBOT_M + 1 {
                return Err(Error::Domain(format!("neighbor count {c} < m + 1 = {}", ROBOT_M + 1)));
            }
        }
        Ok(())
    }
}

/// `d` centers with uniform positions and headings `2 pi i / d`.
pub fn sample_centers(config: &ExperimentConfig) -> Vec<Vector> {
    let mut rng = substream(config.seed, StreamTag::Centers, 0);
    let h = config.box_half;
    (0..config.d)
        .map(|i| {
            let x1 = rng.random_range(-h..=h);
            let x2 = rng.random_range(-h..=h);
            Vector::from_row_slice(&[x1, x2, 2.0 * PI * i as f64 / config.d as f64])
        })
        .collect()
}

/// `count` points uniform in the closed ball of radius `r_x` around
/// `center`, by rejection from the bounding cube. Stream `index` makes the
/// first `k` points independent of `count`.
pub fn sample_neighbors(center: &Vector, r_x: f64, count: usize, seed: u64, index: u64) -> Vec<Vector> {
    let mut rng = substream(seed, StreamTag::Neighbors, index);
    let n = center.len();
    (0..count)
        .map(|_| loop {
            let off = Vector::from_fn(n, |_, _| rng.random_range(-r_x..=r_x));
            if off.norm() <= r_x {
                break center + off;
            }
        })
        .collect()
}

/// `count` inputs uniform on the disk of radius `r_u`.
fn random_inputs(count: usize, r_u: f64, seed: u64, index: u64) -> Vec<Vector> {
    let mut rng = substream(seed, StreamTag::Inputs, index);
    (0..count)
        .map(|_| {
            let r = r_u * rng.random::<f64>().sqrt();
            let t = 2.0 * PI * rng.random::<f64>();
            Vector::from_row_slice(&[r * t.cos(), r * t.sin()])
        })
        .collect()
}

/// Input set of one center. Random and angle strategies share the stream
/// `index`; the angle strategy keeps all but one random draw and prepends
/// their negated sum.
pub fn make_strategy_inputs(strategy: Strategy, count: usize, alpha: f64, r_u: f64, seed: u64, index: u64) -> Result<InputSet> {
    if count < ROBOT_M + 1 {
        return Err(Error::Domain(format!("need at least {} inputs, got {count}", ROBOT_M + 1)));
    }
    match strategy {
        Strategy::Random => InputSet::with_radius(ROBOT_M, random_inputs(count, r_u, seed, index), r_u),
        Strategy::Orthogonal => orthogonal_inputs(ROBOT_M, count - 1, alpha),
        Strategy::Simplex => simplex_inputs(ROBOT_M, count - 1, alpha),
        Strategy::Angle => {
            let draws = random_inputs(count - 1, r_u, seed, index);
            if count == ROBOT_M + 1 {
                return complete_inputs(&draws);
            }
            let sum = draws.iter().fold(Vector::zeros(ROBOT_M), |acc, u| acc + u);
            let mut inputs = Vec::with_capacity(count);
            inputs.push(-sum);
            inputs.extend(draws);
            InputSet::new(ROBOT_M, inputs)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterRecord {
    pub strategy: Strategy,
    pub neighbors: usize,
    pub center_index: usize,
    pub sigma_min: f64,
    pub sigma_tilde: f64,
    /// Max-norm error of `[g0^ G^]` against `[g0 G]` at the center.
    pub fit_error: f64,
    /// `r_eps sqrt(d_i + 1) / sigma_min`.
    pub bound: f64,
    pub r_eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcdfRow {
    pub strategy: Strategy,
    pub neighbors: usize,
    /// `sigma_min(V) / sqrt(d_i + 1)`.
    pub value: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub reference: Vec<Vector>,
    /// Free-running surrogate trajectory, reprojected every step.
    pub surrogate: Vec<Vector>,
    /// Euclidean position error of the relifted one-step prediction.
    pub position_errors: Vec<f64>,
    /// Absolute wrapped heading error of the one-step prediction.
    pub orientation_errors: Vec<f64>,
}

impl Rollout {
    pub fn mean_position_error(&self) -> f64 {
        stats::mean(&self.position_errors)
    }

    pub fn mean_orientation_error(&self) -> f64 {
        stats::mean(&self.orientation_errors)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateRun {
    pub strategy: Strategy,
    pub neighbors: usize,
    pub surrogate: BilinearSurrogate,
    pub rollout: Rollout,
}

impl SurrogateRun {
    pub fn label(&self) -> String {
        format!("{}-{}", self.strategy.name(), self.neighbors)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub centers: Vec<Vector>,
    pub records: Vec<CenterRecord>,
    pub ecdf: Vec<EcdfRow>,
    pub runs: Vec<SurrogateRun>,
    /// `(strategy, neighbors, center, reason)` for centers left out of a fit.
    pub excluded: Vec<(Strategy, usize, usize, String)>,
}

impl ExperimentReport {
    pub fn records_for(&self, strategy: Strategy, neighbors: usize) -> Vec<&CenterRecord> {
        self.records
            .iter()
            .filter(|r| r.strategy == strategy && r.neighbors == neighbors)
            .collect()
    }

    pub fn median_sigma(&self, strategy: Strategy, neighbors: usize) -> f64 {
        let v: Vec<f64> = self.records_for(strategy, neighbors).iter().map(|r| r.sigma_min).collect();
        stats::median(&v)
    }

    pub fn median_fit_error(&self, strategy: Strategy, neighbors: usize) -> f64 {
        let v: Vec<f64> = self.records_for(strategy, neighbors).iter().map(|r| r.fit_error).collect();
        stats::median(&v)
    }

    pub fn run(&self, strategy: Strategy, neighbors: usize) -> Option<&SurrogateRun> {
        self.runs.iter().find(|r| r.strategy == strategy && r.neighbors == neighbors)
    }
}

/// Lifts, predicts one step and reprojects the heading with `atan2`.
pub fn surrogate_step(sur: &BilinearSurrogate, x: &Vector, u: &Vector) -> Vector {
    let z = sur.predict(&sur.dictionary.eval(x), u);
    Vector::from_row_slice(&[z[1], z[2], z[4].atan2(z[3])])
}

pub fn rollout(sur: &BilinearSurrogate, x0: &Vector, inputs: &[Vector], params: &RobotParams) -> Rollout {
    let mut reference = vec![x0.clone()];
    let mut surrogate = vec![x0.clone()];
    let mut position_errors = Vec::with_capacity(inputs.len());
    let mut orientation_errors = Vec::with_capacity(inputs.len());
    for u in inputs {
        let x = reference.last().unwrap().clone();
        let next = robot_step(&x, u, params);
        let pred = surrogate_step(sur, &x, u);
        position_errors.push(((pred[0] - next[0]).powi(2) + (pred[1] - next[1]).powi(2)).sqrt());
        orientation_errors.push(wrap_angle(pred[2] - next[2]).abs());
        let free = surrogate_step(sur, surrogate.last().unwrap(), u);
        surrogate.push(free);
        reference.push(next);
    }
    Rollout {
        reference,
        surrogate,
        position_errors,
        orientation_errors,
    }
}

struct CenterFit {
    record: CenterRecord,
    fit: ClusterFit,
}

fn fit_center(
    center_index: usize,
    center: &Vector,
    strategy: Strategy,
    count: usize,
    config: &ExperimentConfig,
    params: &RobotParams,
) -> Result<CenterFit> {
    let idx = center_index as u64;
    let inputs = make_strategy_inputs(strategy, count, config.alpha, params.r_u, config.seed, idx)?;
    let states = sample_neighbors(center, config.r_x, count, config.seed, idx);
    let samples: Vec<Sample> = states
        .into_iter()
        .zip(inputs.inputs())
        .map(|(x, u)| {
            let y = robot_step(&x, u, params);
            Sample { x, u: u.clone(), y }
        })
        .collect();
    let cluster = Cluster {
        center_index,
        center: center.clone(),
        radius: config.r_x,
        samples,
    };
    let r_eps = params.noise_radius(config.r_x, inputs.max_norm());
    let fit = fit_cluster(&cluster, ROBOT_M, r_eps)?;
    let mut truth = params.input_matrix(center).insert_column(0, 0.0);
    truth.set_column(0, center);
    let fit_error = (fit.estimate.stacked() - truth).amax();
    Ok(CenterFit {
        record: CenterRecord {
            strategy,
            neighbors: count,
            center_index,
            sigma_min: fit.estimate.sigma_min_v,
            sigma_tilde: fit.sigma_tilde,
            fit_error,
            bound: fit.estimate.bound_maxnorm,
            r_eps,
        },
        fit,
    })
}

fn ecdf_rows(centers: &[Vector], config: &ExperimentConfig, params: &RobotParams) -> Result<Vec<EcdfRow>> {
    let mut rows = Vec::new();
    for strategy in Strategy::ALL {
        for &count in &config.ecdf_neighbors {
            let values = (0..centers.len())
                .into_par_iter()
                .map(|i| {
                    let set = make_strategy_inputs(strategy, count, config.alpha, params.r_u, config.seed, i as u64)?;
                    Ok(linalg::sigma_min(&assemble_v(&set))? / (count as f64).sqrt())
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.extend(stats::ecdf(&values).into_iter().map(|(value, fraction)| EcdfRow {
                strategy,
                neighbors: count,
                value,
                fraction,
            }));
        }
    }
    Ok(rows)
}

pub fn run_experiment(config: &ExperimentConfig, params: &RobotParams) -> Result<ExperimentReport> {
    config.validate()?;
    params.validate()?;
    let centers = sample_centers(config);
    let ecdf = ecdf_rows(&centers, config, params)?;

    let mut plans: Vec<(Strategy, usize)> = Strategy::ALL.iter().map(|&s| (s, config.neighbors)).collect();
    if let Some(extra) = config.extra_random_neighbors {
        if extra != config.neighbors {
            plans.push((Strategy::Random, extra));
        }
    }
    let lift = Dictionary::Unicycle;
    let x0 = config.lemniscate.initial_state();
    let inputs = config.lemniscate.inputs(params, config.rollout_steps);

    let mut records = Vec::new();
    let mut runs = Vec::new();
    let mut excluded = Vec::new();
    for (strategy, count) in plans {
        let results: Vec<Result<CenterFit>> = centers
            .par_iter()
            .enumerate()
            .map(|(i, c)| fit_center(i, c, strategy, count, config, params))
            .collect();
        let mut fits = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(cf) => {
                    records.push(cf.record);
                    fits.push(cf.fit);
                }
                Err(e) => excluded.push((strategy, count, i, e.to_string())),
            }
        }
        let art = artificial_data(&fits, Mode::Operator, &lift, ROBOT_M)?;
        let mut surrogate = edmd_fit(&art, &lift)?;
        surrogate.sigma_tilde = fits.iter().map(|f| f.sigma_tilde).collect();
        let roll = rollout(&surrogate, &x0, &inputs, params);
        runs.push(SurrogateRun {
            strategy,
            neighbors: count,
            surrogate,
            rollout: roll,
        });
    }
    Ok(ExperimentReport {
        centers,
        records,
        ecdf,
        runs,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::check_nco;
    use approx::assert_relative_eq;

    #[test]
    fn centers_layout() {
        let cfg = ExperimentConfig::default();
        let c = sample_centers(&cfg);
        assert_eq!(c.len(), 180);
        assert_eq!(c[0][2], 0.0);
        assert_relative_eq!(c[179][2], 2.0 * PI * 179.0 / 180.0, epsilon = 1e-15);
        assert!(c.iter().all(|x| x[0].abs() <= 0.5 && x[1].abs() <= 0.5));
        assert_eq!(c, sample_centers(&cfg));
    }

    #[test]
    fn neighbors_in_ball_and_centered() {
        let center = Vector::from_row_slice(&[0.1, 0.2, 0.3]);
        let pts = sample_neighbors(&center, 1e-3, 10_000, 5, 0);
        assert!(pts.iter().all(|p| (p - &center).norm() <= 1e-3));
        let mean = pts.iter().fold(Vector::zeros(3), |a, p| a + p) / pts.len() as f64;
        assert!((mean - &center).norm() < 2e-5);
        assert_eq!(sample_neighbors(&center, 1e-3, 5, 5, 0), pts[..5].to_vec());
    }

    #[test]
    fn designed_strategies_are_maximal() {
        for s in [Strategy::Orthogonal, Strategy::Simplex] {
            let set = make_strategy_inputs(s, 3, 2.0 * PI, 20.0, 1, 0).unwrap();
            let smin = linalg::sigma_min(&assemble_v(&set)).unwrap();
            assert_relative_eq!(smin, 3f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn angle_strategy_satisfies_nco_and_shares_draws() {
        for count in [3, 5] {
            let a = make_strategy_inputs(Strategy::Angle, count, 2.0 * PI, 20.0, 9, 4).unwrap();
            let r = make_strategy_inputs(Strategy::Random, count, 2.0 * PI, 20.0, 9, 4).unwrap();
            assert!(check_nco(&a, 1e-12).0);
            assert_eq!(a.inputs()[1], r.inputs()[0]);
            assert_eq!(a.inputs()[2], r.inputs()[1]);
            assert!(r.inputs().iter().all(|u| u.norm() <= 20.0));
        }
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(Strategy::from_name(s.name()).unwrap(), s);
        }
        assert!(Strategy::from_name("grid").is_err());
    }

    #[test]
    fn small_experiment_bounds_hold() {
        let cfg = ExperimentConfig {
            d: 30,
            ecdf_neighbors: vec![3, 5],
            rollout_steps: 50,
            ..ExperimentConfig::default()
        };
        let rep = run_experiment(&cfg, &RobotParams::default()).unwrap();
        assert_eq!(rep.runs.len(), 5);
        for r in &rep.records {
            assert!(r.fit_error <= r.bound * (1.0 + 1e-9) + 1e-12, "{r:?}");
        }
        for r in rep.records_for(Strategy::Orthogonal, 3) {
            assert_relative_eq!(r.sigma_min, 3f64.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_inputs_keep_surrogate_near_start() {
        let cfg = ExperimentConfig {
            d: 40,
            ecdf_neighbors: vec![3],
            rollout_steps: 1,
            extra_random_neighbors: None,
            ..ExperimentConfig::default()
        };
        let rep = run_experiment(&cfg, &RobotParams::default()).unwrap();
        let sur = &rep.run(Strategy::Simplex, 3).unwrap().surrogate;
        let x0 = cfg.lemniscate.initial_state();
        let zeros = vec![Vector::zeros(2); 20];
        let roll = rollout(sur, &x0, &zeros, &RobotParams::default());
        assert!(roll.reference.iter().all(|x| *x == x0));
        // drift per step is of the order of the fit error, itself ~ r_x
        assert!((&roll.surrogate[1] - &x0).amax() < cfg.r_x);
        assert!((roll.surrogate.last().unwrap() - &x0).amax() < 20.0 * cfg.r_x);
    }
}
