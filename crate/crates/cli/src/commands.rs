use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use excite_id::affine_fit::InputSet;
use excite_id::excitation::{self, monte_carlo_sigma, orthogonal_inputs, simplex_inputs, DesignReport};
use excite_id::koopman::{
    box_grid, constant_c, fill_distance, fit_clusters, fit_surrogate, flexible_sampling_bound, g_tilde_from_fits,
    kedmd_control_fit, kedmd_fit, kernel_matrix, to_text, Dataset, Dictionary, KernelBoundTerms, KernelSurrogate,
    Mode, Surrogate, WendlandKernel,
};
use excite_id::linalg::Vector;
use excite_id::robot::{
    make_strategy_inputs, report, run_experiment, ExperimentConfig, ExperimentReport, Lemniscate, RobotParams,
    Strategy, ROBOT_M,
};
use excite_id::stats;

use crate::svg::{Plot, Series};
use crate::table::{names, read_numeric, write_csv, write_text};
use crate::{AnalyzeArgs, DesignArgs, FitArgs, KedmdArgs, MonteCarloArgs, RobotArgs, RunContext};

const DEFAULT_MC_D: [usize; 9] = [5, 6, 7, 8, 9, 10, 15, 20, 25];
const DEFAULT_PROBES: usize = 21;

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e15)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

fn print_design(set: &InputSet, r: &DesignReport) {
    println!("m: {}", set.m());
    println!("d: {}", set.d());
    println!("sigma_min: {}", num(r.sigma_min_v));
    println!("sigma_upper: {}", num(r.sigma_upper));
    match r.thm_lower_bound {
        Some(b) => println!("angle_lower_bound: {}", num(b)),
        None => println!("angle_lower_bound: undefined"),
    }
    println!("nco_residual: {}", num(r.nco_residual));
    println!("max_input_norm: {}", num(set.max_norm()));
}

pub fn design(a: &DesignArgs, ctx: &RunContext) -> Result<()> {
    let c = &ctx.config.design;
    let strategy = a.strategy.clone().or_else(|| c.strategy.clone()).unwrap_or_else(|| "simplex".into());
    let strategy = Strategy::from_name(&strategy)?;
    let m = a.m.or(c.m).context("--m is required")?;
    let d = a.d.or(c.d).unwrap_or(m);
    let alpha = a.alpha.or(c.alpha).unwrap_or(1.0);
    let r_u = a.r_u.or(c.r_u);
    let set = match strategy {
        Strategy::Orthogonal => orthogonal_inputs(m, d, alpha)?,
        Strategy::Simplex => simplex_inputs(m, d, alpha)?,
        s => {
            ensure!(m == ROBOT_M, "{} inputs are drawn on the disk and need m = {ROBOT_M}", s.name());
            let radius = r_u.unwrap_or(RobotParams::default().r_u);
            make_strategy_inputs(s, d + 1, alpha, radius, ctx.seed, 0)?
        }
    };
    let set = match r_u {
        Some(r) => set.with_constraint(r)?,
        None => set,
    };
    let rep = excitation::analyze(&set)?;
    let rows: Vec<Vec<String>> = set.inputs().iter().map(|u| u.iter().map(|v| v.to_string()).collect()).collect();
    let path = write_csv(&ctx.output_dir, "inputs.csv", &names("u", m), &rows)?;
    println!("strategy: {}", strategy.name());
    print_design(&set, &rep);
    wrote(&path);
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs, ctx: &RunContext) -> Result<()> {
    let c = &ctx.config.analyze;
    let path = a.input.clone().or_else(|| c.input.clone()).context("--input is required")?;
    let t = read_numeric(&path)?;
    let cols = t.prefixed("u");
    ensure!(
        !cols.is_empty() && cols.len() == t.header.len(),
        "{}: line 1: expected header u0,..,u{{m-1}}",
        path.display()
    );
    let inputs = (0..t.rows.len()).map(|i| Vector::from_vec(t.columns(i, &cols))).collect();
    let set = match a.r_u.or(c.r_u) {
        Some(r) => InputSet::with_radius(cols.len(), inputs, r)?,
        None => InputSet::new(cols.len(), inputs)?,
    };
    ensure!(!set.is_empty(), "{}: no inputs", path.display());
    let rep = excitation::analyze(&set)?;
    print_design(&set, &rep);
    Ok(())
}

pub fn montecarlo(a: &MonteCarloArgs, ctx: &RunContext) -> Result<()> {
    let c = &ctx.config.montecarlo;
    let m = a.m.or(c.m).unwrap_or(4);
    let ds = a.d.clone().or_else(|| c.d.clone()).unwrap_or_else(|| DEFAULT_MC_D.to_vec());
    let trials = a.trials.or(c.trials).unwrap_or(1000);
    let normalize = a.normalize.or(c.normalize).unwrap_or(false);
    let rows = monte_carlo_sigma(m, &ds, trials, normalize, ctx.seed)?;

    let header: Vec<String> = ["d", "q0", "q25", "q50", "q75", "q100", "mean"].map(String::from).to_vec();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let s = r.summary;
            std::iter::once(r.d.to_string())
                .chain([s.q0, s.q25, s.q50, s.q75, s.q100, s.mean].iter().map(|v| v.to_string()))
                .collect()
        })
        .collect();
    println!("{}", header.join(","));
    for r in &table {
        println!("{}", r.join(","));
    }
    wrote(&write_csv(&ctx.output_dir, "montecarlo.csv", &header, &table)?);
    let curve = |f: fn(&stats::Summary) -> f64| rows.iter().map(|r| (r.d as f64, f(&r.summary))).collect();
    let plot = Plot::new(
        &format!("sigma_min(V)/sqrt(d), m = {m}, {trials} trials"),
        "d",
        "sigma_min(V)/sqrt(d)",
    )
    .with(Series::new("q25", curve(|s| s.q25)))
    .with(Series::new("median", curve(|s| s.q50)))
    .with(Series::new("q75", curve(|s| s.q75)));
    wrote(&write_text(&ctx.output_dir, "montecarlo.svg", &plot.render())?);
    Ok(())
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Dataset::read(f).with_context(|| format!("invalid dataset {}", path.display()))
}

pub fn fit(a: &FitArgs, ctx: &RunContext) -> Result<()> {
    let c = &ctx.config.fit;
    let path = a.dataset.clone().or_else(|| c.dataset.clone()).context("--dataset is required")?;
    let dict = a.dictionary.clone().or_else(|| c.dictionary.clone()).unwrap_or_else(|| "affine".into());
    let mode = Mode::from_name(a.mode.as_deref().or(c.mode.as_deref()).unwrap_or("operator"))?;
    let r_eps = a.r_eps.or(c.r_eps).unwrap_or(0.0);
    ensure!(r_eps >= 0.0, "--r-eps must be nonnegative");

    let ds = read_dataset(&path)?;
    let lift = Dictionary::from_name(&dict, ds.n)?;
    let n = ds.n;
    let data = ds.into_clustered(mode, None)?;
    let (sur, flex) = fit_surrogate(&data, &lift, r_eps)?;

    let mut header = vec!["cluster".to_string()];
    header.extend(names("c", n));
    header.extend(["samples", "sigma_min", "sigma_tilde", "bound"].map(String::from));
    let rows: Vec<Vec<String>> = flex
        .fits
        .iter()
        .map(|f| {
            std::iter::once(f.center_index.to_string())
                .chain(f.center.iter().map(|v| v.to_string()))
                .chain([
                    f.sample_count.to_string(),
                    f.estimate.sigma_min_v.to_string(),
                    f.sigma_tilde.to_string(),
                    f.estimate.bound_maxnorm.to_string(),
                ])
                .collect()
        })
        .collect();

    println!("mode: {}", mode.name());
    println!("dictionary: {} (M = {})", lift.kind_name(), lift.len());
    println!("m: {}", sur.m());
    println!("clusters_fit: {}", flex.fits.len());
    println!("clusters_undersampled: {}", data.undersampled.len());
    println!("clusters_unfit: {}", flex.unfit.len());
    println!("flexible_sampling_bound: {}", num(flexible_sampling_bound(r_eps, &flex.fits)));
    wrote(&write_csv(&ctx.output_dir, "cluster_fits.csv", &header, &rows)?);
    wrote(&write_text(&ctx.output_dir, "surrogate.txt", &to_text(&Surrogate::Bilinear(sur)))?);
    Ok(())
}

fn bounding_grid(nodes: &[Vector], per_dim: usize) -> Result<Vec<Vector>> {
    let n = nodes[0].len();
    let lo: Vec<f64> = (0..n).map(|j| nodes.iter().map(|x| x[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..n).map(|j| nodes.iter().map(|x| x[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    Ok(box_grid(&lo, &hi, per_dim)?)
}

fn autonomous_fit(path: &Path, k: usize, rho: f64, n_flag: Option<usize>) -> Result<KernelSurrogate> {
    let t = read_numeric(path)?;
    let xc = t.prefixed("x");
    let yc = t.prefixed("y");
    ensure!(
        !xc.is_empty() && xc.len() == yc.len() && t.header.len() == 2 * xc.len(),
        "{}: line 1: expected header x0..x{{n-1}},y0..y{{n-1}}",
        path.display()
    );
    let n = xc.len();
    if let Some(flag) = n_flag {
        ensure!(flag == n, "--n {flag} does not match the node dimension {n}");
    }
    let nodes: Vec<Vector> = (0..t.rows.len()).map(|i| Vector::from_vec(t.columns(i, &xc))).collect();
    let succ: Vec<Vector> = (0..t.rows.len()).map(|i| Vector::from_vec(t.columns(i, &yc))).collect();
    ensure!(!nodes.is_empty(), "{}: no nodes", path.display());
    Ok(kedmd_fit(&WendlandKernel::new(n, k, rho)?, &nodes, &succ)?)
}

pub fn kedmd(a: &KedmdArgs, ctx: &RunContext) -> Result<()> {
    let c = &ctx.config.kedmd;
    let k = a.k.or(c.k).unwrap_or(1);
    let rho = a.rho.or(c.rho).unwrap_or(1.0);
    let probes = a.probes.or(c.probes).unwrap_or(DEFAULT_PROBES);
    let r_eps = a.r_eps.or(c.r_eps).unwrap_or(0.0);
    let n_flag = a.n.or(c.n);
    let nodes_path = a.nodes.clone().or_else(|| c.nodes.clone());
    let dataset_path = a.dataset.clone().or_else(|| c.dataset.clone());

    let mut control: Option<(f64, f64)> = None;
    let sur = match (nodes_path, dataset_path) {
        (Some(p), None) => autonomous_fit(&p, k, rho, n_flag)?,
        (None, Some(p)) => {
            let ds = read_dataset(&p)?;
            ensure!(ds.out_dim == ds.n, "{}: successor dimension {} differs from state dimension {}", p.display(), ds.out_dim, ds.n);
            if let Some(flag) = n_flag {
                ensure!(flag == ds.n, "--n {flag} does not match the state dimension {}", ds.n);
            }
            let kernel = WendlandKernel::new(ds.n, k, rho)?;
            let data = ds.into_clustered(Mode::Operator, None)?;
            let flex = fit_clusters(&data, r_eps);
            ensure!(!flex.fits.is_empty(), "{}: no cluster could be fit", p.display());
            let radius = data.clusters.iter().map(|c| c.realized_radius()).fold(0.0, f64::max);
            let sigma = flex.fits.iter().map(|f| f.sigma_tilde).fold(0.0, f64::max);
            control = Some((radius, sigma));
            let (nodes, g) = g_tilde_from_fits(&flex.fits, data.m);
            kedmd_control_fit(&kernel, &nodes, &g)?
        }
        (Some(_), Some(_)) => anyhow::bail!("give either --nodes or --dataset, not both"),
        (None, None) => anyhow::bail!("--nodes or --dataset is required"),
    };

    let kx = kernel_matrix(&sur.kernel, &sur.nodes)?;
    let cc = constant_c(&kx)?;
    let h = fill_distance(&sur.nodes, &bounding_grid(&sur.nodes, probes)?)?;
    let mut report: Vec<(String, String)> = vec![
        ("nodes".into(), sur.nodes.len().to_string()),
        ("n".into(), sur.kernel.n().to_string()),
        ("k".into(), k.to_string()),
        ("rho".into(), rho.to_string()),
        ("m".into(), sur.m().to_string()),
        ("fill_distance_estimated".into(), h.to_string()),
        ("c".into(), cc.value.to_string()),
        ("c_exact".into(), cc.exact.to_string()),
        ("kx_inv_norm".into(), sur.kx_inv_norm.to_string()),
    ];
    if let Some((radius, sigma)) = control {
        let terms = KernelBoundTerms {
            fill_distance: h,
            smoothness: k,
            c: cc.value,
            kx_inv_norm: sur.kx_inv_norm,
            cluster_radius: radius,
            sigma_tilde: sigma,
        };
        report.extend([
            ("cluster_radius".to_string(), radius.to_string()),
            ("sigma_tilde_max".to_string(), sigma.to_string()),
            ("radius_condition".to_string(), terms.radius_condition().to_string()),
            ("approximation_term".to_string(), terms.evaluate(1.0, 0.0).to_string()),
            ("sampling_term".to_string(), terms.evaluate(0.0, 1.0).to_string()),
        ]);
    }
    for (key, v) in &report {
        let v = v.parse::<f64>().map(num).unwrap_or_else(|_| v.clone());
        println!("{key}: {v}");
    }
    let rows: Vec<Vec<String>> = report.into_iter().map(|(key, v)| vec![key, v]).collect();
    wrote(&write_csv(&ctx.output_dir, "kedmd_report.csv", &["quantity".into(), "value".into()], &rows)?);
    wrote(&write_text(&ctx.output_dir, "surrogate.txt", &to_text(&Surrogate::Kernel(sur)))?);
    Ok(())
}

fn robot_setup(ctx: &RunContext) -> (ExperimentConfig, RobotParams) {
    let c = &ctx.config.robot;
    let dc = ExperimentConfig::default();
    let dl = Lemniscate::default();
    let cfg = ExperimentConfig {
        d: c.d.unwrap_or(dc.d),
        box_half: c.box_half.unwrap_or(dc.box_half),
        r_x: c.r_x.unwrap_or(dc.r_x),
        neighbors: c.neighbors.unwrap_or(dc.neighbors),
        extra_random_neighbors: c.extra_random_neighbors.or(dc.extra_random_neighbors),
        ecdf_neighbors: c.ecdf_neighbors.clone().unwrap_or(dc.ecdf_neighbors),
        alpha: c.alpha.unwrap_or(dc.alpha),
        seed: ctx.seed,
        lemniscate: Lemniscate {
            amplitude: c.lemniscate_amplitude.unwrap_or(dl.amplitude),
            period: c.lemniscate_period.unwrap_or(dl.period),
        },
        rollout_steps: c.rollout_steps.unwrap_or(dc.rollout_steps),
    };
    let dp = RobotParams::default();
    let params = RobotParams {
        wheel_radius: c.wheel_radius.unwrap_or(dp.wheel_radius),
        wheel_separation: c.wheel_separation.unwrap_or(dp.wheel_separation),
        dt: c.dt.unwrap_or(dp.dt),
        r_u: c.r_u.unwrap_or(dp.r_u),
    };
    (cfg, params)
}

fn robot_plots(rep: &ExperimentReport, params: &RobotParams, neighbors: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut sigma: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut errors: BTreeMap<String, (Vec<(f64, f64)>, Vec<(f64, f64)>)> = BTreeMap::new();
    for (rank, r) in report::sorted_records(rep) {
        let label = format!("{}-{}", r.strategy.name(), r.neighbors);
        sigma.entry(label.clone()).or_default().push((rank as f64, r.sigma_min));
        let e = errors.entry(label).or_default();
        e.0.push((rank as f64, r.fit_error));
        e.1.push((rank as f64, r.bound));
    }
    let mut ecdf: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rep
        .ecdf
        .iter()
        .filter(|r| r.neighbors == neighbors || r.strategy == Strategy::Random)
    {
        ecdf.entry(format!("{}-{}", row.strategy.name(), row.neighbors))
            .or_default()
            .push((row.value, row.fraction));
    }

    let mut p_sigma = Plot::new("sigma_min(V) per center", "center (sorted)", "sigma_min(V)");
    for (label, pts) in sigma {
        p_sigma = p_sigma.with(Series::new(label, pts));
    }
    let mut p_ecdf = Plot::new("ECDF of sigma_min(V)/sqrt(d_i+1)", "sigma_min(V)/sqrt(d_i+1)", "fraction");
    for (label, pts) in ecdf {
        p_ecdf = p_ecdf.with(Series::new(label, pts));
    }
    let mut p_err = Plot::new("fit error and bound per center", "center (sorted by sigma_min)", "max-norm error").log_y();
    for (label, (err, bound)) in errors {
        p_err = p_err
            .with(Series::new(format!("{label} error"), err))
            .with(Series::new(format!("{label} bound"), bound));
    }
    let mut p_traj = Plot::new("lemniscate rollout", "x1 (m)", "x2 (m)");
    if let Some(first) = rep.runs.first() {
        p_traj = p_traj.with(Series::new("reference", first.rollout.reference.iter().map(|x| (x[0], x[1])).collect()));
    }
    let mut p_step = Plot::new("one-step position error", "t (s)", "error (m)").log_y();
    for run in &rep.runs {
        p_traj = p_traj.with(Series::new(run.label(), run.rollout.surrogate.iter().map(|x| (x[0], x[1])).collect()));
        let pts = run
            .rollout
            .position_errors
            .iter()
            .enumerate()
            .map(|(k, &e)| ((k + 1) as f64 * params.dt, e))
            .collect();
        p_step = p_step.with(Series::new(run.label(), pts));
    }
    [
        ("sigma_per_center.svg", p_sigma),
        ("ecdf.svg", p_ecdf),
        ("fit_errors.svg", p_err),
        ("trajectory.svg", p_traj),
        ("onestep_errors.svg", p_step),
    ]
    .into_iter()
    .map(|(name, plot)| write_text(dir, name, &plot.render()))
    .collect()
}

pub fn robot(a: &RobotArgs, ctx: &RunContext) -> Result<()> {
    let (cfg, params) = robot_setup(ctx);
    let rep = run_experiment(&cfg, &params)?;
    for path in report::write_all(&rep, &params, &ctx.output_dir)? {
        wrote(&path);
    }
    if !a.no_svg && ctx.config.robot.svg != Some(false) {
        for path in robot_plots(&rep, &params, cfg.neighbors, &ctx.output_dir)? {
            wrote(&path);
        }
    }
    for s in Strategy::ALL {
        let recs = rep.records_for(s, cfg.neighbors);
        if recs.is_empty() {
            continue;
        }
        let violations = recs.iter().filter(|r| r.fit_error > r.bound).count();
        println!(
            "{}-{}: median sigma_min {}, median fit error {}, bound violations {violations}",
            s.name(),
            cfg.neighbors,
            num(rep.median_sigma(s, cfg.neighbors)),
            num(rep.median_fit_error(s, cfg.neighbors))
        );
    }
    for run in &rep.runs {
        println!(
            "rollout {}: mean one-step position error {}, orientation error {}",
            run.label(),
            num(run.rollout.mean_position_error()),
            num(run.rollout.mean_orientation_error())
        );
    }
    if !rep.excluded.is_empty() {
        println!("excluded centers: {}", rep.excluded.len());
    }
    Ok(())
}
