//! Batch simulation, verification runs and plot emission behind the `destcon` binary.
//!
//! Exit codes: 0 success, 1 a verification report failed, 2 configuration or
//! input error.

pub mod config;
pub mod records;
pub mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::constraint::DestinationConstraint;
use crate::dynamics::cv_transition;
use crate::error::{Error, Result};
use crate::reconstruct::{rollout_unconstrained, trajectory_rng, NoiseSampler, ReconstructedModel, Trajectory};
use crate::verify::{
    check_prop1, check_prop3, check_prop4, check_schur_gap, check_weight_optimality, compare_traces, merge_reports,
    trace_report, VerificationReport,
};
use crate::weights::{optimal_weight, WeightMode};

pub use config::{NoiseSpec, Preset, Prop4Constraint, ScenarioConfig, VerifySettings};
pub use records::{read_csv, write_csv, TrajectoryRow, CSV_HEADER};

/// Tolerance of the Loewner and closed-form checks.
pub const VERIFY_TOL: f64 = 1e-8;
/// Tolerance of the Schur-gap identity.
pub const SCHUR_TOL: f64 = 1e-9;
/// Relative terminal tolerance reported for constrained trajectories.
pub const TERMINAL_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "destcon", version, about = "Destination-constrained trajectory models under bounded ellipsoidal noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Roll out trajectory ensembles and write them as CSV.
    Simulate(RunArgs),
    /// Run the verification checks and write one JSON report per check.
    Verify(VerifyArgs),
    /// Render CSV trajectories as SVG charts.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file with dotted `section.key = value` entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scenario; a config file is applied on top of it.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Subset of checks to run, e.g. `1,3`.
    #[arg(long, value_delimiter = ',')]
    pub props: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Trajectory CSV files; when absent the scenario is simulated first.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = self.preset.map(ScenarioConfig::preset).unwrap_or_default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_toml(&text)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let out = run_simulate(&cfg, &args.out)?;
            println!("wrote {} ({} rows)", out.csv_path.display(), out.rows.len());
            let constrained: Vec<_> = out.summaries.iter().filter(|s| s.kind == "constrained").collect();
            let hits = constrained.iter().filter(|s| s.meets_destination).count();
            let worst = constrained.iter().map(|s| s.terminal_residual).fold(0.0, f64::max);
            println!("constrained trajectories on destination: {hits}/{} (worst relative residual {worst:.3e})", constrained.len());
            Ok(0)
        }
        Command::Verify(args) => {
            let mut cfg = args.run.resolve()?;
            if let Some(props) = args.props {
                cfg.verify.propositions = props;
                cfg.validate()?;
            }
            let reports = run_verify(&cfg, &args.run.out)?;
            let mut all_pass = true;
            for (path, r) in &reports {
                all_pass &= r.pass;
                println!(
                    "{} {} worst margin {:.3e} (tol {:.0e}) -> {}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.proposition,
                    r.worst_margin(),
                    r.tolerance,
                    path.display()
                );
            }
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::Plot(args) => {
            let inputs = if args.inputs.is_empty() {
                let cfg = args.run.resolve()?;
                vec![run_simulate(&cfg, &args.run.out)?.csv_path]
            } else {
                args.inputs
            };
            for path in emit_plot(&inputs, &args.run.out)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
    }
}

/// Terminal summary of one rolled-out trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub trajectory_id: u64,
    pub kind: &'static str,
    pub origin_index: usize,
    pub destination_index: usize,
    /// `max_i |(D x_N - d)_i| / (1 + |d_i|)`.
    pub terminal_residual: f64,
    pub meets_destination: bool,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub csv_path: PathBuf,
    pub rows: Vec<TrajectoryRow>,
    pub summaries: Vec<TrajectorySummary>,
}

const KIND_ORDER: [&str; 3] = ["constrained", "identity", "relaxed"];

fn terminal_residual(dc: &DestinationConstraint, traj: &Trajectory) -> f64 {
    let r = dc.residual(traj.terminal());
    r.iter()
        .zip(dc.target().iter())
        .map(|(ri, di)| ri.abs() / (1.0 + di.abs()))
        .fold(0.0, f64::max)
}

/// Rolls out every requested trajectory and returns CSV rows in a fixed order:
/// by kind (constrained, identity, relaxed), then trajectory id, then step.
pub fn simulate(cfg: &ScenarioConfig) -> Result<(Vec<TrajectoryRow>, Vec<TrajectorySummary>)> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let sampler = NoiseSampler::new(&sys)?;
    let constraints: Vec<_> = cfg.destinations.iter().map(|&d| cfg.constraint(d)).collect();
    let models = constraints
        .iter()
        .map(|dc| ReconstructedModel::build(&sys, dc, &cfg.weight_mode))
        .collect::<Result<Vec<_>>>()?;
    let identity_models = if cfg.compare_identity {
        constraints
            .iter()
            .map(|dc| ReconstructedModel::build(&sys, dc, &WeightMode::Identity))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let per_group = cfg.trajectories as u64;
    let groups = cfg.origins.len() * cfg.destinations.len();
    let ids: Vec<u64> = (0..groups as u64 * per_group).collect();
    let results = ids
        .par_iter()
        .map(|&id| {
            let group = (id / per_group) as usize;
            let (oi, di) = (group / cfg.destinations.len(), group % cfg.destinations.len());
            let x0 = &cfg.origins[oi];
            let draw = sampler.draw(&mut trajectory_rng(cfg.seed, id), cfg.radial_mode);
            let mut out = vec![("constrained", models[di].rollout(x0, &draw)?)];
            if cfg.compare_identity {
                out.push(("identity", identity_models[di].rollout(x0, &draw)?));
            }
            if cfg.relaxed {
                out.push(("relaxed", rollout_unconstrained(&sys, x0, &draw)?));
            }
            Ok((id, oi, di, out))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for kind in KIND_ORDER {
        for (id, oi, di, trajs) in &results {
            for (_, traj) in trajs.iter().filter(|(k, _)| *k == kind) {
                let residual = terminal_residual(&constraints[*di], traj);
                summaries.push(TrajectorySummary {
                    trajectory_id: *id,
                    kind,
                    origin_index: *oi,
                    destination_index: *di,
                    terminal_residual: residual,
                    meets_destination: residual <= TERMINAL_TOL,
                });
                for (k, x) in traj.states.iter().enumerate() {
                    rows.push(TrajectoryRow {
                        trajectory_id: *id,
                        kind: kind.to_string(),
                        k,
                        t_seconds: k as f64 * cfg.dt,
                        x_m: x[0],
                        vx_mps: x[1],
                        y_m: x[2],
                        vy_mps: x[3],
                    });
                }
            }
        }
    }
    Ok((rows, summaries))
}

/// [`simulate`] and write `<name>.csv` under `out_dir`.
pub fn run_simulate(cfg: &ScenarioConfig, out_dir: &Path) -> Result<SimulationOutput> {
    let (rows, summaries) = simulate(cfg)?;
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{}.csv", cfg.name));
    let file = fs::File::create(&csv_path)?;
    write_csv(std::io::BufWriter::new(file), &rows)?;
    Ok(SimulationOutput {
        csv_path,
        rows,
        summaries,
    })
}

fn check_rng(seed: u64, check: u64) -> ChaCha20Rng {
    // streams above 2^32 never collide with trajectory ids in practice
    trajectory_rng(seed, (1 << 32) + check)
}

/// Runs the configured checks on the scenario; one report per check.
pub fn verify_scenario(cfg: &ScenarioConfig) -> Result<Vec<(String, VerificationReport)>> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let dc = cfg.constraint(cfg.destinations[0]);
    let settings = &cfg.verify;
    let mut props = settings.propositions.clone();
    props.sort_unstable();
    props.dedup();

    // reject bad shrinkage inputs before spending time on the other checks
    let prop4_inputs = if props.contains(&4) {
        let q = cfg.noise_block().ok_or_else(|| {
            Error::Precondition("monotone shrinkage needs block-diagonal noise (noise.q_block), not noise.q_w0".into())
        })?;
        let d = match settings.prop4_constraint {
            Prop4Constraint::FullState => DMatrix::identity(4, 4),
            Prop4Constraint::Scenario => dc.matrix().clone(),
        };
        if !d.is_square() {
            return Err(Error::Precondition(format!(
                "monotone shrinkage needs a square invertible constraint matrix; the scenario constraint is {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        Some((q, d))
    } else {
        None
    };

    let mut reports = Vec::new();
    for p in props {
        match p {
            1 => {
                let mut rng = check_rng(cfg.seed, 1);
                let parts = [(2, 1), (4, 3), (4, 4)]
                    .into_iter()
                    .map(|(n, m)| check_prop1(&mut rng, n, m, settings.prop1_instances, VERIFY_TOL))
                    .collect::<Result<Vec<_>>>()?;
                let scenario = format!(
                    "closed-form projection vs KKT oracle, {} random instances each for (n, m) in (2,1), (4,3), (4,4)",
                    settings.prop1_instances
                );
                reports.push(("prop1".into(), merge_reports("1", scenario, VERIFY_TOL, parts)));
            }
            2 => {
                let mut rng = check_rng(cfg.seed, 2);
                let mut parts = Vec::with_capacity(sys.horizon());
                for k in 1..=sys.horizon() {
                    let mut candidate = optimal_weight(&sys, k)?;
                    candidate.w2 *= settings.w2_scale;
                    parts.push(check_weight_optimality(&sys, &dc, k, &candidate, settings.competitors, &mut rng, VERIFY_TOL)?);
                }
                let scenario = format!(
                    "candidate weight (W2 scaled by {}) vs optimal and {} random competitors at every step, N = {}, theta = {} deg",
                    settings.w2_scale,
                    settings.competitors,
                    sys.horizon(),
                    cfg.theta_deg
                );
                reports.push(("prop2".into(), merge_reports("2", scenario, VERIFY_TOL, parts)));
            }
            3 => {
                reports.push(("prop3".into(), check_prop3(&sys, &dc, VERIFY_TOL)?));
                reports.push(("prop3_schur_gap".into(), check_schur_gap(&sys, &dc, SCHUR_TOL)?));
            }
            4 => {
                let (q, d) = prop4_inputs.clone().expect("checked above");
                reports.push(("prop4".into(), check_prop4(&cv_transition(cfg.dt), &q, &d, sys.horizon(), VERIFY_TOL)?));
            }
            other => return Err(Error::Config(format!("unknown proposition {other}"))),
        }
    }
    if cfg.compare_identity {
        let pairs = compare_traces(&sys, &dc, &WeightMode::Optimal, &WeightMode::Identity)?;
        reports.push((
            "trace".into(),
            trace_report(&pairs, "trace of the optimal cover vs identity weights at every step", VERIFY_TOL),
        ));
    }
    Ok(reports)
}

/// [`verify_scenario`] and write `<check>.json` files under `out_dir`.
pub fn run_verify(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Vec<(PathBuf, VerificationReport)>> {
    let reports = verify_scenario(cfg)?;
    fs::create_dir_all(out_dir)?;
    reports
        .into_iter()
        .map(|(name, r)| {
            let path = out_dir.join(format!("{name}.json"));
            fs::write(&path, r.to_json()? + "\n")?;
            Ok((path, r))
        })
        .collect()
}

/// Chart data grouped from CSV rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChartSeries {
    pub positions: Vec<svg::Series>,
    pub vx: Vec<svg::Series>,
    pub vy: Vec<svg::Series>,
    /// Distinct terminal points of constrained trajectories.
    pub destinations: Vec<(f64, f64)>,
}

pub fn chart_series(rows: &[TrajectoryRow]) -> ChartSeries {
    let rank = |kind: &str| KIND_ORDER.iter().position(|k| *k == kind).unwrap_or(KIND_ORDER.len());
    let mut groups: BTreeMap<(usize, String, u64), Vec<&TrajectoryRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((rank(&r.kind), r.kind.clone(), r.trajectory_id)).or_default().push(r);
    }
    let mut pos = Vec::new();
    let mut vx = Vec::new();
    let mut vy = Vec::new();
    let mut markers: Vec<(f64, f64)> = Vec::new();
    for ((_, kind, id), mut g) in groups {
        g.sort_by_key(|r| r.k);
        let series = |f: &dyn Fn(&TrajectoryRow) -> (f64, f64)| svg::Series {
            id,
            kind: kind.clone(),
            points: g.iter().map(|r| f(r)).collect(),
        };
        pos.push(series(&|r| (r.x_m, r.y_m)));
        vx.push(series(&|r| (r.t_seconds, r.vx_mps)));
        vy.push(series(&|r| (r.t_seconds, r.vy_mps)));
        if kind == "constrained" {
            let last = g.last().expect("non-empty group");
            let p = (last.x_m, last.y_m);
            if !markers.iter().any(|m| (m.0 - p.0).abs() <= 1e-3 * (1.0 + p.0.abs()) && (m.1 - p.1).abs() <= 1e-3 * (1.0 + p.1.abs())) {
                markers.push(p);
            }
        }
    }
    ChartSeries {
        positions: pos,
        vx,
        vy,
        destinations: markers,
    }
}

/// Writes `<stem>_positions.svg`, `<stem>_vx.svg` and `<stem>_vy.svg` for each CSV.
pub fn emit_plot(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for input in inputs {
        let file = fs::File::open(input).map_err(|e| Error::Config(format!("cannot open {}: {e}", input.display())))?;
        let rows = read_csv(std::io::BufReader::new(file))?;
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectories");
        let c = chart_series(&rows);
        let charts = [
            ("positions", svg::render(&format!("{stem}: positions"), "x (m)", "y (m)", &c.positions, &c.destinations)),
            ("vx", svg::render(&format!("{stem}: eastward velocity"), "t (s)", "vx (m/s)", &c.vx, &[])),
            ("vy", svg::render(&format!("{stem}: northward velocity"), "t (s)", "vy (m/s)", &c.vy, &[])),
        ];
        for (suffix, body) in charts {
            let path = out_dir.join(format!("{stem}_{suffix}.svg"));
            fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}
