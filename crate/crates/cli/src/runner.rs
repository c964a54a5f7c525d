//! Executes one experiment and writes its artifacts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use attractor_core::compactness::{
    attraction_profile, damping_gap_constant, forcing_difference_check, kernel_section_pullback, omega_limit_cloud,
    sample_pairs, verify_master_bound, Cloud, MIN_INTERVALS,
};
use attractor_core::dynamics::{audit_damping, audit_nonlinearity, fit_energy_lower_bound, AuditRange};
use attractor_core::energy::{absorbing_estimate, attach_energy, ball_states, dissipation_monitor, BallSpec, DissipationParams};
use attractor_core::process::evolve;
use attractor_core::report::{self, Header};
use attractor_core::{State, System, Time};

use crate::config::{Experiment, ExperimentConfig};
use crate::manifest::{sha256_hex, write_manifest};
use crate::plot::{self, PlotKind};
use crate::Failure;

/// Files written by a run (relative to `dir`, manifest excluded) plus a
/// short human-readable summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub summary: String,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    header: Header,
    files: Vec<String>,
    summary: String,
}

impl Ctx<'_> {
    fn numerical(&self, error: attractor_core::Error) -> Failure {
        Failure::Numerical {
            provenance: format!(
                "experiment={}, seed={}, {}",
                self.cfg.experiment.name(),
                self.seed_label(),
                self.header
                    .entries()
                    .iter()
                    .find(|(k, _)| k == "config_sha256")
                    .map(|(_, v)| format!("config_sha256={v}"))
                    .unwrap_or_default()
            ),
            error,
        }
    }

    fn seed_label(&self) -> String {
        self.cfg.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn plot(&mut self, csv: &str, kind: PlotKind) -> Result<(), Failure> {
        if !self.cfg.plots {
            return Ok(());
        }
        let text = fs::read_to_string(self.dir.join(csv))?;
        let svg = plot::render(&text, kind)?;
        let name = format!("{}.svg", csv.trim_end_matches(".csv"));
        self.write_text(&name, &svg)
    }

    fn say(&mut self, line: impl AsRef<str>) {
        self.summary.push_str(line.as_ref());
        self.summary.push('\n');
    }
}

fn io(e: attractor_core::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn time(field: &str, x: f64) -> Result<Time, Failure> {
    Time::try_from_f64(x).ok_or_else(|| Failure::Schema {
        field: field.into(),
        message: format!("{x} is not a representable time"),
    })
}

fn times(field: &str, xs: &[f64]) -> Result<Vec<Time>, Failure> {
    xs.iter().map(|&x| time(field, x)).collect()
}

/// Runs the experiment described by `config_text` into `out_dir`.
pub fn run_config(config_text: &str, out_dir: &Path) -> Result<RunOutcome, Failure> {
    let cfg = crate::config::parse(config_text)?;
    run_parsed(&cfg, config_text, out_dir)
}

/// Audits the damping and nonlinearity of any config, whatever its
/// experiment kind.
pub fn audit_config(config_text: &str, out_dir: &Path) -> Result<RunOutcome, Failure> {
    let mut cfg = crate::config::parse(config_text)?;
    if !matches!(cfg.experiment, Experiment::Audit { .. }) {
        cfg.experiment = Experiment::Audit { range: None };
    }
    run_parsed(&cfg, config_text, out_dir)
}

fn run_parsed(cfg: &ExperimentConfig, config_text: &str, out_dir: &Path) -> Result<RunOutcome, Failure> {
    let system = cfg.system()?;
    fs::create_dir_all(out_dir)?;

    let sigma = cfg.symbol(system.modes())?;
    let mut header = Header::new()
        .with("tool", format!("attractor-lab {}", env!("CARGO_PKG_VERSION")))
        .with(
            "modules",
            format!("attractor-core {}; attractor-lab {}", attractor_core::VERSION, env!("CARGO_PKG_VERSION")),
        )
        .with("config_sha256", sha256_hex(config_text.as_bytes()))
        .with("seed", cfg.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into()))
        .with("experiment", cfg.experiment.name())
        .with("basis", system.basis.descriptor())
        .with("damping", &system.damping.name)
        .with("nonlinearity", &system.nonlinearity.name)
        .with("forcing", sigma.descriptor());
    header.push("solver", format!("{:?} dt={} stride={}", cfg.solver.scheme, cfg.solver.dt, cfg.solver.record_stride));

    let mut ctx = Ctx {
        cfg,
        dir: out_dir.to_path_buf(),
        header,
        files: Vec::new(),
        summary: String::new(),
    };
    ctx.write_text("config.toml", config_text)?;

    match &cfg.experiment {
        Experiment::Simulate { horizon, epsilon, with_modes, .. } => {
            simulate(&mut ctx, &system, &sigma, *horizon, *epsilon, *with_modes)?
        }
        Experiment::Audit { range } => audit(&mut ctx, &system, range.unwrap_or_default())?,
        Experiment::Absorbing { radius, count, horizon, uniformity_factor } => {
            absorbing(&mut ctx, &system, &sigma, *radius, *count, *horizon, *uniformity_factor)?;
        }
        Experiment::Compactness { radius, count, absorb_horizon, delta, horizons, pairs } => {
            compactness(&mut ctx, &system, &sigma, *radius, *count, *absorb_horizon, *delta, horizons, *pairs)?
        }
        Experiment::Attractor { radius, count, sample_times, checkpoints } => {
            attractor(&mut ctx, &system, &sigma, *radius, *count, sample_times, checkpoints)?
        }
        Experiment::Pullback { s, horizons, radius, count } => {
            pullback(&mut ctx, &system, &sigma, *s, horizons, *radius, *count)?
        }
    }

    write_manifest(&ctx.dir, &ctx.files)?;
    Ok(RunOutcome {
        dir: ctx.dir,
        files: ctx.files,
        summary: ctx.summary,
    })
}

fn simulate(
    ctx: &mut Ctx,
    system: &System,
    sigma: &attractor_core::Symbol,
    horizon: f64,
    eps: f64,
    with_modes: bool,
) -> Result<(), Failure> {
    let y = ctx.cfg.initial_state(system.modes())?;
    let t_end = time("experiment.horizon", horizon)?;
    let mut traj = evolve(sigma, Time::ZERO, t_end, &y, system, &ctx.cfg.solver).map_err(|e| ctx.numerical(e))?;
    attach_energy(&mut traj, sigma, eps, system).map_err(|e| ctx.numerical(e))?;
    let header = ctx.header.clone().with("epsilon", eps);

    let w = ctx.create("trajectory.csv")?;
    report::write_trajectory(w, &header, &traj, system, with_modes).map_err(io)?;
    let records = traj.energy.clone().unwrap_or_default();
    let w = ctx.create("energy.csv")?;
    report::write_energy(w, &header, &records).map_err(io)?;

    let mon = dissipation_monitor(
        &traj,
        DissipationParams {
            eps,
            ..DissipationParams::default()
        },
    )
    .map_err(|e| ctx.numerical(e))?;
    ctx.say(format!("samples: {}", traj.len()));
    ctx.say(format!("final x_norm: {}", traj.last().x_norm(&system.basis)));
    ctx.say(format!("relative E0 drift: {:e}", mon.relative_drift));
    ctx.say(format!("largest E0 increase per sample: {:e}", mon.max_e0_increase));
    ctx.say(format!("energy balance residual (relative): {:e}", mon.relative_balance_residual));
    ctx.plot("energy.csv", PlotKind::Energy)
}

fn audit(ctx: &mut Ctx, system: &System, range: AuditRange) -> Result<(), Failure> {
    let schema = |e: attractor_core::Error| Failure::Schema {
        field: "experiment.range".into(),
        message: e.to_string(),
    };
    let h = audit_damping(&system.damping, range).map_err(schema)?;
    let mut f = audit_nonlinearity(&system.nonlinearity, system.basis.lambda1(), range).map_err(schema)?;
    if let Ok((c0, c1)) =
        fit_energy_lower_bound(&system.nonlinearity, system.basis.lambda1(), system.basis.domain_measure(), range)
    {
        f.constants.push(("energy_lower_c0", c0));
        f.constants.push(("energy_lower_c1", c1));
    }
    let w = ctx.create("audit.csv")?;
    report::write_audit(w, &ctx.header, &[h.clone(), f.clone()]).map_err(io)?;
    for r in [&h, &f] {
        for c in &r.checks {
            let status = if c.passed { "PASSED" } else { "FAILED" };
            ctx.say(format!("{} {}: {status} (margin {:e})", r.subject, c.id, c.margin));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn absorbing(
    ctx: &mut Ctx,
    system: &System,
    sigma: &attractor_core::Symbol,
    radius: f64,
    count: usize,
    horizon: f64,
    factor: f64,
) -> Result<f64, Failure> {
    let hull = ctx.cfg.hull(sigma)?;
    let ball = BallSpec {
        center: State::zero(system.modes()),
        radius,
        count,
        seed: ctx.seed(),
    };
    let t_end = time("experiment.horizon", horizon)?;
    let rep = absorbing_estimate(&ball, &hull, t_end, system, &ctx.cfg.solver).map_err(|e| ctx.numerical(e))?;
    let w = ctx.create("absorb.csv")?;
    report::write_absorb(w, &ctx.header, &rep).map_err(io)?;
    let mut summary = report::absorb_summary(&rep);
    summary.push_str(&format!("uniform within factor {factor}: {}\n", rep.uniform_within(factor)));
    ctx.write_text("absorb_summary.txt", &summary)?;
    ctx.say(summary.trim_end());
    Ok(rep.rho)
}

#[allow(clippy::too_many_arguments)]
fn compactness(
    ctx: &mut Ctx,
    system: &System,
    sigma: &attractor_core::Symbol,
    radius: f64,
    count: usize,
    absorb_horizon: f64,
    delta: f64,
    horizons: &[f64],
    pairs: usize,
) -> Result<(), Failure> {
    let spacing = ctx.cfg.solver.dt * ctx.cfg.solver.record_stride as f64;
    if spacing * MIN_INTERVALS as f64 > horizons[0] * (1.0 + 1e-9) {
        return Err(Failure::Schema {
            field: "solver.record_stride".into(),
            message: format!(
                "sample spacing {spacing} is too coarse: need at most T/{MIN_INTERVALS} = {}",
                horizons[0] / MIN_INTERVALS as f64
            ),
        });
    }
    let rho = absorbing(ctx, system, sigma, radius, count, absorb_horizon, f64::INFINITY)?;
    let hull = ctx.cfg.hull(sigma)?;
    let b0 = ball_states(
        &BallSpec {
            center: State::zero(system.modes()),
            radius: rho,
            count: pairs,
            seed: ctx.seed().wrapping_add(1),
        },
        &system.basis,
    )
    .map_err(|e| ctx.numerical(e))?;
    let ts = times("experiment.horizons", horizons)?;
    let t_max = *ts.last().expect("validated non-empty");
    let runs = sample_pairs(&b0, &hull, pairs, ctx.seed().wrapping_add(2), t_max, system, &ctx.cfg.solver)
        .map_err(|e| ctx.numerical(e))?;

    // velocity range actually visited, for the damping-gap constant
    let mut v_max: f64 = 1.0;
    for p in &runs {
        for s in p.first.states.iter().chain(&p.second.states) {
            let v = system.basis.to_physical(&s.v).map_err(|e| ctx.numerical(e))?;
            v_max = v.iter().fold(v_max, |m, x| m.max(x.abs()));
        }
    }
    let c_delta = damping_gap_constant(&system.damping, delta, v_max, ctx.seed()).map_err(|e| ctx.numerical(e))?;
    let summary = verify_master_bound(&runs, delta, &ts, c_delta, system).map_err(|e| ctx.numerical(e))?;

    let header = ctx
        .header
        .clone()
        .with("absorbing_radius", rho)
        .with("velocity_range", v_max)
        .with("C_delta", c_delta);
    let w = ctx.create("compactness.csv")?;
    report::write_compactness(w, &header, &summary.reports).map_err(io)?;

    let mut rows = Vec::new();
    for (i, p) in runs.iter().enumerate() {
        for &t in &ts {
            let r = forcing_difference_check(p, t, system).map_err(|e| ctx.numerical(e))?;
            rows.push(vec![
                i.to_string(),
                r.t.to_string(),
                r.lhs.to_string(),
                r.endpoint_term.to_string(),
                r.mean_term.to_string(),
                r.derivative_term.to_string(),
                r.m.to_string(),
                r.slack.to_string(),
            ]);
        }
    }
    let min_slack = rows.iter().map(|r| r[7].parse::<f64>().unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);
    let columns: Vec<String> = ["pair", "T", "lhs", "endpoint_term", "mean_term", "derivative_term", "M", "slack"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let w = ctx.create("forcing_difference.csv")?;
    report::write_rows(w, &header, &columns, rows.into_iter()).map_err(io)?;

    let mut text = format!(
        "pairs: {pairs}\nhorizons: {horizons:?}\ndelta: {delta}\nC_delta: {c_delta}\nabsorbing radius: {rho}\n\
         master bound pass fraction: {}\nforcing-difference min slack: {min_slack}\n",
        summary.pass_fraction
    );
    for (eps, t) in &summary.epsilon_table {
        let t = t.map(|t| t.to_string()).unwrap_or_else(|| "none".into());
        text.push_str(&format!("smallest T with E_w(T) <= {eps} + (phi + C_M)/T on all pairs: {t}\n"));
    }
    ctx.write_text("compactness_summary.txt", &text)?;
    ctx.say(text.trim_end());
    Ok(())
}

fn attractor(
    ctx: &mut Ctx,
    system: &System,
    sigma: &attractor_core::Symbol,
    radius: f64,
    count: usize,
    sample_times: &[f64],
    checkpoints: &[f64],
) -> Result<(), Failure> {
    let hull = ctx.cfg.hull(sigma)?;
    let samples = ball_states(
        &BallSpec {
            center: State::zero(system.modes()),
            radius,
            count,
            seed: ctx.seed(),
        },
        &system.basis,
    )
    .map_err(|e| ctx.numerical(e))?;
    let st = times("experiment.sample_times", sample_times)?;
    let cp = times("experiment.checkpoints", checkpoints)?;
    let cloud = omega_limit_cloud(&samples, &hull, Time::ZERO, &st, system, &ctx.cfg.solver)
        .map_err(|e| ctx.numerical(e))?;
    let header = ctx.header.clone().with("cloud", &cloud.provenance);
    let w = ctx.create("cloud.csv")?;
    report::write_cloud(w, &header, &cloud, system).map_err(io)?;

    let origin = Cloud::origin(system.modes());
    let profile =
        attraction_profile(&samples, &hull, &cp, &origin, system, &ctx.cfg.solver).map_err(|e| ctx.numerical(e))?;
    let series: Vec<(String, Vec<(f64, f64)>)> = profile
        .iter()
        .enumerate()
        .map(|(j, d)| {
            (
                format!("symbol shift={}", hull.shifts[j]),
                checkpoints.iter().copied().zip(d.iter().copied()).collect(),
            )
        })
        .collect();
    let w = ctx.create("semidistance.csv")?;
    report::write_semidistance(w, &ctx.header.clone().with("target", "origin"), &series).map_err(io)?;

    ctx.say(format!("cloud points: {}", cloud.len()));
    ctx.say(format!("cloud max x_norm: {:e}", cloud.max_x_norm(&system.basis)));
    let monotone = profile.iter().all(|d| d.windows(2).all(|w| w[1] <= w[0]));
    ctx.say(format!("semidistance to origin non-increasing for every symbol: {monotone}"));
    ctx.plot("cloud.csv", PlotKind::Cloud)?;
    ctx.plot("semidistance.csv", PlotKind::Semidistance)
}

fn pullback(
    ctx: &mut Ctx,
    system: &System,
    sigma: &attractor_core::Symbol,
    s: f64,
    horizons: &[f64],
    radius: f64,
    count: usize,
) -> Result<(), Failure> {
    let samples = ball_states(
        &BallSpec {
            center: State::zero(system.modes()),
            radius,
            count,
            seed: ctx.seed(),
        },
        &system.basis,
    )
    .map_err(|e| ctx.numerical(e))?;
    let hs = times("experiment.horizons", horizons)?;
    let s_t = time("experiment.s", s)?;
    let rep = kernel_section_pullback(sigma, s_t, &hs, &samples, system, &ctx.cfg.solver).map_err(|e| ctx.numerical(e))?;
    for (cloud, h) in rep.clouds.iter().zip(horizons) {
        let header = ctx.header.clone().with("cloud", &cloud.provenance);
        let w = ctx.create(&format!("pullback_T{h}.csv"))?;
        report::write_cloud(w, &header, cloud, system).map_err(io)?;
    }
    let w = ctx.create("semidistance.csv")?;
    report::write_semidistance(w, &ctx.header, &[report::pullback_series(&rep)]).map_err(io)?;
    ctx.say(format!("successive semidistances: {:?}", rep.successive));
    ctx.plot("semidistance.csv", PlotKind::Semidistance)
}
