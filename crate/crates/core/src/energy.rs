//! Energy functionals and dissipativity diagnostics.
//!
//! ```text
//! E_ε(t) = ½‖∇u‖² + ½|u_t|² + ∫_Ω F(u) + ε⟨u_t, u⟩
//! ```
//!
//! The dissipation monitor checks the discrete energy balance and fits the
//! constant `C` in `E_ε' ≤ -γε E_ε + (Nε√E_ε - ½) w + C`, where
//! `w = 1 + ⟨h(u_t), u_t⟩`. The absorbing-set estimator runs an ensemble of
//! ball states against a hull sample and reports a radius `ρ`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::NonlinearitySpec;
use crate::error::{Error, Result};
use crate::forcing::{HullSample, Symbol};
use crate::process::{evolve, SolverConfig, State, System, Trajectory};
use crate::spectral::Basis;
use crate::time::Time;

/// Per-sample energy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub time: f64,
    pub e0: f64,
    pub e_eps: f64,
    /// `w(t) = 1 + ⟨h(u_t), u_t⟩`.
    pub damping_power: f64,
    /// `⟨g(t), u_t⟩`.
    pub forcing_power: f64,
}

fn potential(state: &State, nonlin: &NonlinearitySpec, basis: &Basis) -> Result<f64> {
    let grid = basis.to_physical(&state.u)?;
    let big_f = crate::dynamics::apply_pointwise(|s| nonlin.big_f(s), &grid)?;
    Ok(basis.integrate(&big_f))
}

/// `E₀ = ½‖∇u‖² + ½|u_t|² + ∫F(u)`.
pub fn energy0(state: &State, nonlin: &NonlinearitySpec, basis: &Basis) -> Result<f64> {
    Ok(0.5 * state.x_norm_sq(basis) + potential(state, nonlin, basis)?)
}

/// `E_ε = E₀ + ε⟨u_t, u⟩`.
pub fn energy_eps(state: &State, eps: f64, nonlin: &NonlinearitySpec, basis: &Basis) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("ε must be non-negative, got {eps}")));
    }
    Ok(energy0(state, nonlin, basis)? + eps * l2_inner(&state.v, &state.u))
}

/// Modal L² inner product (Parseval).
pub(crate) fn l2_inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `⟨h(v), v⟩` by collocation.
pub fn damping_work(v: &[f64], system: &System) -> Result<f64> {
    let grid = system.basis.to_physical(v)?;
    let hv = crate::dynamics::apply_pointwise(|s| system.damping.h(s) * s, &grid)?;
    Ok(system.basis.integrate(&hv))
}

/// `ε = min(0.1, 1/(4N√E_max))`, the smallness choice used for `E_ε`.
pub fn default_epsilon(n_const: f64, e_max: f64) -> f64 {
    let denom = 4.0 * n_const * e_max.max(0.0).sqrt();
    if denom > 0.0 {
        (1.0 / denom).min(0.1)
    } else {
        0.1
    }
}

pub fn energy_record(state: &State, sigma: &Symbol, eps: f64, system: &System) -> Result<EnergyRecord> {
    let e0 = energy0(state, &system.nonlinearity, &system.basis)?;
    Ok(EnergyRecord {
        time: state.time.to_f64(),
        e0,
        e_eps: e0 + eps * l2_inner(&state.v, &state.u),
        damping_power: 1.0 + damping_work(&state.v, system)?,
        forcing_power: sigma.amplitude_at(state.time) * l2_inner(&sigma.profile, &state.v),
    })
}

/// Fills `traj.energy` with one record per stored sample.
pub fn attach_energy(traj: &mut Trajectory, sigma: &Symbol, eps: f64, system: &System) -> Result<()> {
    let records = traj
        .states
        .iter()
        .map(|s| energy_record(s, sigma, eps, system))
        .collect::<Result<Vec<_>>>()?;
    traj.energy = Some(records);
    Ok(())
}

/// Constants of the dissipation inequality; `C` is fitted, `γ`, `N` and `ε`
/// are inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationParams {
    pub eps: f64,
    pub gamma: f64,
    pub n_const: f64,
}

impl Default for DissipationParams {
    fn default() -> Self {
        DissipationParams {
            eps: 0.05,
            gamma: 0.5,
            n_const: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipationReport {
    pub params: DissipationParams,
    pub steps: usize,
    /// Largest `|ΔE₀ + ∫(⟨h(v),v⟩ - ⟨g,v⟩)|` over one step (trapezoid in time).
    pub max_balance_residual: f64,
    /// The same, relative to `max(1, max |E₀|)`.
    pub relative_balance_residual: f64,
    /// Largest single-step increase of `E₀`.
    pub max_e0_increase: f64,
    /// Steps where `E₀` grew by more than `1e-10`.
    pub monotonicity_violations: Vec<usize>,
    /// Relative drift `max |E₀(t) - E₀(0)| / |E₀(0)|`.
    pub relative_drift: f64,
    /// Smallest `C` satisfying the inequality at 99% of steps.
    pub fitted_c: f64,
    /// Steps that need more than `fitted_c`.
    pub violation_steps: Vec<usize>,
}

/// Tolerance for a single-step increase of `E₀` under monotone damping.
pub const MONOTONE_TOL: f64 = 1e-10;

/// Checks the discrete energy balance and fits `C` in the dissipation
/// inequality from the trajectory's energy records.
pub fn dissipation_monitor(traj: &Trajectory, params: DissipationParams) -> Result<DissipationReport> {
    let rec = traj.energy.as_ref().ok_or(Error::MissingEnergyRecords)?;
    if rec.len() < 2 {
        return Err(Error::InsufficientSampling { have: rec.len(), need: 2 });
    }
    let scale = rec.iter().fold(1.0f64, |m, r| m.max(r.e0.abs()));
    let e_start = rec[0].e0;

    let mut max_balance: f64 = 0.0;
    let mut max_increase = f64::NEG_INFINITY;
    let mut monotonicity_violations = Vec::new();
    let mut needed_c = Vec::with_capacity(rec.len() - 1);
    let mut drift: f64 = 0.0;
    for (k, pair) in rec.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.time - a.time;
        let de = b.e0 - a.e0;
        let flux = 0.5 * dt * ((a.damping_power - 1.0) + (b.damping_power - 1.0))
            - 0.5 * dt * (a.forcing_power + b.forcing_power);
        max_balance = max_balance.max((de + flux).abs());
        max_increase = max_increase.max(de);
        if de > MONOTONE_TOL {
            monotonicity_violations.push(k);
        }
        drift = drift.max((b.e0 - e_start).abs());

        let quotient = (b.e_eps - a.e_eps) / dt;
        let e_mid = 0.5 * (a.e_eps + b.e_eps);
        let w_mid = 0.5 * (a.damping_power + b.damping_power);
        let bound = -params.gamma * params.eps * e_mid
            + (params.n_const * params.eps * e_mid.max(0.0).sqrt() - 0.5) * w_mid;
        needed_c.push(quotient - bound);
    }

    let mut sorted = needed_c.clone();
    sorted.sort_by(f64::total_cmp);
    let idx = ((0.99 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    let fitted_c = sorted[idx].max(0.0);
    let violation_steps = needed_c
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > fitted_c)
        .map(|(k, _)| k)
        .collect();

    Ok(DissipationReport {
        params,
        steps: rec.len() - 1,
        max_balance_residual: max_balance,
        relative_balance_residual: max_balance / scale,
        max_e0_increase: max_increase,
        monotonicity_violations,
        relative_drift: if e_start != 0.0 { drift / e_start.abs() } else { drift },
        fitted_c,
        violation_steps,
    })
}

/// Exponential rate `r` in `E₀ ~ e^{-rt}` by least squares on `ln E₀` over
/// records with `time ≥ t_start`. Non-positive energies are skipped.
pub fn fit_decay_rate(records: &[EnergyRecord], t_start: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.time >= t_start && r.e0 > 0.0)
        .map(|r| (r.time, r.e0.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientSampling { have: pts.len(), need: 3 });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    Ok(-sxy / sxx)
}

/// Smallest value of `E₀ - (c0/2)(‖∇u‖² + |u_t|²) + c1` along the trajectory;
/// non-negative when the lower bound holds everywhere.
pub fn lower_bound_slack(traj: &Trajectory, system: &System, c0: f64, c1: f64) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for s in &traj.states {
        let e0 = energy0(s, &system.nonlinearity, &system.basis)?;
        worst = worst.min(e0 - 0.5 * c0 * s.x_norm_sq(&system.basis) + c1);
    }
    Ok(worst)
}

/// Seeded sample of initial states in the X-ball around `center`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallSpec {
    pub center: State,
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
}

/// Draws `count` states with `‖y - center‖_X ≤ radius`.
///
/// Directions are Gaussian with mode-`k` coefficients scaled by `1/k` (in
/// the X-weighted coordinates), so the sample favours smooth data; the
/// radius fraction is uniform in `[0, 1]`.
pub fn ball_states(ball: &BallSpec, basis: &Basis) -> Result<Vec<State>> {
    if !(ball.radius >= 0.0 && ball.radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("ball radius {} must be non-negative", ball.radius)));
    }
    let n = basis.len();
    if ball.center.modes() != n {
        return Err(Error::DimensionMismatch {
            what: "ball center",
            expected: n,
            got: ball.center.modes(),
        });
    }
    let lam = basis.eigenvalues();
    let mut rng = ChaCha8Rng::seed_from_u64(ball.seed);
    let mut out = Vec::with_capacity(ball.count);
    for _ in 0..ball.count {
        // x = (√λ u, v) is the isometric coordinate
        let mut xu: Vec<f64> = (0..n).map(|k| rng.sample::<f64, _>(StandardNormal) / (k + 1) as f64).collect();
        let mut xv: Vec<f64> = (0..n).map(|k| rng.sample::<f64, _>(StandardNormal) / (k + 1) as f64).collect();
        let norm = (l2_inner(&xu, &xu) + l2_inner(&xv, &xv)).sqrt();
        let r = ball.radius * rng.random::<f64>();
        let scale = if norm > 0.0 { r / norm } else { 0.0 };
        for k in 0..n {
            xu[k] = ball.center.u[k] + scale * xu[k] / lam[k].sqrt();
            xv[k] = ball.center.v[k] + scale * xv[k];
        }
        out.push(State::new(xu, xv, Time::ZERO)?);
    }
    Ok(out)
}

/// One (initial state, hull symbol) run of the absorbing-set ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorbRun {
    pub state_index: usize,
    pub symbol_index: usize,
    pub initial_norm: f64,
    /// First recorded time with `x_norm ≤ ρ`.
    pub entry_time: f64,
    /// Largest `x_norm` at or after the entry time.
    pub post_entry_sup: f64,
    /// Largest `x_norm` over the last half of the horizon.
    pub post_transient_sup: f64,
    /// `max_t E₀(t) / (1 + √E₀(0)⁺)` for this run.
    pub m_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorbReport {
    pub descriptor: String,
    pub horizon: f64,
    pub rho: f64,
    /// Per-symbol radii `1.1·max post-transient sup`, in hull order.
    pub rho_per_symbol: Vec<f64>,
    /// `max/min` of the per-symbol radii (1 when all vanish).
    pub rho_spread: f64,
    /// `max/min` of the per-symbol worst entry times (1 when all vanish).
    pub entry_spread: f64,
    pub max_post_entry: f64,
    /// Fitted `M` in `E₀(t) ≤ M(1 + √E₀(0))`.
    pub m_fit: f64,
    pub runs: Vec<AbsorbRun>,
}

impl AbsorbReport {
    /// Every run enters the ρ-ball and stays within `1.1·ρ` afterwards.
    pub fn permanence_holds(&self) -> bool {
        self.runs
            .iter()
            .all(|r| r.entry_time.is_finite() && r.post_entry_sup <= 1.1 * self.rho)
    }

    pub fn uniform_within(&self, factor: f64) -> bool {
        self.rho_spread < factor
    }
}

/// Inflation applied to the post-transient supremum.
pub const RHO_INFLATION: f64 = 1.1;

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Runs every ball state against every hull symbol over `[0, horizon]` and
/// estimates the uniform absorbing radius from the last half of the runs.
pub fn absorbing_estimate(
    ball: &BallSpec,
    hull: &HullSample,
    horizon: Time,
    system: &System,
    cfg: &SolverConfig,
) -> Result<AbsorbReport> {
    let states = ball_states(ball, &system.basis)?;
    let jobs: Vec<(usize, usize)> = (0..hull.len())
        .flat_map(|j| (0..states.len()).map(move |i| (i, j)))
        .collect();
    let half = horizon.half();

    // per run: recorded (time, x_norm) series and the M ratio
    let series = jobs
        .par_iter()
        .map(|&(i, j)| -> Result<(Vec<(Time, f64)>, f64)> {
            let traj = evolve(&hull.symbols[j], Time::ZERO, horizon, &states[i], system, cfg)?;
            let e_init = energy0(&states[i], &system.nonlinearity, &system.basis)?;
            let mut e_max = e_init;
            let mut pts = Vec::with_capacity(traj.len());
            for s in &traj.states {
                e_max = e_max.max(energy0(s, &system.nonlinearity, &system.basis)?);
                pts.push((s.time, s.x_norm(&system.basis)));
            }
            Ok((pts, e_max.max(0.0) / (1.0 + e_init.max(0.0).sqrt())))
        })
        .collect::<Result<Vec<_>>>()?;

    let tail_sup: Vec<f64> = series
        .iter()
        .map(|(pts, _)| pts.iter().filter(|(t, _)| *t >= half).map(|p| p.1).fold(0.0, f64::max))
        .collect();
    let rho_per_symbol: Vec<f64> = (0..hull.len())
        .map(|j| {
            RHO_INFLATION
                * jobs
                    .iter()
                    .zip(&tail_sup)
                    .filter(|((_, jj), _)| *jj == j)
                    .map(|(_, s)| *s)
                    .fold(0.0, f64::max)
        })
        .collect();
    let rho = rho_per_symbol.iter().cloned().fold(0.0, f64::max);

    let mut runs = Vec::with_capacity(jobs.len());
    for (&(i, j), (pts, m_ratio)) in jobs.iter().zip(&series) {
        let entry = pts.iter().position(|(_, x)| *x <= rho);
        let (entry_time, post_entry_sup) = match entry {
            Some(e) => (pts[e].0.to_f64(), pts[e..].iter().map(|p| p.1).fold(0.0, f64::max)),
            None => (f64::INFINITY, f64::INFINITY),
        };
        runs.push(AbsorbRun {
            state_index: i,
            symbol_index: j,
            initial_norm: pts[0].1,
            entry_time,
            post_entry_sup,
            post_transient_sup: tail_sup[runs.len()],
            m_ratio: *m_ratio,
        });
    }
    let entry_per_symbol: Vec<f64> = (0..hull.len())
        .map(|j| {
            runs.iter()
                .filter(|r| r.symbol_index == j)
                .map(|r| r.entry_time)
                .fold(0.0, f64::max)
        })
        .collect();

    Ok(AbsorbReport {
        descriptor: format!(
            "ball(r={}, n={}, seed={}) x hull({} symbols of {}) over [0, {}]",
            ball.radius,
            ball.count,
            ball.seed,
            hull.len(),
            hull.base.descriptor(),
            horizon
        ),
        horizon: horizon.to_f64(),
        rho,
        rho_spread: spread(&rho_per_symbol),
        entry_spread: spread(&entry_per_symbol),
        rho_per_symbol,
        max_post_entry: runs.iter().map(|r| r.post_entry_sup).fold(0.0, f64::max),
        m_fit: runs.iter().map(|r| r.m_ratio).fold(0.0, f64::max),
        runs,
    })
}
