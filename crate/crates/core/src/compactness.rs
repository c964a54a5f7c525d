//! Asymptotic-compactness diagnostics.
//!
//! For two solutions `u₁, u₂` driven by symbols `σ₁, σ₂` the difference
//! `w = u₁ - u₂` obeys the bound
//!
//! ```text
//! E_w(T) ≤ C_M / T + φ_{δ,T} / T
//! ```
//!
//! where `φ_{δ,T}` collects six space-time integrals of the nonlinear,
//! damping and forcing differences and `C_M` the endpoint terms. This module
//! evaluates both sides on recorded pair runs, together with the damping-gap
//! constant `C_δ` they depend on.
//!
//! It also provides the finite surrogates for attractor objects: ω-limit
//! clouds, Hausdorff semidistances and pullback kernel sections.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::DampingSpec;
use crate::energy::l2_inner;
use crate::error::{Error, Result};
use crate::forcing::{HullSample, Symbol};
use crate::process::{evolve, evolve_checkpoints, evolve_final, SolverConfig, State, System, Trajectory};
use crate::spectral::Basis;
use crate::time::Time;

/// Grid resolution used by [`damping_gap_constant`].
pub const GAP_GRID_POINTS: usize = 801;
/// Size of the independent verification sample.
pub const GAP_VERIFY_PAIRS: usize = 100_000;

/// `C_δ` with `|u - v|² ≤ δ + C_δ (h(u) - h(v))(u - v)` on `[-s_max, s_max]²`.
///
/// The constant is maximized over a grid of pairs and then checked on
/// [`GAP_VERIFY_PAIRS`] seeded random pairs; on failure it is doubled, at most
/// ten times.
pub fn damping_gap_constant(damping: &DampingSpec, delta: f64, s_max: f64, seed: u64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("δ must be positive, got {delta}")));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("range must be positive, got {s_max}")));
    }
    let n = GAP_GRID_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| -s_max + 2.0 * s_max * i as f64 / (n - 1) as f64).collect();
    let hs: Vec<f64> = grid.iter().map(|&s| damping.h(s)).collect();
    if let Some(i) = hs.iter().position(|x| !x.is_finite()) {
        return Err(Error::AuditNonFinite {
            s: grid[i],
            value: hs[i],
            what: "h".into(),
        });
    }
    let mut c: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            let d = grid[i] - grid[j];
            let prod = (hs[i] - hs[j]) * d;
            if prod > 0.0 {
                c = c.max((d * d - delta) / prod);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> = (0..GAP_VERIFY_PAIRS)
        .map(|_| (rng.random_range(-s_max..=s_max), rng.random_range(-s_max..=s_max)))
        .collect();
    for _ in 0..=10 {
        if damping_gap_violation(damping, delta, c, &pairs).is_none() {
            return Ok(c);
        }
        c = if c > 0.0 { 2.0 * c } else { 1.0 };
    }
    let (u, v) = damping_gap_violation(damping, delta, c, &pairs).unwrap_or_default();
    Err(Error::DampingGap(format!(
        "inequality still fails at (u, v) = ({u}, {v}) after 10 doublings"
    )))
}

/// First pair violating the damping-gap inequality for `c`, if any.
pub fn damping_gap_violation(damping: &DampingSpec, delta: f64, c: f64, pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    pairs.iter().copied().find(|&(u, v)| {
        let d = u - v;
        let rhs = delta + c * (damping.h(u) - damping.h(v)) * d;
        d * d > rhs + 1e-12 * (1.0 + d * d)
    })
}

/// Two trajectories on a common time grid, with their symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRun {
    pub first: Trajectory,
    pub second: Trajectory,
    pub sigma_first: Symbol,
    pub sigma_second: Symbol,
}

impl PairRun {
    pub fn new(first: Trajectory, second: Trajectory, sigma_first: Symbol, sigma_second: Symbol) -> Result<Self> {
        if first.times != second.times {
            return Err(Error::GridMismatch(format!(
                "{} samples vs {} samples",
                first.times.len(),
                second.times.len()
            )));
        }
        if first.last().modes() != second.last().modes() {
            return Err(Error::GridMismatch("different mode counts".into()));
        }
        Ok(PairRun {
            first,
            second,
            sigma_first,
            sigma_second,
        })
    }

    pub fn times(&self) -> &[Time] {
        &self.first.times
    }

    /// `(w, w_t)` at sample `k`.
    pub fn difference(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (&self.first.states[k], &self.second.states[k]);
        (
            a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect(),
            a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect(),
        )
    }

    fn index(&self, t: Time) -> Result<usize> {
        self.first
            .index_of(t)
            .ok_or_else(|| Error::GridMismatch(format!("time {t} is not a recorded sample")))
    }
}

/// `E_w(t) = ½|w|² + ½‖∇w‖²`; the velocity difference does not enter.
pub fn difference_energy(pair: &PairRun, t: Time, basis: &Basis) -> Result<f64> {
    let (w, _) = pair.difference(pair.index(t)?);
    Ok(0.5 * basis.l2_sq(&w) + 0.5 * basis.h1_sq(&w))
}

/// Pointwise-in-time integrands of the bound, one entry per sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PairIntegrands {
    pub time: f64,
    /// `⟨f(u₁) - f(u₂), w_t⟩`
    pub f_wt: f64,
    /// `⟨g₁ - g₂, w_t⟩`
    pub g_wt: f64,
    /// `⟨h(u₁_t) - h(u₂_t), w⟩`
    pub h_w: f64,
    /// `⟨f(u₁) - f(u₂), w⟩`
    pub f_w: f64,
    /// `⟨g₁ - g₂, w⟩`
    pub g_w: f64,
    /// `∫_Ω |(∂_t g₁ - ∂_t g₂) w|`
    pub gt_w_abs: f64,
    pub w_l2_sq: f64,
    pub e_w: f64,
    /// `⟨w_t, w⟩`
    pub wt_w: f64,
    /// `max(‖g₁‖, ‖g₂‖)`
    pub g_norm: f64,
}

/// Evaluates [`PairIntegrands`] at every sample, by collocation.
pub fn pair_integrands(pair: &PairRun, system: &System) -> Result<Vec<PairIntegrands>> {
    let basis = &system.basis;
    (0..pair.times().len())
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&pair.first.states[k], &pair.second.states[k]);
            let t = pair.times()[k];
            let (w, wt) = pair.difference(k);
            let u1 = basis.to_physical(&a.u)?;
            let u2 = basis.to_physical(&b.u)?;
            let v1 = basis.to_physical(&a.v)?;
            let v2 = basis.to_physical(&b.v)?;
            let wg = basis.to_physical(&w)?;
            let wtg = basis.to_physical(&wt)?;
            let f = &system.nonlinearity;
            let h = &system.damping;
            let fd: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| f.f(*x) - f.f(*y)).collect();
            let hd: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| h.h(*x) - h.h(*y)).collect();
            let dot = |p: &[f64], q: &[f64]| basis.integrate(&p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>());

            let (s1, s2) = (&pair.sigma_first, &pair.sigma_second);
            let gd: Vec<f64> = s1.evaluate_at(t).iter().zip(s2.evaluate_at(t)).map(|(x, y)| x - y).collect();
            let gtd: Vec<f64> = s1
                .evaluate_dt_at(t)
                .iter()
                .zip(s2.evaluate_dt_at(t))
                .map(|(x, y)| x - y)
                .collect();
            let gtd_grid = basis.to_physical(&gtd)?;
            let gt_w_abs =
                basis.integrate(&gtd_grid.iter().zip(&wg).map(|(x, y)| (x * y).abs()).collect::<Vec<_>>());

            let rec = PairIntegrands {
                time: t.to_f64(),
                f_wt: dot(&fd, &wtg),
                g_wt: l2_inner(&gd, &wt),
                h_w: dot(&hd, &wg),
                f_w: dot(&fd, &wg),
                g_w: l2_inner(&gd, &w),
                gt_w_abs,
                w_l2_sq: basis.l2_sq(&w),
                e_w: 0.5 * basis.l2_sq(&w) + 0.5 * basis.h1_sq(&w),
                wt_w: l2_inner(&wt, &w),
                g_norm: s1.l2_norm_at(t).max(s2.l2_norm_at(t)),
            };
            let all = [rec.f_wt, rec.g_wt, rec.h_w, rec.f_w, rec.g_w, rec.gt_w_abs, rec.e_w];
            if let Some(i) = all.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    index: k,
                    value: all[i],
                    context: "pair integrand",
                });
            }
            Ok(rec)
        })
        .collect()
}

/// `∫_{t_0}^{t_n} y` by the trapezoid rule on (possibly non-uniform) nodes.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(tt, yy)| 0.5 * (tt[1] - tt[0]) * (yy[0] + yy[1])).sum()
}

/// `∫_{t_0}^{t_n} ∫_s^{t_n} y(τ) dτ ds`: reverse cumulative inner trapezoid,
/// then an outer trapezoid.
pub fn double_trapezoid(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    let mut inner = vec![0.0; n];
    for k in (0..n - 1).rev() {
        inner[k] = inner[k + 1] + 0.5 * (t[k + 1] - t[k]) * (y[k] + y[k + 1]);
    }
    trapezoid(t, &inner)
}

/// The six integrals entering `φ_{δ,T}`, in order:
///
/// 0. `∫₀ᵀ∫_sᵀ ⟨f(u₁) - f(u₂), w_t⟩`
/// 1. `∫₀ᵀ∫_sᵀ ⟨g₁ - g₂, w_t⟩`
/// 2. `∫₀ᵀ ⟨f(u₁) - f(u₂), w_t⟩`
/// 3. `∫₀ᵀ ⟨h(u₁_t) - h(u₂_t), w⟩`
/// 4. `∫₀ᵀ ⟨f(u₁) - f(u₂), w⟩`
/// 5. `∫₀ᵀ ⟨g₁ - g₂, w⟩`
pub type PhiComponents = [f64; 6];

/// `φ = -c₀ + (1 + C_δ)c₁ - C_δ c₂ - ½c₃ - ½c₄ + ½c₅`.
pub fn phi_from_components(c: &PhiComponents, c_delta: f64) -> f64 {
    -c[0] + (1.0 + c_delta) * c[1] - c_delta * c[2] - 0.5 * c[3] - 0.5 * c[4] + 0.5 * c[5]
}

/// Minimum number of sample intervals over `[0, T]`.
pub const MIN_INTERVALS: usize = 200;

fn window(integrands: &[PairIntegrands], t_end: f64) -> Result<&[PairIntegrands]> {
    let n = integrands.iter().take_while(|r| r.time <= t_end).count();
    if n < MIN_INTERVALS + 1 {
        return Err(Error::InsufficientSampling {
            have: n.saturating_sub(1),
            need: MIN_INTERVALS,
        });
    }
    Ok(&integrands[..n])
}

/// Components of `φ` over `[t_0, T]` from precomputed integrands.
pub fn phi_components(integrands: &[PairIntegrands], t_end: f64) -> Result<PhiComponents> {
    let win = window(integrands, t_end)?;
    let t: Vec<f64> = win.iter().map(|r| r.time).collect();
    let col = |g: fn(&PairIntegrands) -> f64| win.iter().map(g).collect::<Vec<f64>>();
    Ok([
        double_trapezoid(&t, &col(|r| r.f_wt)),
        double_trapezoid(&t, &col(|r| r.g_wt)),
        trapezoid(&t, &col(|r| r.f_wt)),
        trapezoid(&t, &col(|r| r.h_w)),
        trapezoid(&t, &col(|r| r.f_w)),
        trapezoid(&t, &col(|r| r.g_w)),
    ])
}

/// `(φ, components)` on the pair over `[0, T]`.
pub fn phi(pair: &PairRun, t_end: Time, c_delta: f64, system: &System) -> Result<(f64, PhiComponents)> {
    pair.index(t_end)?;
    let integrands = pair_integrands(pair, system)?;
    let c = phi_components(&integrands, t_end.to_f64())?;
    Ok((phi_from_components(&c, c_delta), c))
}

/// `C_M = δ T mes(Ω) + C_δ E_w(0) - ½⟨w_t(T), w(T)⟩ + ½⟨w_t(0), w(0)⟩`.
pub fn c_m(pair: &PairRun, delta: f64, t_end: Time, c_delta: f64, basis: &Basis) -> Result<f64> {
    let k = pair.index(t_end)?;
    let (w0, wt0) = pair.difference(0);
    let (wn, wtn) = pair.difference(k);
    let e0 = 0.5 * basis.l2_sq(&w0) + 0.5 * basis.h1_sq(&w0);
    let span = (t_end - pair.times()[0]).to_f64();
    Ok(delta * span * basis.domain_measure() + c_delta * e0 - 0.5 * l2_inner(&wtn, &wn) + 0.5 * l2_inner(&wt0, &w0))
}

/// One evaluation of the difference-energy bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessReport {
    pub pair: usize,
    pub delta: f64,
    pub t: f64,
    pub c_delta: f64,
    pub e_w_t: f64,
    pub phi: f64,
    pub components: PhiComponents,
    pub c_m: f64,
    /// `C_M/T + φ/T - E_w(T)`.
    pub slack: f64,
    /// `max_t E_w(t)` over `[0, T]`, the scale for the slack tolerance.
    pub e_w_scale: f64,
}

/// Relative tolerance on the slack, in units of [`CompactnessReport::e_w_scale`].
pub const SLACK_TOL: f64 = 1e-3;

impl CompactnessReport {
    pub fn passed(&self) -> bool {
        self.slack >= -SLACK_TOL * self.e_w_scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterBoundSummary {
    pub reports: Vec<CompactnessReport>,
    pub pass_fraction: f64,
    /// For each `ε`, the smallest tested `T` at which
    /// `E_w(T) ≤ ε + φ/T + C_M/T` holds on every pair.
    pub epsilon_table: Vec<(f64, Option<f64>)>,
}

/// Tolerances of the `T(ε)` table.
pub const EPSILON_GRID: [f64; 3] = [0.5, 0.1, 0.05];

/// Evaluates the bound for every pair and every `T` in `horizons`.
pub fn verify_master_bound(
    pairs: &[PairRun],
    delta: f64,
    horizons: &[Time],
    c_delta: f64,
    system: &System,
) -> Result<MasterBoundSummary> {
    let per_pair = pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| -> Result<Vec<CompactnessReport>> {
            let integrands = pair_integrands(pair, system)?;
            horizons
                .iter()
                .map(|&t_end| {
                    let k = pair.index(t_end)?;
                    let span = (t_end - pair.times()[0]).to_f64();
                    let comps = phi_components(&integrands, t_end.to_f64())?;
                    let phi = phi_from_components(&comps, c_delta);
                    let cm = c_m(pair, delta, t_end, c_delta, &system.basis)?;
                    let e_w_t = integrands[k].e_w;
                    Ok(CompactnessReport {
                        pair: i,
                        delta,
                        t: span,
                        c_delta,
                        e_w_t,
                        phi,
                        components: comps,
                        c_m: cm,
                        slack: cm / span + phi / span - e_w_t,
                        e_w_scale: integrands[..=k].iter().map(|r| r.e_w).fold(0.0, f64::max),
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<CompactnessReport> = per_pair.into_iter().flatten().collect();
    let passed = reports.iter().filter(|r| r.passed()).count();

    let mut ts: Vec<f64> = reports.iter().map(|r| r.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let epsilon_table = EPSILON_GRID
        .iter()
        .map(|&eps| {
            let t = ts.iter().copied().find(|&t| {
                reports
                    .iter()
                    .filter(|r| r.t == t)
                    .all(|r| r.e_w_t <= eps + (r.phi + r.c_m) / r.t)
            });
            (eps, t)
        })
        .collect();
    Ok(MasterBoundSummary {
        pass_fraction: if reports.is_empty() { 1.0 } else { passed as f64 / reports.len() as f64 },
        reports,
        epsilon_table,
    })
}

/// Both sides of the forcing-difference estimate
///
/// ```text
/// |∫₀ᵀ∫_sᵀ⟨g₁-g₂, w_t⟩| ≤ 2TM‖w(T)‖ + 2M√T (∫₀ᵀ|w|²)^{1/2} + T∫₀ᵀ∫_Ω|(∂_t g₁ - ∂_t g₂) w|
/// ```
///
/// with `M = max_t max(‖g₁‖, ‖g₂‖)` over the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcingDifferenceReport {
    pub t: f64,
    pub lhs: f64,
    pub endpoint_term: f64,
    pub mean_term: f64,
    pub derivative_term: f64,
    pub m: f64,
    pub slack: f64,
}

pub fn forcing_difference_check(pair: &PairRun, t_end: Time, system: &System) -> Result<ForcingDifferenceReport> {
    let k = pair.index(t_end)?;
    let integrands = pair_integrands(pair, system)?;
    let win = window(&integrands, t_end.to_f64())?;
    let t: Vec<f64> = win.iter().map(|r| r.time).collect();
    let span = t[k] - t[0];
    let m = win.iter().map(|r| r.g_norm).fold(0.0, f64::max);
    let lhs = double_trapezoid(&t, &win.iter().map(|r| r.g_wt).collect::<Vec<_>>()).abs();
    let endpoint_term = 2.0 * span * m * win[k].w_l2_sq.sqrt();
    let mean_term = 2.0 * m * span.sqrt() * trapezoid(&t, &win.iter().map(|r| r.w_l2_sq).collect::<Vec<_>>()).sqrt();
    let derivative_term = span * trapezoid(&t, &win.iter().map(|r| r.gt_w_abs).collect::<Vec<_>>());
    Ok(ForcingDifferenceReport {
        t: span,
        lhs,
        endpoint_term,
        mean_term,
        derivative_term,
        m,
        slack: endpoint_term + mean_term + derivative_term - lhs,
    })
}

/// `(∫⟨h(u_t), u_t⟩, ∫∫|h(u_t)|^{(p+1)/p})` over the trajectory, with the
/// bound `second ≤ C(T·mes(Ω) + first)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampingPowerReport {
    pub work: f64,
    pub power: f64,
    pub bound: f64,
    pub slack: f64,
}

pub fn damping_power_integral(traj: &Trajectory, system: &System, c_power: f64) -> Result<DampingPowerReport> {
    let basis = &system.basis;
    let h = &system.damping;
    let r = (h.growth_exponent + 1.0) / h.growth_exponent;
    let mut work = Vec::with_capacity(traj.len());
    let mut power = Vec::with_capacity(traj.len());
    for s in &traj.states {
        let v = basis.to_physical(&s.v)?;
        work.push(basis.integrate(&v.iter().map(|x| h.h(*x) * x).collect::<Vec<_>>()));
        power.push(basis.integrate(&v.iter().map(|x| h.h(*x).abs().powf(r)).collect::<Vec<_>>()));
    }
    let t: Vec<f64> = traj.times.iter().map(|x| x.to_f64()).collect();
    let span = t.last().unwrap() - t[0];
    let (work, power) = (trapezoid(&t, &work), trapezoid(&t, &power));
    let bound = c_power * (span * basis.domain_measure() + work);
    Ok(DampingPowerReport {
        work,
        power,
        bound,
        slack: bound - power,
    })
}

/// Draws `count` pairs `(x, σ)`, `(x', σ')` of ball states and hull symbols
/// (seeded) and runs both members over `[0, horizon]`.
pub fn sample_pairs(
    states: &[State],
    hull: &HullSample,
    count: usize,
    seed: u64,
    horizon: Time,
    system: &System,
    cfg: &SolverConfig,
) -> Result<Vec<PairRun>> {
    if states.is_empty() || hull.is_empty() {
        return Err(Error::InvalidArgument("pair sampling needs states and symbols".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<[(usize, usize); 2]> = (0..count)
        .map(|_| {
            std::array::from_fn(|_| (rng.random_range(0..states.len()), rng.random_range(0..hull.len())))
        })
        .collect();
    picks
        .par_iter()
        .map(|pick| {
            let [(i, j), (k, l)] = *pick;
            let a = evolve(&hull.symbols[j], Time::ZERO, horizon, &states[i], system, cfg)?;
            let b = evolve(&hull.symbols[l], Time::ZERO, horizon, &states[k], system, cfg)?;
            PairRun::new(a, b, hull.symbols[j].clone(), hull.symbols[l].clone())
        })
        .collect()
}

/// Resolution below which cloud points are merged.
pub const CLOUD_RESOLUTION: f64 = 1e-9;

/// A finite point cloud in `X` with a description of where it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cloud {
    pub points: Vec<State>,
    pub provenance: String,
}

impl Cloud {
    /// Builds a cloud, dropping points within [`CLOUD_RESOLUTION`] of an
    /// earlier one. Time stamps are kept but play no role in distances.
    pub fn new(states: Vec<State>, provenance: impl Into<String>, basis: &Basis) -> Result<Self> {
        let mut points: Vec<State> = Vec::with_capacity(states.len());
        for s in states {
            if let Some(i) = s.u.iter().chain(&s.v).position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    index: i,
                    value: f64::NAN,
                    context: "cloud point",
                });
            }
            if !points.iter().any(|p| p.x_distance(&s, basis) <= CLOUD_RESOLUTION) {
                points.push(s);
            }
        }
        Ok(Cloud {
            points,
            provenance: provenance.into(),
        })
    }

    pub fn origin(modes: usize) -> Self {
        Cloud {
            points: vec![State::zero(modes)],
            provenance: "origin".into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_x_norm(&self, basis: &Basis) -> f64 {
        self.points.iter().map(|p| p.x_norm(basis)).fold(0.0, f64::max)
    }
}

/// `dist(A, B) = sup_{a∈A} inf_{b∈B} ‖a - b‖_X`, reported as exactly 0 when
/// every point of `A` lies within [`CLOUD_RESOLUTION`] of `B`.
pub fn hausdorff_semidist(a: &Cloud, b: &Cloud, basis: &Basis) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let d = a
        .points
        .par_iter()
        .map(|p| b.points.iter().map(|q| p.x_distance(q, basis)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max);
    Ok(if d <= CLOUD_RESOLUTION { 0.0 } else { d })
}

/// Finite surrogate of `ω_{τ,Σ}(B)`: all `U_σ(t, τ)x` for `x ∈ B`, `σ` in the
/// hull and `t` in the second half of `sample_times`.
pub fn omega_limit_cloud(
    samples: &[State],
    hull: &HullSample,
    tau: Time,
    sample_times: &[Time],
    system: &System,
    cfg: &SolverConfig,
) -> Result<Cloud> {
    if sample_times.windows(2).any(|w| w[1] <= w[0]) || sample_times.first().is_some_and(|t| *t < tau) {
        return Err(Error::InvalidArgument("sample times must increase from τ".into()));
    }
    let tail = &sample_times[sample_times.len() / 2..];
    let jobs: Vec<(usize, usize)> = (0..hull.len())
        .flat_map(|j| (0..samples.len()).map(move |i| (i, j)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(i, j)| evolve_checkpoints(&hull.symbols[j], tau, tail, &samples[i], system, cfg))
        .collect::<Result<Vec<_>>>()?;
    let provenance = format!(
        "omega-limit: {} states x {} symbols of {}, tau={}, tail times [{}, {}]",
        samples.len(),
        hull.len(),
        hull.base.descriptor(),
        tau,
        tail.first().map(|t| t.to_f64()).unwrap_or(f64::NAN),
        tail.last().map(|t| t.to_f64()).unwrap_or(f64::NAN)
    );
    Cloud::new(runs.into_iter().flatten().collect(), provenance, &system.basis)
}

/// `dist(U_σ(t, 0)B, target)` at each checkpoint, per hull symbol.
pub fn attraction_profile(
    samples: &[State],
    hull: &HullSample,
    checkpoints: &[Time],
    target: &Cloud,
    system: &System,
    cfg: &SolverConfig,
) -> Result<Vec<Vec<f64>>> {
    hull.symbols
        .iter()
        .map(|sigma| {
            let runs = samples
                .par_iter()
                .map(|x| evolve_checkpoints(sigma, Time::ZERO, checkpoints, x, system, cfg))
                .collect::<Result<Vec<_>>>()?;
            (0..checkpoints.len())
                .map(|c| {
                    let cloud = Cloud::new(runs.iter().map(|r| r[c].clone()).collect(), "", &system.basis)?;
                    hausdorff_semidist(&cloud, target, &system.basis)
                })
                .collect()
        })
        .collect()
}

/// Pullback clouds `{U_σ(s, s - T)x}` per horizon `T`, with the successive
/// semidistances `dist(cloud_{k+1}, cloud_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackReport {
    pub s: f64,
    pub horizons: Vec<f64>,
    pub clouds: Vec<Cloud>,
    pub successive: Vec<f64>,
}

pub fn kernel_section_pullback(
    sigma: &Symbol,
    s: Time,
    horizons: &[Time],
    samples: &[State],
    system: &System,
    cfg: &SolverConfig,
) -> Result<PullbackReport> {
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("pullback horizons must increase".into()));
    }
    let clouds = horizons
        .iter()
        .map(|&h| {
            let pts = samples
                .par_iter()
                .map(|x| evolve_final(sigma, s - h, s, x, system, cfg))
                .collect::<Result<Vec<_>>>()?;
            Cloud::new(
                pts,
                format!("pullback of {} samples to s={} from s-{}", samples.len(), s, h),
                &system.basis,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let successive = clouds
        .windows(2)
        .map(|w| hausdorff_semidist(&w[1], &w[0], &system.basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(PullbackReport {
        s: s.to_f64(),
        horizons: horizons.iter().map(|h| h.to_f64()).collect(),
        clouds,
        successive,
    })
}

/// Largest pairwise X-distance within the second half of `states`.
pub fn cauchy_tail_test(states: &[State], basis: &Basis) -> Result<f64> {
    if states.len() < 4 {
        return Err(Error::TooFewStates { need: 4, got: states.len() });
    }
    let tail = &states[states.len() / 2..];
    let mut diam: f64 = 0.0;
    for i in 0..tail.len() {
        for j in 0..i {
            diam = diam.max(tail[i].x_distance(&tail[j], basis));
        }
    }
    Ok(diam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::NonlinearitySpec;
    use crate::forcing::SymbolKind;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn basis(n: usize) -> Basis {
        Basis::new(1, n, &[PI]).unwrap()
    }

    fn point(n: usize, u0: f64, v0: f64) -> State {
        let mut s = State::zero(n);
        s.u[0] = u0;
        s.v[0] = v0;
        s
    }

    #[test]
    fn gap_constant_examples() {
        let lin = DampingSpec::linear(1.0);
        for delta in [1e-2, 1e-3, 0.5] {
            let c = damping_gap_constant(&lin, delta, 5.0, 1).unwrap();
            assert!(c <= 1.0 + 1e-12, "{c}");
        }
        let cubic = DampingSpec::polynomial(3).unwrap();
        let c = damping_gap_constant(&cubic, 0.01, 5.0, 2).unwrap();
        assert!(c <= 1.0 + 1e-12);
        let pure = DampingSpec::new("s^3", crate::dynamics::ScalarFn::odd_powers(&[(1.0, 3.0)]), 3.0, 1.0);
        let c = damping_gap_constant(&pure, 0.01, 2.0, 3).unwrap();
        assert!(c.is_finite() && c > 1.0);
        assert!(damping_gap_constant(&lin, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn gap_constant_fails_without_monotone_damping() {
        // h ≡ 0 gives no control at all
        let zero = DampingSpec::linear(0.0);
        assert!(matches!(damping_gap_constant(&zero, 0.01, 1.0, 0), Err(Error::DampingGap(_))));
    }

    #[test]
    fn quadrature_rules() {
        let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let ones = vec![1.0; t.len()];
        assert_relative_eq!(trapezoid(&t, &ones), 1.0, max_relative = 1e-12);
        // ∫₀¹∫_s¹ 1 = ½ ; ∫₀¹∫_s¹ τ dτ ds = ∫₀¹ τ² dτ = ⅓
        assert_relative_eq!(double_trapezoid(&t, &ones), 0.5, max_relative = 1e-12);
        let lin: Vec<f64> = t.clone();
        assert_relative_eq!(double_trapezoid(&t, &lin), 1.0 / 3.0, max_relative = 1e-4);
    }

    fn system(f: NonlinearitySpec) -> System {
        System::new(basis(8), DampingSpec::linear(1.0), f)
    }

    fn periodic(shift: f64) -> Symbol {
        Symbol::new(
            SymbolKind::Quasiperiodic { amplitude: 1.0, frequencies: vec![1.0, 2f64.sqrt()] },
            Symbol::unit_profile(8, 0),
        )
        .unwrap()
        .translate(Time::from_f64(shift))
    }

    fn pair(sys: &System, x: &State, y: &State, s1: &Symbol, s2: &Symbol, t: f64) -> PairRun {
        let cfg = SolverConfig::rk4(1e-2);
        let t = Time::from_f64(t);
        PairRun::new(
            evolve(s1, Time::ZERO, t, x, sys, &cfg).unwrap(),
            evolve(s2, Time::ZERO, t, y, sys, &cfg).unwrap(),
            s1.clone(),
            s2.clone(),
        )
        .unwrap()
    }

    #[test]
    fn difference_energy_examples() {
        let b = basis(8);
        let sys = system(NonlinearitySpec::cubic());
        let p = pair(&sys, &point(8, 1.0, 0.0), &point(8, 1.0, 0.0), &periodic(0.0), &periodic(0.0), 1.0);
        assert_eq!(difference_energy(&p, Time::from_f64(0.5), &b).unwrap(), 0.0);

        let p = pair(&sys, &point(8, 1.0, 3.0), &State::zero(8), &Symbol::zero(8), &Symbol::zero(8), 0.1);
        assert_relative_eq!(difference_energy(&p, Time::ZERO, &b).unwrap(), 1.0, max_relative = 1e-14);
        assert!(difference_energy(&p, Time::from_f64(0.005), &b).is_err());
    }

    #[test]
    fn grids_must_match() {
        let sys = system(NonlinearitySpec::zero());
        let cfg = SolverConfig::rk4(1e-2);
        let a = evolve(&Symbol::zero(8), Time::ZERO, Time::from_f64(1.0), &State::zero(8), &sys, &cfg).unwrap();
        let b = evolve(&Symbol::zero(8), Time::ZERO, Time::from_f64(2.0), &State::zero(8), &sys, &cfg).unwrap();
        assert!(matches!(
            PairRun::new(a, b, Symbol::zero(8), Symbol::zero(8)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn phi_vanishes_on_identical_pairs() {
        let sys = system(NonlinearitySpec::cubic_double_well());
        let x = point(8, 1.0, 0.5);
        let p = pair(&sys, &x, &x, &periodic(0.3), &periodic(0.3), 4.0);
        let (phi, comps) = phi(&p, Time::from_f64(4.0), 0.7, &sys).unwrap();
        assert!(phi.abs() < 1e-12 && comps.iter().all(|c| c.abs() < 1e-12));
        let cm = c_m(&p, 0.01, Time::from_f64(4.0), 0.7, &sys.basis).unwrap();
        assert_relative_eq!(cm, 0.01 * 4.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn only_damping_survives_without_f_and_forcing_difference() {
        let sys = system(NonlinearitySpec::zero());
        let p = pair(&sys, &point(8, 1.0, 0.0), &point(8, -0.5, 1.0), &periodic(0.0), &periodic(0.0), 3.0);
        let (_, c) = phi(&p, Time::from_f64(3.0), 1.0, &sys).unwrap();
        assert!(c[3].abs() > 1e-3);
        for k in [0, 1, 2, 4, 5] {
            assert!(c[k].abs() < 1e-13, "component {k}: {}", c[k]);
        }
    }

    #[test]
    fn phi_requires_dense_sampling() {
        let sys = system(NonlinearitySpec::zero());
        let p = pair(&sys, &point(8, 1.0, 0.0), &State::zero(8), &Symbol::zero(8), &Symbol::zero(8), 1.0);
        assert!(matches!(
            phi(&p, Time::from_f64(1.0), 1.0, &sys),
            Err(Error::InsufficientSampling { .. })
        ));
    }

    #[test]
    fn c_m_matches_term_by_term() {
        let sys = system(NonlinearitySpec::cubic());
        let p = pair(&sys, &point(8, 1.0, 0.2), &point(8, 0.4, -0.3), &periodic(0.0), &periodic(1.0), 2.0);
        let t = Time::from_f64(2.0);
        let k = p.index(t).unwrap();
        let (a0, b0) = (&p.first.states[0], &p.second.states[0]);
        let (an, bn) = (&p.first.states[k], &p.second.states[k]);
        // w = (u₁ - u₂)φ₁ only in mode 0 at t = 0
        let ew0 = 0.5 * (0.6f64).powi(2) * 2.0;
        let mut cross_t = 0.0;
        for i in 0..8 {
            cross_t += (an.v[i] - bn.v[i]) * (an.u[i] - bn.u[i]);
        }
        let cross_0 = (a0.v[0] - b0.v[0]) * (a0.u[0] - b0.u[0]);
        let oracle = 0.02 * 2.0 * PI + 0.5 * ew0 - 0.5 * cross_t + 0.5 * cross_0;
        assert_relative_eq!(c_m(&p, 0.02, t, 0.5, &sys.basis).unwrap(), oracle, max_relative = 1e-12);
    }

    #[test]
    fn forcing_difference_examples() {
        let sys = system(NonlinearitySpec::cubic_double_well());
        let x = point(8, 1.0, 0.0);
        let same = pair(&sys, &x, &x, &periodic(0.0), &periodic(0.0), 3.0);
        let r = forcing_difference_check(&same, Time::from_f64(3.0), &sys).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.slack >= 0.0);

        let shifted = pair(&sys, &x, &point(8, -0.5, 0.5), &periodic(0.0), &periodic(2.5), 3.0);
        let r = forcing_difference_check(&shifted, Time::from_f64(3.0), &sys).unwrap();
        assert!(r.lhs > 0.0 && r.slack >= 0.0, "{r:?}");
    }

    #[test]
    fn damping_power_examples() {
        let sys = system(NonlinearitySpec::zero());
        let cfg = SolverConfig::rk4(1e-2);
        let zero = evolve(&Symbol::zero(8), Time::ZERO, Time::from_f64(1.0), &State::zero(8), &sys, &cfg).unwrap();
        let r = damping_power_integral(&zero, &sys, 1.0).unwrap();
        assert_eq!((r.work, r.power), (0.0, 0.0));

        // h(s) = s: |h|^2 and h·s coincide
        let run = evolve(&Symbol::zero(8), Time::ZERO, Time::from_f64(2.0), &point(8, 1.0, 1.0), &sys, &cfg).unwrap();
        let r = damping_power_integral(&run, &sys, 1.0).unwrap();
        assert_relative_eq!(r.work, r.power, max_relative = 1e-12);
        assert!(r.slack >= 0.0);
    }

    #[test]
    fn semidistance_examples() {
        let b = basis(4);
        let mut p = State::zero(4);
        p.u[0] = 3.0;
        let a = Cloud::new(vec![p.clone()], "a", &b).unwrap();
        let o = Cloud::origin(4);
        assert_relative_eq!(hausdorff_semidist(&a, &o, &b).unwrap(), 3.0);
        assert_eq!(hausdorff_semidist(&a, &a, &b).unwrap(), 0.0);

        let two = Cloud::new(vec![State::zero(4), p], "two", &b).unwrap();
        assert_eq!(hausdorff_semidist(&o, &two, &b).unwrap(), 0.0);
        assert_relative_eq!(hausdorff_semidist(&two, &o, &b).unwrap(), 3.0);

        let empty = Cloud { points: vec![], provenance: String::new() };
        assert_eq!(hausdorff_semidist(&empty, &o, &b), Err(Error::EmptyCloud));
    }

    #[test]
    fn cloud_deduplicates() {
        let b = basis(4);
        let mut q = State::zero(4);
        q.v[1] = 1e-12;
        let c = Cloud::new(vec![State::zero(4), q, point(4, 1.0, 0.0)], "", &b).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn cauchy_tail_examples() {
        let b = basis(4);
        let same = vec![point(4, 1.0, 0.0); 5];
        assert_eq!(cauchy_tail_test(&same, &b).unwrap(), 0.0);
        // 1, 1/2, 1/4, 1/8 in mode 1 (λ = 1): tail {1/4, 1/8} has diameter 1/8
        let geo: Vec<State> = (0..4).map(|k| point(4, 0.5f64.powi(k), 0.0)).collect();
        assert_relative_eq!(cauchy_tail_test(&geo, &b).unwrap(), 0.125);
        assert!(matches!(cauchy_tail_test(&geo[..3], &b), Err(Error::TooFewStates { .. })));
    }

    #[test]
    fn fixed_point_cloud() {
        let sys = system(NonlinearitySpec::zero());
        let hull = HullSample::new(&Symbol::zero(8), &[]).unwrap();
        let times: Vec<Time> = [1.0, 2.0, 3.0, 4.0].iter().map(|&t| Time::from_f64(t)).collect();
        let cloud = omega_limit_cloud(&[State::zero(8)], &hull, Time::ZERO, &times, &sys, &SolverConfig::rk4(1e-2)).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.max_x_norm(&sys.basis), 0.0);
    }

    #[test]
    fn pullback_identity_horizon() {
        let sys = system(NonlinearitySpec::linear());
        let samples = vec![point(8, 1.0, 0.0), point(8, 0.0, 2.0)];
        let rep = kernel_section_pullback(
            &periodic(0.0),
            Time::from_f64(1.0),
            &[Time::ZERO, Time::from_f64(1.0)],
            &samples,
            &sys,
            &SolverConfig::rk4(1e-2),
        )
        .unwrap();
        assert_eq!(rep.clouds[0].points.len(), 2);
        assert_eq!(rep.clouds[0].points[0].u, samples[0].u);
        assert_eq!(rep.successive.len(), 1);
    }
}
