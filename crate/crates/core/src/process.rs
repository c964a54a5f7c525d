//! The family of processes `U_σ(t, τ)`: Galerkin time integration of
//!
//! ```text
//! u' = v,   v' = Δu - h(v) - f(u) + σ(t)
//! ```
//!
//! in modal coordinates. `h(v)` and `f(u)` are evaluated by collocation and
//! projected back onto the modes.
//!
//! All time stamps are exact [`Time`] values, so the composition law
//! `U(t,s)U(s,τ) = U(t,τ)` and the translation identity
//! `U_σ(t+s, τ+s) = U_{T(s)σ}(t, τ)` hold bit-for-bit on aligned grids.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DampingSpec, NonlinearitySpec};
use crate::energy::EnergyRecord;
use crate::error::{Error, Result};
use crate::forcing::Symbol;
use crate::spectral::Basis;
use crate::time::Time;

/// Blow-up threshold on the energy norm.
pub const BLOW_UP_NORM: f64 = 1e12;

/// A point `y = (u, u_t)` of the phase space `X = H¹₀ × L²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time: Time,
}

impl State {
    pub fn new(u: Vec<f64>, v: Vec<f64>, time: Time) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                what: "velocity coefficients",
                expected: u.len(),
                got: v.len(),
            });
        }
        Ok(State { u, v, time })
    }

    pub fn zero(modes: usize) -> Self {
        State {
            u: vec![0.0; modes],
            v: vec![0.0; modes],
            time: Time::ZERO,
        }
    }

    pub fn at(mut self, time: Time) -> Self {
        self.time = time;
        self
    }

    pub fn modes(&self) -> usize {
        self.u.len()
    }

    /// `‖y‖²_X = ‖∇u‖² + |v|²`.
    pub fn x_norm_sq(&self, basis: &Basis) -> f64 {
        basis.h1_sq(&self.u) + basis.l2_sq(&self.v)
    }

    pub fn x_norm(&self, basis: &Basis) -> f64 {
        self.x_norm_sq(basis).sqrt()
    }

    /// X-distance between two states, ignoring their time stamps.
    pub fn x_distance(&self, other: &State, basis: &Basis) -> f64 {
        let lam = basis.eigenvalues();
        let mut acc = 0.0;
        for k in 0..self.u.len() {
            let du = self.u[k] - other.u[k];
            let dv = self.v[k] - other.v[k];
            acc += lam[k] * du * du + dv * dv;
        }
        acc.sqrt()
    }

    fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

/// Spatial discretization plus the damping and nonlinearity.
#[derive(Debug, Clone)]
pub struct System {
    pub basis: Basis,
    pub damping: DampingSpec,
    pub nonlinearity: NonlinearitySpec,
}

impl System {
    pub fn new(basis: Basis, damping: DampingSpec, nonlinearity: NonlinearitySpec) -> Self {
        System {
            basis,
            damping,
            nonlinearity,
        }
    }

    pub fn modes(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical four-stage Runge–Kutta.
    #[default]
    Rk4Explicit,
    /// Implicit midpoint for `-Δu` and `h(v)`, explicit `f` and forcing.
    ImexMidpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
}

fn default_newton_tol() -> f64 {
    1e-10
}

fn default_newton_max_iter() -> usize {
    25
}

fn default_record_stride() -> usize {
    1
}

impl SolverConfig {
    pub fn rk4(dt: f64) -> Self {
        SolverConfig {
            dt,
            scheme: Scheme::Rk4Explicit,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            record_stride: default_record_stride(),
        }
    }

    pub fn imex(dt: f64) -> Self {
        SolverConfig {
            scheme: Scheme::ImexMidpoint,
            ..Self::rk4(dt)
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if Time::try_from_f64(self.dt).is_none_or(|t| t.ticks() == 0) {
            return Err(Error::InvalidArgument(format!("dt {} is not representable", self.dt)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidArgument("Newton tolerances must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn step_time(&self) -> Time {
        Time::from_f64(self.dt)
    }
}

/// Where a trajectory came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub symbol: String,
    pub damping: String,
    pub nonlinearity: String,
    pub basis: String,
    pub scheme: Scheme,
    pub dt: f64,
}

/// Time-sampled states of one run of `U_σ(t, τ) y_τ`.
///
/// Samples are taken every `record_stride` steps; the final state is always
/// recorded, so the last interval may be shorter when the step count is not
/// a multiple of the stride.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub provenance: Provenance,
    pub times: Vec<Time>,
    pub states: Vec<State>,
    /// Optional per-sample energy records, see [`crate::energy::attach_energy`].
    pub energy: Option<Vec<EnergyRecord>>,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn sample_spacing(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| (self.times[1] - self.times[0]).to_f64())
    }

    /// Index of the sample recorded exactly at `t`.
    pub fn index_of(&self, t: Time) -> Option<usize> {
        self.times.binary_search(&t).ok()
    }
}

/// Reusable buffers for right-hand side evaluations.
struct Workspace {
    u_grid: Vec<f64>,
    v_grid: Vec<f64>,
    nl_grid: Vec<f64>,
    proj: Vec<f64>,
}

impl Workspace {
    fn new(basis: &Basis) -> Self {
        Workspace {
            u_grid: vec![0.0; basis.grid_len()],
            v_grid: vec![0.0; basis.grid_len()],
            nl_grid: vec![0.0; basis.grid_len()],
            proj: vec![0.0; basis.len()],
        }
    }
}

fn check_grid_finite(values: &[f64], context: &'static str) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
            context,
        }),
        None => Ok(()),
    }
}

/// `P[h(v) + f(u)]` into `ws.proj`.
fn project_nonlinear(u: &[f64], v: &[f64], system: &System, ws: &mut Workspace) -> Result<()> {
    let basis = &system.basis;
    basis.to_physical_into(u, &mut ws.u_grid);
    basis.to_physical_into(v, &mut ws.v_grid);
    for ((o, &ug), &vg) in ws.nl_grid.iter_mut().zip(&ws.u_grid).zip(&ws.v_grid) {
        *o = system.damping.h(vg) + system.nonlinearity.f(ug);
    }
    check_grid_finite(&ws.nl_grid, "collocated h(u_t) + f(u)")?;
    basis.to_modal_into(&ws.nl_grid, &mut ws.proj);
    Ok(())
}

fn rhs_into(
    u: &[f64],
    v: &[f64],
    t: Time,
    sigma: &Symbol,
    system: &System,
    ws: &mut Workspace,
    du: &mut [f64],
    dv: &mut [f64],
) -> Result<()> {
    project_nonlinear(u, v, system, ws)?;
    let a = sigma.amplitude_at(t);
    let lam = system.basis.eigenvalues();
    for k in 0..u.len() {
        du[k] = v[k];
        dv[k] = -lam[k] * u[k] - ws.proj[k] + a * sigma.profile[k];
    }
    Ok(())
}

fn check_dims(state: &State, sigma: &Symbol, system: &System) -> Result<()> {
    let n = system.modes();
    for (what, got) in [
        ("state displacement", state.u.len()),
        ("state velocity", state.v.len()),
        ("symbol profile", sigma.modes()),
    ] {
        if got != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got,
            });
        }
    }
    Ok(())
}

/// Right-hand side `(du, dv)` of the Galerkin system at time `t`.
pub fn rhs(state: &State, t: Time, sigma: &Symbol, system: &System) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(state, sigma, system)?;
    let n = system.modes();
    let mut ws = Workspace::new(&system.basis);
    let (mut du, mut dv) = (vec![0.0; n], vec![0.0; n]);
    rhs_into(&state.u, &state.v, t, sigma, system, &mut ws, &mut du, &mut dv)?;
    Ok((du, dv))
}

/// Single-step integrator with its scratch space.
struct Stepper<'a> {
    system: &'a System,
    cfg: &'a SolverConfig,
    dt: Time,
    ws: Workspace,
    k: [Vec<f64>; 8],
    tmp_u: Vec<f64>,
    tmp_v: Vec<f64>,
    /// Collocation matrix `Φ[q, k] = φ_k(x_q)`, built for the implicit scheme.
    colloc: Option<DMatrix<f64>>,
}

impl<'a> Stepper<'a> {
    fn new(system: &'a System, cfg: &'a SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = system.modes();
        Ok(Stepper {
            system,
            cfg,
            dt: cfg.step_time(),
            ws: Workspace::new(&system.basis),
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp_u: vec![0.0; n],
            tmp_v: vec![0.0; n],
            colloc: (cfg.scheme == Scheme::ImexMidpoint).then(|| {
                let basis = &system.basis;
                DMatrix::from_fn(basis.grid_len(), n, |q, k| basis.basis_value(k, q))
            }),
        })
    }

    fn step(&mut self, state: &State, sigma: &Symbol) -> Result<State> {
        let next = match self.cfg.scheme {
            Scheme::Rk4Explicit => self.rk4(state, sigma)?,
            Scheme::ImexMidpoint => self.imex(state, sigma)?,
        };
        let norm = next.x_norm(&self.system.basis);
        if !next.is_finite() || !norm.is_finite() || norm > BLOW_UP_NORM {
            return Err(Error::BlowUp {
                time: next.time.to_f64(),
                x_norm: norm,
            });
        }
        Ok(next)
    }

    fn rk4(&mut self, s: &State, sigma: &Symbol) -> Result<State> {
        let h = self.cfg.dt;
        let t0 = s.time;
        let t_half = t0 + self.dt.half();
        let t1 = t0 + self.dt;
        let n = s.u.len();
        let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut self.k;

        rhs_into(&s.u, &s.v, t0, sigma, self.system, &mut self.ws, k1u, k1v)?;
        for i in 0..n {
            self.tmp_u[i] = s.u[i] + 0.5 * h * k1u[i];
            self.tmp_v[i] = s.v[i] + 0.5 * h * k1v[i];
        }
        rhs_into(&self.tmp_u, &self.tmp_v, t_half, sigma, self.system, &mut self.ws, k2u, k2v)?;
        for i in 0..n {
            self.tmp_u[i] = s.u[i] + 0.5 * h * k2u[i];
            self.tmp_v[i] = s.v[i] + 0.5 * h * k2v[i];
        }
        rhs_into(&self.tmp_u, &self.tmp_v, t_half, sigma, self.system, &mut self.ws, k3u, k3v)?;
        for i in 0..n {
            self.tmp_u[i] = s.u[i] + h * k3u[i];
            self.tmp_v[i] = s.v[i] + h * k3v[i];
        }
        rhs_into(&self.tmp_u, &self.tmp_v, t1, sigma, self.system, &mut self.ws, k4u, k4v)?;

        let mut u = s.u.clone();
        let mut v = s.v.clone();
        for i in 0..n {
            u[i] += h / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        Ok(State { u, v, time: t1 })
    }

    /// Solves for the midpoint velocity `m = (v_n + v_{n+1})/2`:
    ///
    /// ```text
    /// G(m) = 2(m - v_n)/dt + Λ(u_n + dt·m/2) + P h(m) + P f(ũ) - σ(t + dt/2) = 0
    /// ```
    ///
    /// with `ũ = u_n + dt·v_n/2`, then `v_{n+1} = 2m - v_n`, `u_{n+1} = u_n + dt·m`.
    fn imex(&mut self, s: &State, sigma: &Symbol) -> Result<State> {
        let h = self.cfg.dt;
        let basis = &self.system.basis;
        let lam = basis.eigenvalues();
        let n = s.u.len();
        let t_half = s.time + self.dt.half();

        // explicit part: Λ u_n + P f(ũ) - σ - 2 v_n/dt
        for i in 0..n {
            self.tmp_u[i] = s.u[i] + 0.5 * h * s.v[i];
        }
        basis.to_physical_into(&self.tmp_u, &mut self.ws.u_grid);
        for (o, &ug) in self.ws.nl_grid.iter_mut().zip(&self.ws.u_grid) {
            *o = self.system.nonlinearity.f(ug);
        }
        check_grid_finite(&self.ws.nl_grid, "collocated f(u)")?;
        basis.to_modal_into(&self.ws.nl_grid, &mut self.ws.proj);
        let a = sigma.amplitude_at(t_half);
        let explicit: Vec<f64> = (0..n)
            .map(|i| lam[i] * s.u[i] + self.ws.proj[i] - a * sigma.profile[i] - 2.0 * s.v[i] / h)
            .collect();
        let scale = 1.0 + explicit.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diag: Vec<f64> = lam.iter().map(|l| 2.0 / h + 0.5 * h * l).collect();

        let weights = basis.quad_weights();
        let grid = basis.grid_len();
        let residual = |m: &[f64], ws: &mut Workspace| -> Result<Vec<f64>> {
            basis.to_physical_into(m, &mut ws.v_grid);
            for (o, &vg) in ws.nl_grid.iter_mut().zip(&ws.v_grid) {
                *o = self.system.damping.h(vg);
            }
            check_grid_finite(&ws.nl_grid, "collocated h(u_t)")?;
            basis.to_modal_into(&ws.nl_grid, &mut ws.proj);
            Ok((0..n).map(|i| diag[i] * m[i] + ws.proj[i] + explicit[i]).collect())
        };
        let inf_norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        let mut m = s.v.clone();
        let mut r = residual(&m, &mut self.ws)?;
        let mut res = inf_norm(&r);
        let mut iterations = 0;
        while res > self.cfg.newton_tol * scale {
            if iterations == self.cfg.newton_max_iter {
                return Err(Error::NewtonDiverged {
                    time: s.time.to_f64(),
                    residual: res,
                    iterations,
                });
            }
            iterations += 1;

            // J = diag + Φᵀ W h'(m(x)) Φ
            basis.to_physical_into(&m, &mut self.ws.v_grid);
            let colloc = self.colloc.as_ref().expect("collocation matrix built for the implicit scheme");
            let mut scaled = colloc.clone();
            for q in 0..grid {
                let dh = weights[q] * self.system.damping.h_prime(self.ws.v_grid[q]);
                scaled.row_mut(q).scale_mut(dh);
            }
            let mut jac = colloc.tr_mul(&scaled);
            for i in 0..n {
                jac[(i, i)] += diag[i];
            }
            let rhs = DVector::from_iterator(n, r.iter().map(|x| -x));
            let delta = match jac.clone().cholesky() {
                Some(c) => c.solve(&rhs),
                None => jac.lu().solve(&rhs).ok_or(Error::NewtonDiverged {
                    time: s.time.to_f64(),
                    residual: res,
                    iterations,
                })?,
            };

            // damped update: halve until the residual decreases
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = m.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
                let tr = residual(&trial, &mut self.ws)?;
                let tres = inf_norm(&tr);
                if tres < res || lambda < 1e-3 {
                    m = trial;
                    r = tr;
                    res = tres;
                    break;
                }
                lambda *= 0.5;
            }
        }

        let u = (0..n).map(|i| s.u[i] + h * m[i]).collect();
        let v = (0..n).map(|i| 2.0 * m[i] - s.v[i]).collect();
        Ok(State {
            u,
            v,
            time: s.time + self.dt,
        })
    }
}

/// Advances `state` by one step of `cfg.dt`, starting at `state.time`.
pub fn step(state: &State, sigma: &Symbol, system: &System, cfg: &SolverConfig) -> Result<State> {
    check_dims(state, sigma, system)?;
    Stepper::new(system, cfg)?.step(state, sigma)
}

/// Number of steps of size `dt` from `tau` to `t`; the span must be a whole
/// number of steps to within 10⁻⁹.
pub fn aligned_steps(tau: Time, t: Time, dt: Time) -> Result<usize> {
    if t < tau {
        return Err(Error::InvalidArgument(format!(
            "final time {t} precedes initial time {tau}"
        )));
    }
    let ratio = (t - tau).ratio(dt);
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 {
        return Err(Error::MisalignedHorizon {
            span: (t - tau).to_f64(),
            dt: dt.to_f64(),
            offset: ratio - n,
        });
    }
    Ok(n as usize)
}

/// `U_σ(t, τ) y`, recorded every `cfg.record_stride` steps. The time stamp of
/// `y` is replaced by `τ`; `t = τ` returns `y` unchanged.
pub fn evolve(
    sigma: &Symbol,
    tau: Time,
    t: Time,
    y: &State,
    system: &System,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    check_dims(y, sigma, system)?;
    let mut stepper = Stepper::new(system, cfg)?;
    let steps = aligned_steps(tau, t, stepper.dt)?;
    let stride = cfg.record_stride;

    let mut current = y.clone().at(tau);
    let mut times = vec![tau];
    let mut states = vec![current.clone()];
    for k in 1..=steps {
        current = stepper.step(&current, sigma)?;
        if k % stride == 0 || k == steps {
            times.push(current.time);
            states.push(current.clone());
        }
    }
    Ok(Trajectory {
        provenance: Provenance {
            symbol: sigma.descriptor(),
            damping: system.damping.name.clone(),
            nonlinearity: system.nonlinearity.name.clone(),
            basis: system.basis.descriptor(),
            scheme: cfg.scheme,
            dt: cfg.dt,
        },
        times,
        states,
        energy: None,
    })
}

/// Final state of `U_σ(t, τ) y` without storing intermediate samples.
pub fn evolve_final(
    sigma: &Symbol,
    tau: Time,
    t: Time,
    y: &State,
    system: &System,
    cfg: &SolverConfig,
) -> Result<State> {
    check_dims(y, sigma, system)?;
    let mut stepper = Stepper::new(system, cfg)?;
    let steps = aligned_steps(tau, t, stepper.dt)?;
    let mut current = y.clone().at(tau);
    for _ in 0..steps {
        current = stepper.step(&current, sigma)?;
    }
    Ok(current)
}

/// States of `U_σ(·, τ) y` at each of the (increasing, aligned) `checkpoints`.
pub fn evolve_checkpoints(
    sigma: &Symbol,
    tau: Time,
    checkpoints: &[Time],
    y: &State,
    system: &System,
    cfg: &SolverConfig,
) -> Result<Vec<State>> {
    check_dims(y, sigma, system)?;
    let mut stepper = Stepper::new(system, cfg)?;
    let mut current = y.clone().at(tau);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        let steps = aligned_steps(current.time, c, stepper.dt)?;
        for _ in 0..steps {
            current = stepper.step(&current, sigma)?;
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// One step of the skew-product semigroup `S(t)(y, σ) = (U_σ(t, 0) y, T(t) σ)`.
/// The returned state is stamped at time 0: the clock lives in the symbol.
pub fn skew_step(
    y: &State,
    sigma: &Symbol,
    t: Time,
    system: &System,
    cfg: &SolverConfig,
) -> Result<(State, Symbol)> {
    let end = evolve_final(sigma, Time::ZERO, t, y, system, cfg)?;
    Ok((end.at(Time::ZERO), sigma.translate(t)))
}
