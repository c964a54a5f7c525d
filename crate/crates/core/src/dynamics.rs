//! Damping `h` and nonlinearity `f`, with numerical audits of the structural
//! hypotheses the dissipativity and compactness estimates rely on.
//!
//! Hypotheses on the damping:
//! - `h ∈ C¹`, `h(0) = 0`, `h` strictly increasing;
//! - `liminf_{|s|→∞} h'(s) > 0`;
//! - `|h(s)| ≤ C₁(1 + |s|^p)` with `p ∈ [1, 5)`.
//!
//! Hypotheses on the nonlinearity:
//! - `|f'(s)| ≤ C₂(1 + |s|^q)` with `q ∈ [0, 2]`;
//! - `liminf_{|s|→∞} f(s)/s > -λ₁`.
//!
//! A `liminf` at infinity cannot be computed, so the audits replace it with a
//! minimum over the finite tail `S₀ ≤ |s| ≤ S_max` and report the margin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar function of one real variable with exact derivative and
/// antiderivative (`F(0) = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ScalarFn {
    /// `Σ c_i |s|^{e_i - 1} s`, the odd extension of `Σ c_i s^{e_i}`.
    /// Exponents must be at least 1.
    OddPowers { terms: Vec<(f64, f64)> },
    /// `a·atan(s) + k·s`.
    Arctan { amplitude: f64, slope: f64 },
    /// Piecewise linear interpolation of `(xs, ys)`, extended linearly past
    /// the end points.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl ScalarFn {
    pub fn zero() -> Self {
        ScalarFn::OddPowers { terms: vec![] }
    }

    pub fn odd_powers(terms: &[(f64, f64)]) -> Self {
        ScalarFn::OddPowers {
            terms: terms.to_vec(),
        }
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidArgument(
                "tabulated function needs at least two (x, y) pairs of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        Ok(ScalarFn::Tabulated { xs, ys })
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarFn::OddPowers { terms } => terms
                .iter()
                .map(|&(c, e)| c * signed_pow(s, e))
                .sum(),
            ScalarFn::Arctan { amplitude, slope } => amplitude * s.atan() + slope * s,
            ScalarFn::Tabulated { xs, ys } => {
                let (i, t) = locate(xs, s);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            ScalarFn::OddPowers { terms } => terms
                .iter()
                .map(|&(c, e)| {
                    if e == 1.0 {
                        c
                    } else {
                        c * e * s.abs().powf(e - 1.0)
                    }
                })
                .sum(),
            ScalarFn::Arctan { amplitude, slope } => amplitude / (1.0 + s * s) + slope,
            ScalarFn::Tabulated { xs, ys } => {
                let (i, _) = locate(xs, s);
                (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
            }
        }
    }

    /// Antiderivative normalized by `F(0) = 0`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match self {
            ScalarFn::OddPowers { terms } => terms
                .iter()
                .map(|&(c, e)| c * s.abs().powf(e + 1.0) / (e + 1.0))
                .sum(),
            ScalarFn::Arctan { amplitude, slope } => {
                amplitude * (s * s.atan() - 0.5 * (s * s).ln_1p()) + 0.5 * slope * s * s
            }
            ScalarFn::Tabulated { .. } => self.tabulated_integral(s) - self.tabulated_integral(0.0),
        }
    }

    /// `∫_{x_0}^s` of the interpolant.
    fn tabulated_integral(&self, s: f64) -> f64 {
        let ScalarFn::Tabulated { xs, ys } = self else {
            unreachable!()
        };
        let seg = |i: usize, a: f64, b: f64| {
            // exact integral of the linear piece i over [a, b]
            let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            let val = |x: f64| ys[i] * (x - xs[i]) + 0.5 * slope * (x - xs[i]).powi(2);
            val(b) - val(a)
        };
        let (k, _) = locate(xs, s);
        let mut total = 0.0;
        for i in 0..k {
            total += seg(i, xs[i], xs[i + 1]);
        }
        total + seg(k, xs[k], s)
    }
}

fn signed_pow(s: f64, e: f64) -> f64 {
    if e == 1.0 {
        s
    } else if e == 3.0 {
        s * s * s
    } else {
        s.abs().powf(e - 1.0) * s
    }
}

/// Segment index and local coordinate for linear interpolation.
fn locate(xs: &[f64], s: f64) -> (usize, f64) {
    let last = xs.len() - 2;
    let i = match xs.partition_point(|x| *x <= s) {
        0 => 0,
        p => (p - 1).min(last),
    };
    (i, (s - xs[i]) / (xs[i + 1] - xs[i]))
}

/// The damping function `h` and its growth metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingSpec {
    pub name: String,
    pub func: ScalarFn,
    /// Growth exponent `p` in `|h(s)| ≤ C₁(1 + |s|^p)`.
    pub growth_exponent: f64,
    /// Growth constant `C₁`.
    pub growth_constant: f64,
}

impl DampingSpec {
    pub fn new(name: impl Into<String>, func: ScalarFn, p: f64, c1: f64) -> Self {
        DampingSpec {
            name: name.into(),
            func,
            growth_exponent: p,
            growth_constant: c1,
        }
    }

    /// `h(s) = k s`.
    pub fn linear(k: f64) -> Self {
        Self::new(format!("linear(k={k})"), ScalarFn::odd_powers(&[(k, 1.0)]), 1.0, k.abs())
    }

    /// `h(s) = s + |s|^{p-1} s` for `p ∈ {2, 3}`.
    pub fn polynomial(p: u32) -> Result<Self> {
        if !(2..=3).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "polynomial damping is defined for p in {{2, 3}}, got {p}"
            )));
        }
        let p = p as f64;
        // |s| + |s|^p ≤ 1 + 2|s|^p
        Ok(Self::new(
            format!("polynomial(p={p})"),
            ScalarFn::odd_powers(&[(1.0, 1.0), (1.0, p)]),
            p,
            2.0,
        ))
    }

    /// `h(s) = a·atan(s) + k·s`: saturating near the origin, linear in the tail.
    pub fn saturating(amplitude: f64, slope: f64) -> Self {
        Self::new(
            format!("saturating(a={amplitude},k={slope})"),
            ScalarFn::Arctan { amplitude, slope },
            1.0,
            (amplitude.abs() * std::f64::consts::FRAC_PI_2).max(slope.abs()),
        )
    }

    pub fn h(&self, s: f64) -> f64 {
        self.func.eval(s)
    }

    pub fn h_prime(&self, s: f64) -> f64 {
        self.func.derivative(s)
    }
}

/// The nonlinearity `f` with antiderivative `F` and growth metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub name: String,
    pub func: ScalarFn,
    /// Growth exponent `q` in `|f'(s)| ≤ C₂(1 + |s|^q)`.
    pub growth_exponent: f64,
    /// Growth constant `C₂` (called `f_growth_constant` in reports).
    pub growth_constant: f64,
}

impl NonlinearitySpec {
    pub fn new(name: impl Into<String>, func: ScalarFn, q: f64, c2: f64) -> Self {
        NonlinearitySpec {
            name: name.into(),
            func,
            growth_exponent: q,
            growth_constant: c2,
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", ScalarFn::zero(), 0.0, 1.0)
    }

    /// `f(u) = u`.
    pub fn linear() -> Self {
        Self::new("linear", ScalarFn::odd_powers(&[(1.0, 1.0)]), 0.0, 1.0)
    }

    /// `f(u) = u³ - u`.
    pub fn cubic_double_well() -> Self {
        Self::new(
            "cubic_double_well",
            ScalarFn::odd_powers(&[(1.0, 3.0), (-1.0, 1.0)]),
            2.0,
            3.0,
        )
    }

    /// `f(u) = u³`.
    pub fn cubic() -> Self {
        Self::new("cubic", ScalarFn::odd_powers(&[(1.0, 3.0)]), 2.0, 3.0)
    }

    /// `f(u) = |u|^q u - u` for `q ∈ [0, 2]`.
    pub fn power_minus_linear(q: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&q) {
            return Err(Error::InvalidArgument(format!(
                "power nonlinearity needs q in [0, 2], got {q}"
            )));
        }
        Ok(Self::new(
            format!("power_minus_linear(q={q})"),
            ScalarFn::odd_powers(&[(1.0, q + 1.0), (-1.0, 1.0)]),
            q,
            q + 2.0,
        ))
    }

    pub fn f(&self, s: f64) -> f64 {
        self.func.eval(s)
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        self.func.derivative(s)
    }

    /// `F(s) = ∫_0^s f`.
    pub fn big_f(&self, s: f64) -> f64 {
        self.func.antiderivative(s)
    }
}

/// Elementwise application of `func` to grid values; fails on the first
/// non-finite output with its grid index.
pub fn apply_pointwise(func: impl Fn(f64) -> f64, values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &s)| {
            let value = func(s);
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::NonFinite {
                    index,
                    value,
                    context: "pointwise evaluation",
                })
            }
        })
        .collect()
}

/// Sampling configuration shared by both audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRange {
    /// Audit range is `[-s_max, s_max]`.
    pub s_max: f64,
    /// Start of the tail used in place of `liminf_{|s|→∞}`.
    pub tail_start: f64,
    pub grid_points: usize,
}

impl Default for AuditRange {
    fn default() -> Self {
        AuditRange {
            s_max: 50.0,
            tail_start: 1.0,
            grid_points: 20_001,
        }
    }
}

impl AuditRange {
    pub fn new(s_max: f64, tail_start: f64, grid_points: usize) -> Self {
        AuditRange {
            s_max,
            tail_start,
            grid_points,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.s_max.is_finite() && self.s_max > 0.0) {
            return Err(Error::InvalidArgument("audit range must be positive".into()));
        }
        if !(self.tail_start >= 0.0 && self.tail_start < self.s_max) {
            return Err(Error::InvalidArgument(format!(
                "tail start {} must lie in [0, {})",
                self.tail_start, self.s_max
            )));
        }
        if self.grid_points < 3 || 2.0 * self.s_max / (self.grid_points - 1) as f64 >= 1e-2 * self.s_max
        {
            return Err(Error::InvalidArgument(format!(
                "{} grid points are too few: spacing must be below 1% of s_max",
                self.grid_points
            )));
        }
        Ok(())
    }

    /// Uniform grid over `[-s_max, s_max]`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        (0..n)
            .map(|i| -self.s_max + 2.0 * self.s_max * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn in_tail(&self, s: f64) -> bool {
        s.abs() >= self.tail_start
    }
}

/// Outcome of one audited hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    /// Short identifier, e.g. `"h(0)=0"` or `"tail_coercivity"`.
    pub id: &'static str,
    pub passed: bool,
    /// Signed margin; positive means the hypothesis holds with room to spare.
    pub margin: f64,
    pub detail: String,
}

/// Audit result: pass/fail per hypothesis plus constants fitted on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub subject: String,
    pub range: AuditRange,
    pub checks: Vec<HypothesisCheck>,
    /// Named fitted constants, in a fixed order.
    pub constants: Vec<(&'static str, f64)>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

fn finite_or_err(s: f64, value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::AuditNonFinite {
            s,
            value,
            what: what.to_string(),
        })
    }
}

/// Audits `h` against the damping hypotheses and fits the constants of
///
/// - `|h(s)|^{(p+1)/p} ≤ C (1 + h(s) s)` (`c_power_bound`),
/// - `h(s) s ≥ α s² - c` with `α` the tail coercivity (`coercivity_offset`),
/// - `½ α s² ≤ h(s) s + C` (`c_half_coercive`).
pub fn audit_damping(spec: &DampingSpec, range: AuditRange) -> Result<AuditReport> {
    range.validate()?;
    let grid = range.grid();
    let mut hs = Vec::with_capacity(grid.len());
    let mut dhs = Vec::with_capacity(grid.len());
    for &s in &grid {
        hs.push(finite_or_err(s, spec.h(s), "h")?);
        dhs.push(finite_or_err(s, spec.h_prime(s), "h'")?);
    }
    let p = spec.growth_exponent;
    let mut checks = Vec::new();

    let h0 = spec.h(0.0);
    checks.push(HypothesisCheck {
        id: "h(0)=0",
        passed: h0.abs() < 1e-12,
        margin: -h0.abs(),
        detail: format!("h(0) = {h0:e}"),
    });

    let min_dh = dhs.iter().cloned().fold(f64::INFINITY, f64::min);
    let positive = dhs.iter().filter(|d| **d > 0.0).count() as f64 / dhs.len() as f64;
    checks.push(HypothesisCheck {
        id: "monotone",
        passed: min_dh >= 0.0 && positive >= 0.99,
        margin: min_dh,
        detail: format!(
            "min h' = {min_dh:e}; h' > 0 on {:.2}% of grid",
            100.0 * positive
        ),
    });

    let tail_min = grid
        .iter()
        .zip(&dhs)
        .filter(|(s, _)| range.in_tail(**s))
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    checks.push(HypothesisCheck {
        id: "tail_coercivity",
        passed: tail_min > 0.0,
        margin: tail_min,
        detail: format!(
            "min h' over {} <= |s| <= {} is {tail_min}",
            range.tail_start, range.s_max
        ),
    });

    let c1 = spec.growth_constant;
    let growth_margin = grid
        .iter()
        .zip(&hs)
        .map(|(s, h)| c1 * (1.0 + s.abs().powf(p)) - h.abs())
        .fold(f64::INFINITY, f64::min);
    checks.push(HypothesisCheck {
        id: "growth",
        passed: (1.0..5.0).contains(&p) && growth_margin >= 0.0,
        margin: growth_margin,
        detail: format!("|h(s)| <= {c1}(1+|s|^{p}); p must lie in [1, 5)"),
    });

    let c_power = grid
        .iter()
        .zip(&hs)
        .map(|(s, h)| {
            let lhs = h.abs().powf((p + 1.0) / p);
            let base = 1.0 + h * s;
            if base > 0.0 {
                lhs / base
            } else if lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let alpha = tail_min.max(0.0);
    let offset = grid
        .iter()
        .zip(&hs)
        .map(|(s, h)| alpha * s * s - h * s)
        .fold(0.0, f64::max);
    let half_offset = grid
        .iter()
        .zip(&hs)
        .map(|(s, h)| 0.5 * alpha * s * s - h * s)
        .fold(0.0, f64::max);

    Ok(AuditReport {
        subject: spec.name.clone(),
        range,
        checks,
        constants: vec![
            ("c_power_bound", c_power),
            ("coercivity_alpha", alpha),
            ("coercivity_offset", offset),
            ("c_half_coercive", half_offset),
            ("h_growth_constant", c1),
        ],
    })
}

/// Audits `f` against the nonlinearity hypotheses, given the first Dirichlet
/// eigenvalue `lambda1` of the active basis.
///
/// The `F' = f` consistency check uses a central difference with step 10⁻⁵
/// and tolerance `10⁻⁶ (1 + |f(s)|)`; the relative part absorbs cancellation
/// in `F(s+ε) - F(s-ε)` when `F` is large.
pub fn audit_nonlinearity(
    spec: &NonlinearitySpec,
    lambda1: f64,
    range: AuditRange,
) -> Result<AuditReport> {
    range.validate()?;
    let grid = range.grid();
    let q = spec.growth_exponent;
    let c2 = spec.growth_constant;
    let mut checks = Vec::new();

    let mut growth_margin = f64::INFINITY;
    let mut tail_min = f64::INFINITY;
    let mut fd_worst: f64 = 0.0;
    let eps = 1e-5;
    for &s in &grid {
        let f = finite_or_err(s, spec.f(s), "f")?;
        let df = finite_or_err(s, spec.f_prime(s), "f'")?;
        finite_or_err(s, spec.big_f(s), "F")?;
        growth_margin = growth_margin.min(c2 * (1.0 + s.abs().powf(q)) - df.abs());
        if range.in_tail(s) && s != 0.0 {
            tail_min = tail_min.min(f / s);
        }
        let fd = (spec.big_f(s + eps) - spec.big_f(s - eps)) / (2.0 * eps);
        fd_worst = fd_worst.max((fd - f).abs() / (1.0 + f.abs()));
    }

    checks.push(HypothesisCheck {
        id: "growth",
        passed: (0.0..=2.0).contains(&q) && growth_margin >= 0.0,
        margin: growth_margin,
        detail: format!("|f'(s)| <= {c2}(1+|s|^{q}); q must lie in [0, 2]"),
    });
    checks.push(HypothesisCheck {
        id: "tail_dissipative",
        passed: tail_min > -lambda1,
        margin: tail_min + lambda1,
        detail: format!(
            "min f(s)/s over {} <= |s| <= {} is {tail_min}, lambda1 = {lambda1}",
            range.tail_start, range.s_max
        ),
    });
    checks.push(HypothesisCheck {
        id: "antiderivative",
        passed: fd_worst < 1e-6,
        margin: 1e-6 - fd_worst,
        detail: format!("max scaled |(F(s+e)-F(s-e))/2e - f(s)| = {fd_worst:e}"),
    });

    Ok(AuditReport {
        subject: spec.name.clone(),
        range,
        checks,
        constants: vec![
            ("tail_ratio_min", tail_min),
            ("f_growth_constant", c2),
        ],
    })
}

/// Fits `(c0, c1)` in the energy lower bound
/// `E₀ ≥ (c0/2)(‖∇u‖² + |u_t|²) - c1`.
///
/// By Poincaré it suffices that `F(s) ≥ -(1 - c0) λ₁ s²/2 - c` on the grid,
/// with `c1 = c·mes(Ω)`. `c0` is half the relative spectral gap
/// `(λ₁ + min(0, tail min f(s)/s)) / λ₁`.
pub fn fit_energy_lower_bound(
    spec: &NonlinearitySpec,
    lambda1: f64,
    domain_measure: f64,
    range: AuditRange,
) -> Result<(f64, f64)> {
    range.validate()?;
    let grid = range.grid();
    let tail_min = grid
        .iter()
        .filter(|s| range.in_tail(**s) && **s != 0.0)
        .map(|&s| spec.f(s) / s)
        .fold(f64::INFINITY, f64::min);
    let gap = ((lambda1 + tail_min.min(0.0)) / lambda1).clamp(0.0, 1.0);
    let c0 = (0.5 * gap).max(1e-3);
    let mut worst: f64 = 0.0;
    for &s in &grid {
        let big_f = finite_or_err(s, spec.big_f(s), "F")?;
        worst = worst.max(-(1.0 - c0) * lambda1 * s * s / 2.0 - big_f);
    }
    Ok((c0, worst * domain_measure))
}
