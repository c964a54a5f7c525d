//! Forcing symbols `σ(t) = g(·, t + shift)`, the translation semigroup and
//! finite samples of the hull `{g₀(·, t + h) : h ∈ ℝ}`.
//!
//! Every built-in symbol is a scalar waveform times a fixed modal profile,
//! so norms reduce to `|a(t)|·‖profile‖`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Time;

/// Scalar time waveform `a(t)` of a forcing symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolKind {
    Zero,
    Constant {
        level: f64,
    },
    /// `amplitude · sin(frequency·t + phase)`.
    Periodic {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · Σ_i sin(ω_i t)`; incommensurate frequencies give a
    /// quasi-periodic signal.
    Quasiperiodic {
        amplitude: f64,
        frequencies: Vec<f64>,
    },
    /// Switches between `low` and `high` on unit plateaus centred at `±2^k`,
    /// `k ≥ 1`, with C¹ ramps of width `ramp ∈ (0, 1/2]`. The plateaus get
    /// sparser in both time directions while `a` and `a'` stay bounded.
    RampedSwitch {
        low: f64,
        high: f64,
        ramp: f64,
    },
}

impl SymbolKind {
    fn value(&self, t: f64) -> f64 {
        match self {
            SymbolKind::Zero => 0.0,
            SymbolKind::Constant { level } => *level,
            SymbolKind::Periodic {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).sin(),
            SymbolKind::Quasiperiodic {
                amplitude,
                frequencies,
            } => amplitude * frequencies.iter().map(|w| (w * t).sin()).sum::<f64>(),
            SymbolKind::RampedSwitch { low, high, ramp } => {
                let (b, _) = switch_bump(t.abs(), *ramp);
                low + (high - low) * b
            }
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match self {
            SymbolKind::Zero | SymbolKind::Constant { .. } => 0.0,
            SymbolKind::Periodic {
                amplitude,
                frequency,
                phase,
            } => amplitude * frequency * (frequency * t + phase).cos(),
            SymbolKind::Quasiperiodic {
                amplitude,
                frequencies,
            } => amplitude * frequencies.iter().map(|w| w * (w * t).cos()).sum::<f64>(),
            SymbolKind::RampedSwitch { low, high, ramp } => {
                let (_, db) = switch_bump(t.abs(), *ramp);
                (high - low) * db * t.signum()
            }
        }
    }

    /// Sup of `|a|` over all of ℝ, when known in closed form.
    fn sup_abs(&self) -> f64 {
        match self {
            SymbolKind::Zero => 0.0,
            SymbolKind::Constant { level } => level.abs(),
            SymbolKind::Periodic { amplitude, .. } => amplitude.abs(),
            SymbolKind::Quasiperiodic {
                amplitude,
                frequencies,
            } => amplitude.abs() * frequencies.len() as f64,
            SymbolKind::RampedSwitch { low, high, .. } => low.abs().max(high.abs()),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            SymbolKind::Zero => true,
            SymbolKind::Constant { level } => level.is_finite(),
            SymbolKind::Periodic {
                amplitude,
                frequency,
                phase,
            } => amplitude.is_finite() && frequency.is_finite() && phase.is_finite(),
            SymbolKind::Quasiperiodic {
                amplitude,
                frequencies,
            } => amplitude.is_finite() && frequencies.iter().all(|w| w.is_finite()),
            SymbolKind::RampedSwitch { low, high, ramp } => {
                low.is_finite() && high.is_finite() && *ramp > 0.0 && *ramp <= 0.5
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid symbol parameters: {self:?}")))
        }
    }
}

/// Plateau indicator and its derivative for the switching waveform at `x ≥ 0`.
fn switch_bump(x: f64, ramp: f64) -> (f64, f64) {
    let plateau = |d: f64| -> (f64, f64) {
        // d is the signed offset from a centre
        let a = d.abs();
        if a <= 0.5 {
            (1.0, 0.0)
        } else if a < 0.5 + ramp {
            let z = (a - 0.5) / ramp;
            (1.0 - z * z * (3.0 - 2.0 * z), -6.0 * z * (1.0 - z) / ramp * d.signum())
        } else {
            (0.0, 0.0)
        }
    };
    let k = if x < 2.0 { 1 } else { x.log2().floor() as i32 };
    let mut best = (0.0, 0.0);
    for e in [k, k + 1] {
        let c = 2f64.powi(e.max(1));
        let (b, db) = plateau(x - c);
        if b > best.0 {
            best = (b, db);
        }
    }
    best
}

/// A time-dependent forcing `σ(t) = a(t + shift) · profile` in modal
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Symbol {
    pub kind: SymbolKind,
    pub profile: Vec<f64>,
    pub shift: Time,
    /// Integrability exponent `r` of `∂_t g`; recorded metadata only.
    #[serde(default = "default_r")]
    pub r: f64,
}

fn default_r() -> f64 {
    2.0
}

impl Symbol {
    pub fn new(kind: SymbolKind, profile: Vec<f64>) -> Result<Self> {
        kind.validate()?;
        if profile.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("symbol profile must be finite".into()));
        }
        Ok(Symbol {
            kind,
            profile,
            shift: Time::ZERO,
            r: default_r(),
        })
    }

    pub fn zero(modes: usize) -> Self {
        Symbol {
            kind: SymbolKind::Zero,
            profile: vec![0.0; modes],
            shift: Time::ZERO,
            r: default_r(),
        }
    }

    /// Unit profile on a single mode (0-based index into the sorted basis).
    pub fn unit_profile(modes: usize, mode: usize) -> Vec<f64> {
        let mut p = vec![0.0; modes];
        p[mode] = 1.0;
        p
    }

    pub fn modes(&self) -> usize {
        self.profile.len()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, SymbolKind::Zero) || self.profile.iter().all(|x| *x == 0.0)
    }

    /// Identifier used in provenance headers.
    pub fn descriptor(&self) -> String {
        let kind = match &self.kind {
            SymbolKind::Zero => "zero".to_string(),
            SymbolKind::Constant { level } => format!("constant({level})"),
            SymbolKind::Periodic {
                amplitude,
                frequency,
                phase,
            } => format!("periodic(a={amplitude},w={frequency},phi={phase})"),
            SymbolKind::Quasiperiodic {
                amplitude,
                frequencies,
            } => format!("quasiperiodic(a={amplitude},w={frequencies:?})"),
            SymbolKind::RampedSwitch { low, high, ramp } => {
                format!("ramped_switch(lo={low},hi={high},ramp={ramp})")
            }
        };
        format!("{kind}@shift={}", self.shift)
    }

    /// Scalar waveform value at exact time `t`.
    pub fn amplitude_at(&self, t: Time) -> f64 {
        self.kind.value((t + self.shift).to_f64())
    }

    pub fn amplitude_dt_at(&self, t: Time) -> f64 {
        self.kind.derivative((t + self.shift).to_f64())
    }

    pub fn evaluate_at(&self, t: Time) -> Vec<f64> {
        let a = self.amplitude_at(t);
        self.profile.iter().map(|p| a * p).collect()
    }

    pub fn evaluate_dt_at(&self, t: Time) -> Vec<f64> {
        let a = self.amplitude_dt_at(t);
        self.profile.iter().map(|p| a * p).collect()
    }

    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        self.evaluate_at(Time::from_f64(t))
    }

    pub fn evaluate_dt(&self, t: f64) -> Vec<f64> {
        self.evaluate_dt_at(Time::from_f64(t))
    }

    /// `‖σ(t)‖_{L²}` via Parseval.
    pub fn l2_norm_at(&self, t: Time) -> f64 {
        self.amplitude_at(t).abs() * profile_norm(&self.profile)
    }

    /// Translation `T(s)σ = σ(· + s)`; shifts compose exactly.
    pub fn translate(&self, s: Time) -> Symbol {
        Symbol {
            shift: self.shift + s,
            ..self.clone()
        }
    }

    /// Upper bound for `sup_t ‖σ(t)‖` over the whole line.
    pub fn sup_norm_bound(&self) -> f64 {
        self.kind.sup_abs() * profile_norm(&self.profile)
    }
}

fn profile_norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_scan(window: (f64, f64), dt_scan: f64) -> Result<()> {
    if !(dt_scan > 0.0 && dt_scan.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scan step must be positive, got {dt_scan}"
        )));
    }
    if !(window.0.is_finite() && window.1.is_finite() && window.1 > window.0) {
        return Err(Error::InvalidArgument(format!("invalid scan window {window:?}")));
    }
    Ok(())
}

/// Translation-bounded norm `sup_t ∫_t^{t+1} ‖σ(s)‖² ds`, with window starts
/// scanned over `[t₀, t₁ - 1]` at step `dt_scan` and each unit integral done
/// by the composite trapezoid rule at the same resolution.
pub fn l2b_norm(sigma: &Symbol, window: (f64, f64), dt_scan: f64) -> Result<f64> {
    check_scan(window, dt_scan)?;
    if window.1 <= window.0 + 1.0 {
        return Err(Error::InvalidArgument(
            "scan window must be longer than one time unit".into(),
        ));
    }
    let sub = (1.0 / dt_scan).ceil().max(1.0) as usize;
    let h = 1.0 / sub as f64;
    let starts = ((window.1 - 1.0 - window.0) / dt_scan).floor() as usize;
    let sq = |t: f64| sigma.l2_norm_at(Time::from_f64(t)).powi(2);
    let mut best: f64 = 0.0;
    for j in 0..=starts {
        let t = window.0 + j as f64 * dt_scan;
        let mut acc = 0.5 * (sq(t) + sq(t + 1.0));
        for i in 1..sub {
            acc += sq(t + i as f64 * h);
        }
        best = best.max(acc * h);
    }
    Ok(best)
}

/// `sup_t ‖σ(t)‖_{L²}` sampled over `[t₀, t₁]` at step `dt_scan`.
pub fn linf_norm(sigma: &Symbol, window: (f64, f64), dt_scan: f64) -> Result<f64> {
    check_scan(window, dt_scan)?;
    let n = ((window.1 - window.0) / dt_scan).floor() as usize;
    Ok((0..=n)
        .map(|j| sigma.l2_norm_at(Time::from_f64(window.0 + j as f64 * dt_scan)))
        .fold(0.0, f64::max))
}

/// Finite sample `{T(h)g₀ : h ∈ shifts}` of the hull of `g₀`; shift 0 is
/// always included as the first member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullSample {
    pub base: Symbol,
    pub shifts: Vec<Time>,
    pub symbols: Vec<Symbol>,
}

impl HullSample {
    pub fn new(base: &Symbol, shifts: &[f64]) -> Result<Self> {
        if let Some(s) = shifts.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite hull shift {s}")));
        }
        let mut times: Vec<Time> = shifts.iter().map(|&s| Time::from_f64(s)).collect();
        if !times.contains(&Time::ZERO) {
            times.insert(0, Time::ZERO);
        }
        let symbols = times.iter().map(|&s| base.translate(s)).collect();
        Ok(HullSample {
            base: base.clone(),
            shifts: times,
            symbols,
        })
    }

    /// Shift 0 plus `count - 1` shifts drawn uniformly from `[0, max_shift)`.
    pub fn random(base: &Symbol, count: usize, max_shift: f64, rng: &mut impl Rng) -> Result<Self> {
        let shifts: Vec<f64> = std::iter::once(0.0)
            .chain((1..count.max(1)).map(|_| rng.random_range(0.0..max_shift.max(f64::MIN_POSITIVE))))
            .collect();
        Self::new(base, &shifts)
    }

    /// `fixed` shifts followed by `count` shifts drawn from `[0, max_shift)`
    /// with a ChaCha8 stream seeded by `seed`.
    pub fn seeded(base: &Symbol, fixed: &[f64], count: usize, max_shift: f64, seed: u64) -> Result<Self> {
        if !(max_shift > 0.0 && max_shift.is_finite()) {
            return Err(Error::InvalidArgument(format!("max_shift must be positive, got {max_shift}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts: Vec<f64> = fixed
            .iter()
            .copied()
            .chain((0..count).map(|_| rng.random_range(0.0..max_shift)))
            .collect();
        Self::new(base, &shifts)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Convenience wrapper mirroring [`HullSample::new`].
pub fn hull_sample(base: &Symbol, shifts: &[f64]) -> Result<HullSample> {
    HullSample::new(base, shifts)
}
