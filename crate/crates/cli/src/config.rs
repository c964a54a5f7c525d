//! Experiment configuration (TOML). See the README for the full schema.

use std::path::PathBuf;

use attractor_core::dynamics::AuditRange;
use attractor_core::{
    Basis, DampingSpec, HullSample, NonlinearitySpec, ScalarFn, SolverConfig, State, Symbol, SymbolKind, System,
};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Mandatory for randomized experiments.
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Also render SVG plots of the main reports.
    #[serde(default)]
    pub plots: bool,
    pub basis: BasisConfig,
    pub damping: DampingConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    pub solver: SolverConfig,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default = "one")]
    pub dim: usize,
    pub modes: usize,
    #[serde(default = "default_lengths")]
    pub lengths: Vec<f64>,
}

fn one() -> usize {
    1
}

fn default_lengths() -> Vec<f64> {
    vec![std::f64::consts::PI]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingConfig {
    Linear {
        #[serde(default = "unit")]
        k: f64,
    },
    Polynomial {
        p: u32,
    },
    Saturating {
        amplitude: f64,
        slope: f64,
    },
    Custom {
        name: String,
        func: ScalarFn,
        growth_exponent: f64,
        growth_constant: f64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Zero,
    Linear,
    Cubic,
    CubicDoubleWell,
    PowerMinusLinear {
        q: f64,
    },
    Custom {
        name: String,
        func: ScalarFn,
        growth_exponent: f64,
        growth_constant: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default = "zero_waveform")]
    pub waveform: SymbolKind,
    /// Modal profile; missing entries are zero.
    #[serde(default)]
    pub profile: Vec<f64>,
    /// Extra hull shifts; shift 0 is always included.
    #[serde(default)]
    pub hull_shifts: Vec<f64>,
    /// Additional seeded random shifts drawn from `[0, max_shift)`.
    #[serde(default)]
    pub hull_random: Option<RandomHull>,
}

fn zero_waveform() -> SymbolKind {
    SymbolKind::Zero
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            waveform: SymbolKind::Zero,
            profile: Vec::new(),
            hull_shifts: Vec::new(),
            hull_random: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomHull {
    pub count: usize,
    pub max_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub u: Vec<f64>,
    #[serde(default)]
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Simulate {
        horizon: f64,
        #[serde(default)]
        epsilon: f64,
        #[serde(default)]
        with_modes: bool,
        initial: InitialConfig,
    },
    Audit {
        #[serde(default)]
        range: Option<AuditRange>,
    },
    Absorbing {
        radius: f64,
        count: usize,
        horizon: f64,
        #[serde(default = "default_uniformity")]
        uniformity_factor: f64,
    },
    Compactness {
        radius: f64,
        count: usize,
        absorb_horizon: f64,
        delta: f64,
        horizons: Vec<f64>,
        pairs: usize,
    },
    Attractor {
        radius: f64,
        count: usize,
        sample_times: Vec<f64>,
        checkpoints: Vec<f64>,
    },
    Pullback {
        s: f64,
        horizons: Vec<f64>,
        radius: f64,
        count: usize,
    },
}

fn default_uniformity() -> f64 {
    1.5
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate { .. } => "simulate",
            Experiment::Audit { .. } => "audit",
            Experiment::Absorbing { .. } => "absorbing",
            Experiment::Compactness { .. } => "compactness",
            Experiment::Attractor { .. } => "attractor",
            Experiment::Pullback { .. } => "pullback",
        }
    }

    pub fn is_randomized(&self) -> bool {
        !matches!(self, Experiment::Simulate { .. } | Experiment::Audit { .. })
    }
}

/// Parses the TOML text. Errors name the offending field path, e.g.
/// `solver.dt`.
pub fn parse(text: &str) -> Result<ExperimentConfig, Failure> {
    let de = toml::Deserializer::parse(text).map_err(|e| Failure::Schema {
        field: String::new(),
        message: e.message().to_string(),
    })?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut field = e.path().to_string();
        let message = e.inner().message().to_string();
        if let Some(missing) = missing_field(&message) {
            field = if field == "." || field.is_empty() {
                missing.to_string()
            } else {
                format!("{field}.{missing}")
            };
        }
        if field == "." {
            field.clear();
        }
        Failure::Schema { field, message }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

fn schema(field: &str, message: impl ToString) -> Failure {
    Failure::Schema {
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn positive(field: &str, x: f64) -> Result<(), Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(schema(field, format!("must be positive, got {x}")))
    }
}

fn increasing(field: &str, xs: &[f64]) -> Result<(), Failure> {
    if xs.is_empty() {
        return Err(schema(field, "must not be empty"));
    }
    if xs.iter().any(|x| !x.is_finite() || *x < 0.0) || xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(schema(field, "must be non-negative and strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Checks that go beyond the shape of the file.
    pub fn validate(&self) -> Result<(), Failure> {
        positive("solver.dt", self.solver.dt)?;
        self.solver.validate().map_err(|e| schema("solver", e))?;
        if self.experiment.is_randomized() && self.seed.is_none() {
            return Err(schema(
                "seed",
                format!("a seed is required for the randomized '{}' experiment", self.experiment.name()),
            ));
        }
        match &self.experiment {
            Experiment::Simulate { horizon, epsilon, .. } => {
                positive("experiment.horizon", *horizon)?;
                if !(*epsilon >= 0.0) {
                    return Err(schema("experiment.epsilon", "must be non-negative"));
                }
            }
            Experiment::Audit { .. } => {}
            Experiment::Absorbing { radius, horizon, uniformity_factor, .. } => {
                if !(*radius >= 0.0) {
                    return Err(schema("experiment.radius", "must be non-negative"));
                }
                positive("experiment.horizon", *horizon)?;
                positive("experiment.uniformity_factor", *uniformity_factor)?;
            }
            Experiment::Compactness { radius, absorb_horizon, delta, horizons, pairs, .. } => {
                if !(*radius >= 0.0) {
                    return Err(schema("experiment.radius", "must be non-negative"));
                }
                positive("experiment.absorb_horizon", *absorb_horizon)?;
                positive("experiment.delta", *delta)?;
                increasing("experiment.horizons", horizons)?;
                if *pairs == 0 {
                    return Err(schema("experiment.pairs", "must be at least 1"));
                }
            }
            Experiment::Attractor { sample_times, checkpoints, .. } => {
                increasing("experiment.sample_times", sample_times)?;
                increasing("experiment.checkpoints", checkpoints)?;
            }
            Experiment::Pullback { horizons, .. } => increasing("experiment.horizons", horizons)?,
        }
        Ok(())
    }

    pub fn system(&self) -> Result<System, Failure> {
        let b = &self.basis;
        let basis = Basis::new(b.dim, b.modes, &b.lengths).map_err(|e| schema("basis", e))?;
        let damping = match &self.damping {
            DampingConfig::Linear { k } => DampingSpec::linear(*k),
            DampingConfig::Polynomial { p } => DampingSpec::polynomial(*p).map_err(|e| schema("damping.p", e))?,
            DampingConfig::Saturating { amplitude, slope } => DampingSpec::saturating(*amplitude, *slope),
            DampingConfig::Custom { name, func, growth_exponent, growth_constant } => {
                DampingSpec::new(name.clone(), func.clone(), *growth_exponent, *growth_constant)
            }
        };
        let nonlinearity = match &self.nonlinearity {
            NonlinearityConfig::Zero => NonlinearitySpec::zero(),
            NonlinearityConfig::Linear => NonlinearitySpec::linear(),
            NonlinearityConfig::Cubic => NonlinearitySpec::cubic(),
            NonlinearityConfig::CubicDoubleWell => NonlinearitySpec::cubic_double_well(),
            NonlinearityConfig::PowerMinusLinear { q } => {
                NonlinearitySpec::power_minus_linear(*q).map_err(|e| schema("nonlinearity.q", e))?
            }
            NonlinearityConfig::Custom { name, func, growth_exponent, growth_constant } => {
                NonlinearitySpec::new(name.clone(), func.clone(), *growth_exponent, *growth_constant)
            }
        };
        Ok(System::new(basis, damping, nonlinearity))
    }

    pub fn symbol(&self, modes: usize) -> Result<Symbol, Failure> {
        let f = &self.forcing;
        if f.profile.len() > modes {
            return Err(schema(
                "forcing.profile",
                format!("{} coefficients given for {modes} modes", f.profile.len()),
            ));
        }
        let mut profile = f.profile.clone();
        profile.resize(modes, 0.0);
        Symbol::new(f.waveform.clone(), profile).map_err(|e| schema("forcing.waveform", e))
    }

    pub fn hull(&self, base: &Symbol) -> Result<HullSample, Failure> {
        let f = &self.forcing;
        match &f.hull_random {
            Some(r) => {
                let seed = self.seed.ok_or_else(|| schema("seed", "random hull shifts need a seed"))?;
                positive("forcing.hull_random.max_shift", r.max_shift)?;
                HullSample::seeded(base, &f.hull_shifts, r.count, r.max_shift, seed)
                    .map_err(|e| schema("forcing.hull_random", e))
            }
            None => HullSample::new(base, &f.hull_shifts).map_err(|e| schema("forcing.hull_shifts", e)),
        }
    }

    pub fn initial_state(&self, modes: usize) -> Result<State, Failure> {
        let Experiment::Simulate { initial, .. } = &self.experiment else {
            return Ok(State::zero(modes));
        };
        for (field, xs) in [("experiment.initial.u", &initial.u), ("experiment.initial.v", &initial.v)] {
            if xs.len() > modes {
                return Err(schema(field, format!("{} coefficients given for {modes} modes", xs.len())));
            }
        }
        let (mut u, mut v) = (initial.u.clone(), initial.v.clone());
        u.resize(modes, 0.0);
        v.resize(modes, 0.0);
        State::new(u, v, attractor_core::Time::ZERO).map_err(|e| schema("experiment.initial", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[basis]
modes = 8

[damping]
kind = "linear"
k = 0.0

[nonlinearity]
kind = "zero"

[solver]
dt = 0.01

[experiment]
kind = "simulate"
horizon = 1.0
initial = { u = [1.0] }
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.basis.modes, 8);
        assert_eq!(cfg.forcing.waveform, SymbolKind::Zero);
        assert_eq!(cfg.experiment.name(), "simulate");
        let sys = cfg.system().unwrap();
        assert_eq!(cfg.initial_state(sys.modes()).unwrap().u[0], 1.0);
    }

    #[test]
    fn missing_dt_names_the_field() {
        let text = MINIMAL.replace("dt = 0.01", "");
        match parse(&text) {
            Err(Failure::Schema { field, .. }) => assert_eq!(field, "solver.dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_values_name_the_field() {
        let text = MINIMAL.replace("dt = 0.01", "dt = -1.0");
        assert!(matches!(parse(&text), Err(Failure::Schema { field, .. }) if field == "solver.dt"));
        let text = MINIMAL.replace("modes = 8", "modes = \"eight\"");
        assert!(matches!(parse(&text), Err(Failure::Schema { field, .. }) if field == "basis.modes"));
        let text = MINIMAL.replace("[basis]", "[basis]\nbogus = 1");
        assert!(matches!(parse(&text), Err(Failure::Schema { field, .. }) if field.starts_with("basis")));
    }

    #[test]
    fn randomized_experiments_need_a_seed() {
        let text = MINIMAL.replace(
            "kind = \"simulate\"\nhorizon = 1.0\ninitial = { u = [1.0] }",
            "kind = \"absorbing\"\nradius = 1.0\ncount = 2\nhorizon = 1.0",
        );
        assert!(matches!(parse(&text), Err(Failure::Schema { field, .. }) if field == "seed"));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = parse(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }
}
