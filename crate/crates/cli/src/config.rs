//! JSON run configuration. Every level rejects unknown keys.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use entwit_core::{IntegratorConfig, OptimizerConfig, StateSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    RhoNk,
    TwistedGhzNoise,
    TwistedMixture,
    OneAxisTwisting,
    IsingLindblad,
    CustomState,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::RhoNk => "rho-nk",
            ScenarioName::TwistedGhzNoise => "twisted-ghz-noise",
            ScenarioName::TwistedMixture => "twisted-mixture",
            ScenarioName::OneAxisTwisting => "one-axis-twisting",
            ScenarioName::IsingLindblad => "ising-lindblad",
            ScenarioName::CustomState => "custom-state",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: String,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { path: ".".into(), format: Format::Both }
    }
}

/// `start`, `stop` and an approximate `step`. The step is adjusted so that
/// both endpoints are hit exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Grid { start, stop, step }
    }

    fn validate(&self, field: &str) -> Result<(), String> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(format!("{field}: need finite start <= stop, got [{}, {}]", self.start, self.stop));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(format!("{field}.step must be positive, got {}", self.step));
        }
        if (self.stop - self.start) / self.step > 1e7 {
            return Err(format!("{field}: more than 1e7 points"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step).round() as usize;
        if count == 0 {
            return vec![self.start];
        }
        (0..=count).map(|i| self.start + (self.stop - self.start) * i as f64 / count as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RhoNkParams {
    pub n: usize,
    /// Block sizes to sweep. Empty means `1..=n`.
    pub k: Vec<usize>,
}

impl Default for RhoNkParams {
    fn default() -> Self {
        RhoNkParams { n: 6, k: Vec::new() }
    }
}

/// Shared by `twisted-ghz-noise` and `twisted-mixture`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistedParams {
    /// Block size; the state has `3k` qubits.
    #[serde(default = "one")]
    pub k: usize,
    pub p: Grid,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneAxisTwistingParams {
    pub n: usize,
    pub coupling: f64,
    /// Output grid of `J0 t`; witnesses are evaluated every `stride`-th point.
    pub t: Grid,
}

impl Default for OneAxisTwistingParams {
    fn default() -> Self {
        OneAxisTwistingParams { n: 8, coupling: 1.0, t: Grid::new(0.0, 2.0 * PI, 0.01) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsingLindbladParams {
    pub n: usize,
    pub alpha: f64,
    pub field: f64,
    pub coupling: f64,
    pub gamma: f64,
    pub t: Grid,
    /// Defaults to `|down y>^(n/2) (x) |down x>^(n/2)`.
    pub initial: Option<StateSpec>,
}

impl Default for IsingLindbladParams {
    fn default() -> Self {
        IsingLindbladParams {
            n: 8,
            alpha: 0.2,
            field: 1.0,
            coupling: 1.0,
            gamma: 0.01,
            t: Grid::new(0.0, 3.0, 0.01),
            initial: None,
        }
    }
}

/// A density matrix given as real and imaginary parts, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixInput {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CustomStateParams {
    pub states: Vec<StateSpec>,
    pub matrices: Vec<MatrixInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameters {
    RhoNk(RhoNkParams),
    TwistedGhzNoise(TwistedParams),
    TwistedMixture(TwistedParams),
    OneAxisTwisting(OneAxisTwistingParams),
    IsingLindblad(IsingLindbladParams),
    CustomState(CustomStateParams),
}

impl Parameters {
    pub fn defaults(name: ScenarioName) -> Self {
        match name {
            ScenarioName::RhoNk => Parameters::RhoNk(RhoNkParams::default()),
            ScenarioName::TwistedGhzNoise => {
                Parameters::TwistedGhzNoise(TwistedParams { k: 1, p: Grid::new(0.0, 10.0, 0.05) })
            }
            ScenarioName::TwistedMixture => {
                Parameters::TwistedMixture(TwistedParams { k: 1, p: Grid::new(0.0, 1.0, 0.01) })
            }
            ScenarioName::OneAxisTwisting => Parameters::OneAxisTwisting(OneAxisTwistingParams::default()),
            ScenarioName::IsingLindblad => Parameters::IsingLindblad(IsingLindbladParams::default()),
            ScenarioName::CustomState => Parameters::CustomState(CustomStateParams::default()),
        }
    }

    /// Parses `value` as the parameter block of `name`. Missing keys take
    /// their defaults.
    pub fn parse(name: ScenarioName, value: Value) -> Result<Self, String> {
        let mut merged = serde_json::to_value(Self::defaults(name)).expect("defaults serialize");
        let Value::Object(given) = value else {
            return Err("parameters must be a JSON object".into());
        };
        let Value::Object(base) = &mut merged else { unreachable!() };
        for (k, v) in given {
            base.insert(k, v);
        }
        let err = |e: serde_json::Error| format!("parameters: {e}");
        Ok(match name {
            ScenarioName::RhoNk => Parameters::RhoNk(serde_json::from_value(merged).map_err(err)?),
            ScenarioName::TwistedGhzNoise => Parameters::TwistedGhzNoise(serde_json::from_value(merged).map_err(err)?),
            ScenarioName::TwistedMixture => Parameters::TwistedMixture(serde_json::from_value(merged).map_err(err)?),
            ScenarioName::OneAxisTwisting => Parameters::OneAxisTwisting(serde_json::from_value(merged).map_err(err)?),
            ScenarioName::IsingLindblad => Parameters::IsingLindblad(serde_json::from_value(merged).map_err(err)?),
            ScenarioName::CustomState => Parameters::CustomState(serde_json::from_value(merged).map_err(err)?),
        })
    }

    fn validate(&self) -> Result<(), String> {
        let positive = |field: &str, v: usize| if v == 0 { Err(format!("parameters.{field} must be positive")) } else { Ok(()) };
        match self {
            Parameters::RhoNk(p) => {
                positive("n", p.n)?;
                if let Some(&k) = p.k.iter().find(|&&k| k == 0 || k > p.n) {
                    return Err(format!("parameters.k: {k} is outside 1..={}", p.n));
                }
            }
            Parameters::TwistedGhzNoise(p) | Parameters::TwistedMixture(p) => {
                positive("k", p.k)?;
                p.p.validate("parameters.p")?;
                if p.p.start < 0.0 {
                    return Err("parameters.p must be non-negative".into());
                }
                if matches!(self, Parameters::TwistedMixture(_)) && p.p.stop > 1.0 {
                    return Err("parameters.p must lie in [0, 1] for twisted-mixture".into());
                }
            }
            Parameters::OneAxisTwisting(p) => {
                positive("n", p.n)?;
                p.t.validate("parameters.t")?;
                if !p.coupling.is_finite() {
                    return Err("parameters.coupling must be finite".into());
                }
            }
            Parameters::IsingLindblad(p) => {
                positive("n", p.n)?;
                p.t.validate("parameters.t")?;
                if p.t.start != 0.0 {
                    return Err("parameters.t.start must be 0".into());
                }
                if !(p.gamma >= 0.0) {
                    return Err(format!("parameters.gamma must be non-negative, got {}", p.gamma));
                }
                for (name, v) in [("alpha", p.alpha), ("field", p.field), ("coupling", p.coupling)] {
                    if !v.is_finite() {
                        return Err(format!("parameters.{name} must be finite"));
                    }
                }
            }
            Parameters::CustomState(p) => {
                if p.states.is_empty() && p.matrices.is_empty() {
                    return Err("parameters: custom-state needs at least one entry in states or matrices".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub schema: u32,
    pub scenario: ScenarioName,
    pub parameters: Parameters,
    pub optimizer: OptimizerConfig,
    pub integrator: IntegratorConfig,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
    /// Evaluate witnesses on every `stride`-th point of a time grid.
    pub stride: usize,
    pub output: OutputConfig,
}

/// Raw file layout, before the parameter block is typed.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    scenario: ScenarioName,
    #[serde(default)]
    parameters: Option<Value>,
    #[serde(default)]
    optimizer: OptimizerConfig,
    #[serde(default)]
    integrator: IntegratorConfig,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    stride: Option<usize>,
    #[serde(default)]
    output: OutputConfig,
}

pub const DEFAULT_STRIDE: usize = 10;

impl Config {
    pub fn defaults(scenario: ScenarioName) -> Self {
        Config {
            schema: SCHEMA_VERSION,
            scenario,
            parameters: Parameters::defaults(scenario),
            optimizer: OptimizerConfig::default(),
            integrator: IntegratorConfig::default(),
            threads: None,
            stride: DEFAULT_STRIDE,
            output: OutputConfig::default(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.optimizer.rng_seed
    }

    pub fn set_scenario(&mut self, scenario: ScenarioName) {
        if scenario != self.scenario {
            self.scenario = scenario;
            self.parameters = Parameters::defaults(scenario);
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema != SCHEMA_VERSION {
            return Err(format!("schema: unsupported version {}, expected {SCHEMA_VERSION}", self.schema));
        }
        if self.stride == 0 {
            return Err("stride must be positive".into());
        }
        if self.threads == Some(0) {
            return Err("threads must be positive".into());
        }
        self.optimizer.validate().map_err(|e| format!("optimizer: {e}"))?;
        self.integrator.validate().map_err(|e| format!("integrator: {e}"))?;
        self.parameters.validate()
    }
}

impl FromStr for Config {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let parameters = match raw.parameters {
            Some(v) => Parameters::parse(raw.scenario, v)?,
            None => Parameters::defaults(raw.scenario),
        };
        let mut optimizer = raw.optimizer;
        if let Some(seed) = raw.seed {
            optimizer.rng_seed = seed;
        }
        let config = Config {
            schema: raw.schema,
            scenario: raw.scenario,
            parameters,
            optimizer,
            integrator: raw.integrator,
            threads: raw.threads,
            stride: raw.stride.unwrap_or(DEFAULT_STRIDE),
            output: raw.output,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Serialized form, readable back by [`Config::from_str`].
pub fn to_json(config: &Config) -> Value {
    serde_json::json!({
        "schema": config.schema,
        "scenario": config.scenario,
        "parameters": config.parameters,
        "optimizer": config.optimizer,
        "integrator": config.integrator,
        "seed": config.seed(),
        "threads": config.threads,
        "stride": config.stride,
        "output": config.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [ScenarioName; 6] = [
        ScenarioName::RhoNk,
        ScenarioName::TwistedGhzNoise,
        ScenarioName::TwistedMixture,
        ScenarioName::OneAxisTwisting,
        ScenarioName::IsingLindblad,
        ScenarioName::CustomState,
    ];

    #[test]
    fn defaults_round_trip() {
        for name in ALL {
            let mut c = Config::defaults(name);
            if let Parameters::CustomState(p) = &mut c.parameters {
                p.states.push(StateSpec::Ghz { n: 2 });
            }
            let text = to_json(&c).to_string();
            assert_eq!(text.parse::<Config>().unwrap(), c, "{name}");
        }
    }

    #[test]
    fn partial_parameters_keep_defaults() {
        let c: Config = r#"{"schema": 1, "scenario": "rho-nk", "parameters": {"k": [2]}}"#.parse().unwrap();
        assert_eq!(c.parameters, Parameters::RhoNk(RhoNkParams { n: 6, k: vec![2] }));
        assert_eq!(c.stride, DEFAULT_STRIDE);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"schema": 1, "scenario": "rho-nk", "bogus": 1}"#,
            r#"{"schema": 1, "scenario": "rho-nk", "parameters": {"N": 4}}"#,
            r#"{"schema": 1, "scenario": "twisted-mixture", "parameters": {"p": {"start": 0, "stop": 1, "step": 0.1, "x": 0}}}"#,
            r#"{"schema": 1, "scenario": "rho-nk", "optimizer": {"restart": 3}}"#,
        ] {
            let err = text.parse::<Config>().unwrap_err();
            assert!(err.contains("unknown field"), "{err}");
        }
    }

    #[test]
    fn invalid_values_name_the_field() {
        let err = r#"{"schema": 2, "scenario": "rho-nk"}"#.parse::<Config>().unwrap_err();
        assert!(err.starts_with("schema"), "{err}");
        let err = r#"{"schema": 1, "scenario": "rho-nk", "parameters": {"n": 4, "k": [5]}}"#.parse::<Config>().unwrap_err();
        assert!(err.contains("parameters.k"), "{err}");
        let err = r#"{"schema": 1, "scenario": "twisted-mixture", "parameters": {"p": {"start": 0, "stop": 2, "step": 0.1}}}"#
            .parse::<Config>()
            .unwrap_err();
        assert!(err.contains("parameters.p"), "{err}");
    }

    #[test]
    fn grid_hits_both_ends() {
        let g = Grid::new(0.0, 2.0 * PI, 0.01).points();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 2.0 * PI);
        assert_eq!(Grid::new(1.0, 1.0, 0.1).points(), vec![1.0]);
        assert_eq!(Grid::new(0.0, 1.0, 0.25).points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
