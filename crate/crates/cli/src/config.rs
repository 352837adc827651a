//! Run configuration: built-in defaults, then a JSON file, then flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use svi2r::calibration::{FitConfig, ObservableKind};
use svi2r::odeint::IntegratorConfig;
use svi2r::{ModelParameters, ParamName, State};

use crate::args::CommonArgs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: ParamName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CasesConfig {
    pub days: u32,
    pub noise_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub parameters: ModelParameters,
    pub initial_conditions: State,
    pub integrator: IntegratorConfig,
    pub sweep: Option<Sweep>,
    /// Compartment used for peaks and plots.
    pub column: String,
    pub out: PathBuf,
    pub svg: bool,
    pub seed: u64,
    pub cases: Option<CasesConfig>,
    pub observable: ObservableKind,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            parameters: ModelParameters::default(),
            initial_conditions: State::reference_initial(),
            integrator: IntegratorConfig::default(),
            sweep: None,
            column: "I2".into(),
            out: PathBuf::from("out"),
            svg: false,
            seed: 0,
            cases: None,
            observable: ObservableKind::default(),
            fit: FitConfig::default(),
        }
    }
}

/// Overlays `patch` onto `base`, recursing into objects.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

impl RunConfig {
    /// Defaults overlaid with a partial JSON document. Unknown keys are errors.
    pub fn from_json_patch(text: &str) -> CliResult<Self> {
        let patch: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        if !patch.is_object() {
            return Err(CliError::Input("config: top level must be a JSON object".into()));
        }
        let mut base = serde_json::to_value(RunConfig::default())?;
        merge(&mut base, patch);
        serde_json::from_value(base).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_json_patch(&text)
            }
        }
    }

    /// Applies the flags shared by every subcommand.
    pub fn apply_common(&mut self, a: &CommonArgs) -> CliResult<()> {
        for (key, value) in &a.params {
            let name: ParamName = key.parse().map_err(|e: svi2r::Error| CliError::Input(e.to_string()))?;
            self.parameters.set(name, *value);
        }
        for (key, value) in &a.init {
            let i = column_index(key)?;
            let mut x = self.initial_conditions.to_array();
            x[i] = *value;
            self.initial_conditions = State::from_array(x);
        }
        if let Some(s) = &a.sweep {
            self.sweep = Some(parse_sweep(s)?);
        }
        if let Some(out) = &a.out {
            self.out = out.clone();
        }
        self.svg |= a.svg;
        if let Some(seed) = a.seed {
            self.seed = seed;
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        let input = |e: svi2r::Error| CliError::Input(e.to_string());
        self.parameters.validate().map_err(input)?;
        let x = &self.initial_conditions;
        if !(x.is_finite() && x.is_nonnegative()) {
            return Err(CliError::Input(format!("initial conditions must be finite and non-negative: {x:?}")));
        }
        self.integrator.validate().map_err(input)?;
        column_index(&self.column)?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::Input("sweep has no values".into()));
            }
            for v in &s.values {
                self.parameters.with(s.parameter, *v).validate().map_err(input)?;
            }
        }
        if let Some(c) = &self.cases {
            if !(c.noise_rel >= 0.0 && c.noise_rel.is_finite()) {
                return Err(CliError::Input("case noise must be finite and non-negative".into()));
            }
        }
        self.fit.validate().map_err(input)
    }
}

/// Position of a compartment name (case-insensitive) in the state vector.
pub fn column_index(name: &str) -> CliResult<usize> {
    State::COLUMNS
        .iter()
        .position(|c| c.eq_ignore_ascii_case(name.trim()))
        .ok_or_else(|| CliError::Input(format!("unknown compartment `{name}`; expected one of S, V, I1, I2, R")))
}

pub fn parse_sweep(s: &str) -> CliResult<Sweep> {
    let (key, list) = s
        .split_once('=')
        .ok_or_else(|| CliError::Input(format!("sweep must look like KEY=V1,V2,..., got `{s}`")))?;
    let parameter: ParamName = key.trim().parse().map_err(|e: svi2r::Error| CliError::Input(e.to_string()))?;
    let values = list
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Input(format!("sweep value `{v}` is not a number"))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Sweep { parameter, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c = RunConfig::from_json_patch(r#"{"parameters": {"beta2": 5e-9}, "integrator": {"t_end": 30}}"#).unwrap();
        assert_eq!(c.parameters.beta2, 5e-9);
        assert_eq!(c.parameters.beta1, ModelParameters::default().beta1);
        assert_eq!(c.integrator.t_end, 30.0);
        assert_eq!(c.integrator.step, 0.01);
        assert_eq!(c.initial_conditions, State::reference_initial());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json_patch(r#"{"parameters": {"beta3": 1}}"#).is_err());
        assert!(RunConfig::from_json_patch(r#"{"colour": "red"}"#).is_err());
        assert!(RunConfig::from_json_patch("[1, 2]").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::from_json_patch(r#"{"parameters": {"beta2": 5e-9}, "seed": 4}"#).unwrap();
        let args = CommonArgs {
            config: None,
            params: vec![("beta2".into(), 6e-9)],
            init: vec![("i1".into(), 10.0)],
            sweep: Some("vaccine_efficacy=0, 0.7".into()),
            out: None,
            svg: false,
            seed: None,
        };
        c.apply_common(&args).unwrap();
        assert_eq!(c.parameters.beta2, 6e-9);
        assert_eq!(c.initial_conditions.i1, 10.0);
        assert_eq!(c.seed, 4);
        assert_eq!(c.sweep.unwrap().values, vec![0.0, 0.7]);
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut c = RunConfig::default();
        c.parameters.vaccine_efficacy = 1.5;
        assert!(matches!(c.validate(), Err(CliError::Input(_))));
        let c = RunConfig { sweep: Some(parse_sweep("natural_death=0.1,-1").unwrap()), ..RunConfig::default() };
        assert!(c.validate().is_err());
        assert!(parse_sweep("nope=1").is_err());
    }
}
