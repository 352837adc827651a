use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The thirteen rates of the model.
///
/// Units: persons/day for `birth_rate`, 1/(person·day) for the two
/// transmission rates, dimensionless `vaccine_efficacy`, 1/day otherwise.
/// `Default` is the calibrated baseline (vaccination rate 0.012/day).
///
/// Deserialization accepts a partial object: missing keys keep their
/// baseline value, unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParameters {
    pub birth_rate: f64,
    pub natural_death: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub vaccination_rate: f64,
    pub vaccine_waning: f64,
    pub natural_waning: f64,
    pub vaccine_efficacy: f64,
    pub excess_death1: f64,
    pub excess_death2: f64,
    pub mutation_rate: f64,
    pub recovery1: f64,
    pub recovery2: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self {
            birth_rate: 2993.0,
            natural_death: 0.000_035_35,
            beta1: 0.000_000_001_167_817_614,
            beta2: 0.000_000_007_368_542_050,
            vaccination_rate: 0.012,
            vaccine_waning: 0.005,
            natural_waning: 0.0027,
            vaccine_efficacy: 0.9,
            excess_death1: 0.005579,
            excess_death2: 0.002286,
            mutation_rate: 0.009_308_731_535_398_908,
            recovery1: 0.0833,
            recovery2: 0.1,
        }
    }
}

/// Names of the model parameters, in canonical table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    BirthRate,
    NaturalDeath,
    Beta1,
    Beta2,
    VaccinationRate,
    VaccineWaning,
    NaturalWaning,
    VaccineEfficacy,
    ExcessDeath1,
    ExcessDeath2,
    MutationRate,
    Recovery1,
    Recovery2,
}

impl ParamName {
    pub const ALL: [ParamName; 13] = [
        ParamName::BirthRate,
        ParamName::NaturalDeath,
        ParamName::Beta1,
        ParamName::Beta2,
        ParamName::VaccinationRate,
        ParamName::VaccineWaning,
        ParamName::NaturalWaning,
        ParamName::VaccineEfficacy,
        ParamName::ExcessDeath1,
        ParamName::ExcessDeath2,
        ParamName::MutationRate,
        ParamName::Recovery1,
        ParamName::Recovery2,
    ];

    /// The JSON / CLI key.
    pub fn key(self) -> &'static str {
        match self {
            ParamName::BirthRate => "birth_rate",
            ParamName::NaturalDeath => "natural_death",
            ParamName::Beta1 => "beta1",
            ParamName::Beta2 => "beta2",
            ParamName::VaccinationRate => "vaccination_rate",
            ParamName::VaccineWaning => "vaccine_waning",
            ParamName::NaturalWaning => "natural_waning",
            ParamName::VaccineEfficacy => "vaccine_efficacy",
            ParamName::ExcessDeath1 => "excess_death1",
            ParamName::ExcessDeath2 => "excess_death2",
            ParamName::MutationRate => "mutation_rate",
            ParamName::Recovery1 => "recovery1",
            ParamName::Recovery2 => "recovery2",
        }
    }

    /// Conventional mathematical symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            ParamName::BirthRate => "B",
            ParamName::NaturalDeath => "ω",
            ParamName::Beta1 => "β₁",
            ParamName::Beta2 => "β₂",
            ParamName::VaccinationRate => "α",
            ParamName::VaccineWaning => "μ",
            ParamName::NaturalWaning => "δ",
            ParamName::VaccineEfficacy => "σ",
            ParamName::ExcessDeath1 => "ω₁",
            ParamName::ExcessDeath2 => "ω₂",
            ParamName::MutationRate => "m",
            ParamName::Recovery1 => "r₁",
            ParamName::Recovery2 => "r₂",
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown parameter `{s}`")))
    }
}

impl ModelParameters {
    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::BirthRate => self.birth_rate,
            ParamName::NaturalDeath => self.natural_death,
            ParamName::Beta1 => self.beta1,
            ParamName::Beta2 => self.beta2,
            ParamName::VaccinationRate => self.vaccination_rate,
            ParamName::VaccineWaning => self.vaccine_waning,
            ParamName::NaturalWaning => self.natural_waning,
            ParamName::VaccineEfficacy => self.vaccine_efficacy,
            ParamName::ExcessDeath1 => self.excess_death1,
            ParamName::ExcessDeath2 => self.excess_death2,
            ParamName::MutationRate => self.mutation_rate,
            ParamName::Recovery1 => self.recovery1,
            ParamName::Recovery2 => self.recovery2,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        let slot = match name {
            ParamName::BirthRate => &mut self.birth_rate,
            ParamName::NaturalDeath => &mut self.natural_death,
            ParamName::Beta1 => &mut self.beta1,
            ParamName::Beta2 => &mut self.beta2,
            ParamName::VaccinationRate => &mut self.vaccination_rate,
            ParamName::VaccineWaning => &mut self.vaccine_waning,
            ParamName::NaturalWaning => &mut self.natural_waning,
            ParamName::VaccineEfficacy => &mut self.vaccine_efficacy,
            ParamName::ExcessDeath1 => &mut self.excess_death1,
            ParamName::ExcessDeath2 => &mut self.excess_death2,
            ParamName::MutationRate => &mut self.mutation_rate,
            ParamName::Recovery1 => &mut self.recovery1,
            ParamName::Recovery2 => &mut self.recovery2,
        };
        *slot = value;
    }

    /// Copy with one parameter replaced.
    pub fn with(mut self, name: ParamName, value: f64) -> Self {
        self.set(name, value);
        self
    }

    /// Checks the admissibility invariants: every rate finite and non-negative,
    /// natural death strictly positive, efficacy in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        for name in ParamName::ALL {
            let v = self.get(name);
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} is not finite ({v})")));
            }
            if v < 0.0 {
                return Err(Error::Domain(format!("{name} is negative ({v})")));
            }
        }
        if self.natural_death <= 0.0 {
            return Err(Error::Domain("natural_death must be > 0".into()));
        }
        if self.vaccine_efficacy > 1.0 {
            return Err(Error::Domain("vaccine_efficacy must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// 1 − σ, the relative susceptibility of vaccinated individuals.
    pub fn leak(&self) -> f64 {
        1.0 - self.vaccine_efficacy
    }

    /// Total removal rate from I₁: ω + ω₁ + m + r₁.
    pub fn strain1_exit_rate(&self) -> f64 {
        self.natural_death + self.excess_death1 + self.mutation_rate + self.recovery1
    }

    /// Total removal rate from I₂: ω + ω₂ + r₂.
    pub fn strain2_exit_rate(&self) -> f64 {
        self.natural_death + self.excess_death2 + self.recovery2
    }

    /// Carrying capacity B/ω of the feasible region.
    pub fn population_bound(&self) -> f64 {
        self.birth_rate / self.natural_death
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ModelParameters = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
