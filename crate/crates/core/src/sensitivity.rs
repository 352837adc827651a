//! Normalized forward sensitivity indices `Z_p = (p/R)(∂R/∂p)` of both
//! reproduction numbers with respect to every rate.
//!
//! ```
//! use svi2r::sensitivity::sensitivity_indices;
//! use svi2r::{ModelParameters, ParamName};
//!
//! let report = sensitivity_indices(&ModelParameters::default())?;
//! let sigma = report.entry(ParamName::VaccineEfficacy);
//! assert!((sigma.index_r01 + 1.7320).abs() < 1e-4);
//! # Ok::<(), svi2r::Error>(())
//! ```

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParameters, ParamName};
use crate::reproduction::closed_form;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignClass {
    Positive,
    Negative,
    Neutral,
}

impl SignClass {
    pub fn of(z: f64) -> Self {
        if z > 0.0 {
            SignClass::Positive
        } else if z < 0.0 {
            SignClass::Negative
        } else {
            SignClass::Neutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityEntry {
    pub parameter: ParamName,
    pub value_used: f64,
    pub index_r01: f64,
    pub index_r02: f64,
    pub sign_r01: SignClass,
    pub sign_r02: SignClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub r01: f64,
    pub r02: f64,
    /// One entry per parameter, in [`ParamName::ALL`] order.
    pub entries: Vec<SensitivityEntry>,
}

impl SensitivityReport {
    pub fn entry(&self, name: ParamName) -> &SensitivityEntry {
        self.entries.iter().find(|e| e.parameter == name).expect("every parameter has an entry")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "parameter,value,index_r01,index_r02")?;
        for e in &self.entries {
            writeln!(w, "{},{},{},{}", e.parameter, e.value_used, e.index_r01, e.index_r02)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

/// Analytic indices `(Z^{R₀₁}, Z^{R₀₂})` for one parameter.
///
/// With `R₀ᵢ = βᵢBQ/(kᵢA)`, `Q = μ+ω+(1−σ)α`, `A = ω(μ+ω+α)`, each index is a
/// sum of logarithmic derivatives of those factors.
pub fn analytic_index(p: &ModelParameters, name: ParamName) -> (f64, f64) {
    let g = p.aggregates();
    let w = p.natural_death;
    let al = p.vaccination_rate;
    let mu = p.vaccine_waning;
    let sum = mu + w + al;
    match name {
        ParamName::BirthRate => (1.0, 1.0),
        ParamName::Beta1 => (1.0, 0.0),
        ParamName::Beta2 => (0.0, 1.0),
        ParamName::NaturalDeath => {
            let common = 1.0 / g.q - 1.0 / w - 1.0 / sum;
            (w * (common - 1.0 / g.k1), w * (common - 1.0 / g.k2))
        }
        ParamName::VaccinationRate => {
            let z = al * (p.leak() / g.q - 1.0 / sum);
            (z, z)
        }
        ParamName::VaccineWaning => {
            let z = mu * (1.0 / g.q - 1.0 / sum);
            (z, z)
        }
        ParamName::VaccineEfficacy => {
            let z = -p.vaccine_efficacy * al / g.q;
            (z, z)
        }
        ParamName::NaturalWaning => (0.0, 0.0),
        ParamName::ExcessDeath1 | ParamName::MutationRate | ParamName::Recovery1 => (-p.get(name) / g.k1, 0.0),
        ParamName::ExcessDeath2 | ParamName::Recovery2 => (0.0, -p.get(name) / g.k2),
    }
}

pub fn sensitivity_indices(p: &ModelParameters) -> Result<SensitivityReport> {
    p.validate()?;
    let (r01, r02) = closed_form(p);
    if !(r01 > 0.0 && r02 > 0.0) {
        return Err(Error::Normalization(format!("R₀₁ = {r01}, R₀₂ = {r02}; both must be positive")));
    }
    let entries = ParamName::ALL
        .into_iter()
        .map(|name| {
            let (z1, z2) = analytic_index(p, name);
            SensitivityEntry {
                parameter: name,
                value_used: p.get(name),
                index_r01: z1,
                index_r02: z2,
                sign_r01: SignClass::of(z1),
                sign_r02: SignClass::of(z2),
            }
        })
        .collect();
    Ok(SensitivityReport { r01, r02, entries })
}

/// Central finite-difference index with relative step `rel_step`.
pub fn finite_difference_index(p: &ModelParameters, name: ParamName, rel_step: f64) -> (f64, f64) {
    let x = p.get(name);
    if x == 0.0 {
        return (0.0, 0.0);
    }
    let h = rel_step * x.abs();
    let (u1, u2) = closed_form(&p.with(name, x + h));
    let (d1, d2) = closed_form(&p.with(name, x - h));
    let (r1, r2) = closed_form(p);
    (x / r1 * (u1 - d1) / (2.0 * h), x / r2 * (u2 - d2) / (2.0 * h))
}
