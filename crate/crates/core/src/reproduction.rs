//! Next-generation matrices and the two strain-specific reproduction numbers.
//!
//! ```
//! use svi2r::{reproduction::reproduction_numbers, ModelParameters};
//!
//! let r = reproduction_numbers(&ModelParameters::default())?;
//! assert!(r.r01 < 1.0 && r.r02 > 1.0);
//! # Ok::<(), svi2r::Error>(())
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParameters;

pub type Matrix2 = [[f64; 2]; 2];

/// New-infection matrix F, transition matrix V and K = FV⁻¹, all evaluated at
/// the disease-free equilibrium with infected compartments ordered (I₁, I₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NextGeneration {
    pub f: Matrix2,
    pub v: Matrix2,
    pub k: Matrix2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproductionNumbers {
    pub r01: f64,
    pub r02: f64,
    pub from_closed_form: (f64, f64),
    /// Eigenvalues of K, read off its diagonal.
    pub from_spectral: (f64, f64),
    pub ngm_f: Matrix2,
    pub ngm_v: Matrix2,
    pub ngm_k: Matrix2,
}

impl ReproductionNumbers {
    /// Spectral radius of K.
    pub fn max(&self) -> f64 {
        self.r01.max(self.r02)
    }
}

pub fn ngm(p: &ModelParameters) -> Result<NextGeneration> {
    p.validate()?;
    let g = p.aggregates();
    if !(g.k1 > 0.0 && g.k2 > 0.0) {
        return Err(Error::Domain("transition matrix V is singular".into()));
    }
    let f = [[p.beta1 * g.seff0, 0.0], [0.0, p.beta2 * g.seff0]];
    let v = [[g.k1, 0.0], [-p.mutation_rate, g.k2]];
    // Lower-triangular inverse.
    let v_inv = [[1.0 / g.k1, 0.0], [p.mutation_rate / (g.k1 * g.k2), 1.0 / g.k2]];
    let mut k = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            k[i][j] = (0..2).map(|l| f[i][l] * v_inv[l][j]).sum();
        }
    }
    Ok(NextGeneration { f, v, k })
}

/// `R₀ᵢ = βᵢ [B(μ+ω) + (1−σ)αB] / (kᵢ ω (μ+ω+α))`.
pub fn closed_form(p: &ModelParameters) -> (f64, f64) {
    let w = p.natural_death;
    let num = p.birth_rate * (p.vaccine_waning + w) + p.leak() * p.vaccination_rate * p.birth_rate;
    let den = w * (p.vaccine_waning + w + p.vaccination_rate);
    (
        p.beta1 * num / (p.strain1_exit_rate() * den),
        p.beta2 * num / (p.strain2_exit_rate() * den),
    )
}

pub fn reproduction_numbers(p: &ModelParameters) -> Result<ReproductionNumbers> {
    let n = ngm(p)?;
    let cf = closed_form(p);
    let spectral = (n.k[0][0], n.k[1][1]);
    Ok(ReproductionNumbers {
        r01: cf.0,
        r02: cf.1,
        from_closed_form: cf,
        from_spectral: spectral,
        ngm_f: n.f,
        ngm_v: n.v,
        ngm_k: n.k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamName;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn baseline_values() {
        // Independent 40-digit evaluation, rounded to double.
        let r = reproduction_numbers(&ModelParameters::default()).unwrap();
        assert!(rel(r.r01, 0.36845846656663897) < 1e-13);
        assert!(rel(r.r02, 2.2317337376771855) < 1e-13);
        let k = r.ngm_k;
        assert_eq!(k[0][1], 0.0);
        assert!(rel(k[0][0], 0.36845846656663897) < 1e-13);
        assert!(rel(k[1][0], 0.21150436229230161) < 1e-13);
        assert!(rel(k[1][1], 2.2317337376771855) < 1e-13);
        assert!(rel(r.from_spectral.0, r.from_closed_form.0) < 1e-12);
        assert!(rel(r.from_spectral.1, r.from_closed_form.1) < 1e-12);
    }

    #[test]
    fn perfect_vaccine_uses_only_susceptibles() {
        let p = ModelParameters::default().with(ParamName::VaccineEfficacy, 1.0);
        let n = ngm(&p).unwrap();
        let g = p.aggregates();
        assert_eq!(n.f[0][0], p.beta1 * g.s0);
        assert_eq!(n.f[1][1], p.beta2 * g.s0);
    }

    #[test]
    fn no_transmission_gives_zero() {
        let p = ModelParameters::default().with(ParamName::Beta1, 0.0);
        assert_eq!(reproduction_numbers(&p).unwrap().r01, 0.0);
    }

    #[test]
    fn doubling_birth_rate_doubles_both() {
        let p = ModelParameters::default();
        let q = p.with(ParamName::BirthRate, 2.0 * p.birth_rate);
        let (a, b) = closed_form(&p);
        let (c, d) = closed_form(&q);
        assert!(rel(c, 2.0 * a) < 1e-14 && rel(d, 2.0 * b) < 1e-14);
    }
}
