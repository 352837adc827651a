//! Domain types and the vector field of the SVI₁I₂R system.
//!
//! ```text
//! S'  = B − ωS − β₁SI₁ − β₂SI₂ − αS + μV + δR
//! V'  = −ωV − (1−σ)β₁VI₁ − (1−σ)β₂VI₂ + αS − μV
//! I₁' = −(ω + ω₁ + m + r₁)I₁ + β₁SI₁ + (1−σ)β₁VI₁
//! I₂' = −(ω + ω₂ + r₂)I₂ + mI₁ + β₂SI₂ + (1−σ)β₂VI₂
//! R'  = −ωR + r₁I₁ + r₂I₂ − δR
//! ```

mod params;
mod state;

pub use params::{ModelParameters, ParamName};
pub use state::{State, Trajectory};

use crate::error::{Error, Result};

/// Time derivative of a [`State`], ordered like the state.
pub type StateDerivative = [f64; 5];

impl ModelParameters {
    /// Evaluates the vector field without input checks. Used in hot loops.
    #[inline]
    pub fn vector_field(&self, x: &[f64; 5]) -> [f64; 5] {
        let [s, v, i1, i2, r] = *x;
        let leak = self.leak();
        let force1 = self.beta1 * i1;
        let force2 = self.beta2 * i2;
        let new1 = force1 * (s + leak * v);
        let new2 = force2 * (s + leak * v);
        [
            self.birth_rate - self.natural_death * s - force1 * s - force2 * s
                - self.vaccination_rate * s
                + self.vaccine_waning * v
                + self.natural_waning * r,
            -self.natural_death * v - leak * force1 * v - leak * force2 * v
                + self.vaccination_rate * s
                - self.vaccine_waning * v,
            -self.strain1_exit_rate() * i1 + new1,
            -self.strain2_exit_rate() * i2 + self.mutation_rate * i1 + new2,
            -self.natural_death * r + self.recovery1 * i1 + self.recovery2 * i2
                - self.natural_waning * r,
        ]
    }
}

/// Recurring combinations of the rates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Aggregates {
    /// ω(μ + ω + α)
    pub a: f64,
    /// (μ + ω) + (1 − σ)α
    pub q: f64,
    /// μ + (1 − σ)(ω + α)
    pub p: f64,
    pub k1: f64,
    pub k2: f64,
    pub s0: f64,
    pub v0: f64,
    /// S₀ + (1 − σ)V₀
    pub seff0: f64,
}

impl ModelParameters {
    pub(crate) fn aggregates(&self) -> Aggregates {
        let w = self.natural_death;
        let a = w * (self.vaccine_waning + w + self.vaccination_rate);
        let leak = self.leak();
        let s0 = self.birth_rate * (self.vaccine_waning + w) / a;
        let v0 = self.vaccination_rate * self.birth_rate / a;
        Aggregates {
            a,
            q: self.vaccine_waning + w + leak * self.vaccination_rate,
            p: self.vaccine_waning + leak * (w + self.vaccination_rate),
            k1: self.strain1_exit_rate(),
            k2: self.strain2_exit_rate(),
            s0,
            v0,
            seff0: s0 + leak * v0,
        }
    }
}

fn check_state(x: &State) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("state has non-finite components: {x:?}")));
    }
    Ok(())
}

/// Right-hand side of the system at `x`.
pub fn rhs(p: &ModelParameters, x: &State) -> Result<StateDerivative> {
    p.validate()?;
    check_state(x)?;
    Ok(p.vector_field(&x.to_array()))
}

/// Sum of the right-hand sides minus the balance law `B − ωN − ω₁I₁ − ω₂I₂`.
/// Zero up to rounding for every input.
pub fn conservation_residual(p: &ModelParameters, x: &State) -> Result<f64> {
    let f = rhs(p, x)?;
    let total: f64 = f.iter().sum();
    let balance = p.birth_rate
        - p.natural_death * x.total()
        - p.excess_death1 * x.i1
        - p.excess_death2 * x.i2;
    Ok(total - balance)
}

/// Whether `x` lies in the feasible region: non-negative with N ≤ B/ω.
pub fn in_region(p: &ModelParameters, x: &State) -> bool {
    x.is_finite() && x.is_nonnegative() && x.total() <= p.population_bound()
}
