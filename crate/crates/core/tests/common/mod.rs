#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use svi2r::reproduction::closed_form;
use svi2r::{ModelParameters, ParamName, State};

/// Every rate scaled by a log-uniform factor in [1/spread, spread] around the
/// baseline, with σ uniform on [0, 0.99].
pub fn draw(rng: &mut ChaCha8Rng, spread: f64) -> ModelParameters {
    let mut p = ModelParameters::default();
    for name in ParamName::ALL {
        if name == ParamName::VaccineEfficacy {
            p.set(name, rng.random_range(0.0..0.99));
        } else {
            let f = rng.random_range(-spread.ln()..spread.ln()).exp();
            p.set(name, p.get(name) * f);
        }
    }
    p
}

/// A draw whose transmission rates are rescaled so that R₀₁ and R₀₂ land in
/// `lo..hi`.
pub fn draw_with_r0(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> ModelParameters {
    let mut p = draw(rng, 2.0);
    let (r1, r2) = closed_form(&p);
    let t1 = rng.random_range(lo..hi);
    let t2 = rng.random_range(lo..hi);
    p.beta1 *= t1 / r1;
    p.beta2 *= t2 / r2;
    p
}

/// A state in the feasible region: a uniform split of a total population
/// between half and all of B/ω.
pub fn initial_in_region(rng: &mut ChaCha8Rng, p: &ModelParameters) -> State {
    let w: [f64; 5] = std::array::from_fn(|_| Exp1.sample(rng));
    let sum: f64 = w.iter().sum();
    let n = p.population_bound() * rng.random_range(0.5..1.0);
    State::from_array(w.map(|x| x / sum * n))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
