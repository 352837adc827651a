//! Steady states: the disease-free point in closed form and endemic points by
//! damped Newton iteration on the full system.
//!
//! ```
//! use svi2r::equilibria::{disease_free, endemic};
//! use svi2r::ModelParameters;
//!
//! let p = ModelParameters::default();
//! let e0 = disease_free(&p)?;
//! assert_eq!(e0.state.i1, 0.0);
//!
//! // Only the mutant strain persists at the baseline rates.
//! let ee = endemic(&p, None)?;
//! assert!(ee.strain2_only && ee.state.i2 > 0.0);
//! # Ok::<(), svi2r::Error>(())
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::max_abs;
use crate::model::{ModelParameters, State};
use crate::odeint::{integrate_at, IntegratorConfig};
use crate::stability::jacobian;

const MAX_NEWTON: usize = 200;
const MAX_HALVINGS: usize = 30;
/// Shortest horizon of the integration that supplies the default Newton
/// guess; it is lengthened to a few demographic lifetimes `1/ω`.
const GUESS_HORIZON: f64 = 20_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub kind: EquilibriumKind,
    pub state: State,
    /// Max-norm of the vector field at `state`, persons/day.
    pub residual_norm: f64,
    /// `C = ω + (1−σ)β₁I₁* + (1−σ)β₂I₂* + μ`, endemic points only.
    pub aux_c: Option<f64>,
    /// Endemic point on the boundary I₁* = 0, I₂* > 0.
    pub strain2_only: bool,
}

pub fn disease_free(p: &ModelParameters) -> Result<EquilibriumPoint> {
    p.validate()?;
    let g = p.aggregates();
    if !(g.a > 0.0) {
        return Err(Error::Domain("ω(μ + ω + α) must be positive".into()));
    }
    let state = State::new(g.s0, g.v0, 0.0, 0.0, 0.0);
    Ok(EquilibriumPoint {
        kind: EquilibriumKind::DiseaseFree,
        state,
        residual_norm: max_abs(&p.vector_field(&state.to_array())),
        aux_c: None,
        strain2_only: false,
    })
}

/// `C = ω + (1−σ)β₁I₁ + (1−σ)β₂I₂ + μ`.
pub fn aux_c(p: &ModelParameters, i1: f64, i2: f64) -> f64 {
    p.natural_death + p.leak() * (p.beta1 * i1 + p.beta2 * i2) + p.vaccine_waning
}

/// S*, V*, R* expressed through (I₁*, I₂*) by the rational steady-state
/// relations, returned together with the given infected levels.
pub fn endemic_relations(p: &ModelParameters, i1: f64, i2: f64) -> State {
    let w = p.natural_death;
    let d = p.natural_waning;
    let c = aux_c(p, i1, i2);
    let recovered_inflow = p.recovery1 * i1 + p.recovery2 * i2;
    let num = p.birth_rate * (w + d) + d * recovered_inflow;
    let den = (w + d)
        * ((w + p.beta1 * i1 + p.beta2 * i2 + p.vaccination_rate) * c
            - p.vaccine_waning * p.vaccination_rate);
    State::new(num * c / den, num * p.vaccination_rate / den, i1, i2, recovered_inflow / (w + d))
}

/// Default Newton guess: the long-run state reached from the reference
/// initial conditions.
pub fn default_guess(p: &ModelParameters) -> Result<State> {
    let horizon = GUESS_HORIZON.max(3.0 / p.natural_death);
    if !horizon.is_finite() {
        return Err(Error::Domain("ω must be positive for a long-run guess".into()));
    }
    let cfg = IntegratorConfig { h_max: 50.0, ..IntegratorConfig::default() };
    let traj = integrate_at(p, &State::reference_initial(), &cfg, &[horizon])?;
    Ok(traj.last().expect("one output time requested").1)
}

/// Solves f(x) = 0 for an endemic point by damped Newton with the analytic
/// Jacobian.
///
/// With an explicit `guess`, Newton starts there and nothing else is tried.
/// Without one, it starts from [`default_guess`]; if that lands on the
/// disease-free point or fails, the semi-analytic seeds of
/// [`threshold_seeds`] are tried in turn.
pub fn endemic(p: &ModelParameters, guess: Option<State>) -> Result<EquilibriumPoint> {
    p.validate()?;
    if p.beta1 == 0.0 && p.beta2 == 0.0 {
        return Err(Error::NoEndemicEquilibrium("no transmission".into()));
    }
    match guess {
        Some(g) if g.is_finite() => polish(p, g),
        Some(g) => Err(Error::Domain(format!("non-finite guess {g:?}"))),
        None => {
            let first = polish(p, default_guess(p)?);
            if first.is_ok() {
                return first;
            }
            threshold_seeds(p).into_iter().find_map(|s| polish(p, s).ok()).ok_or_else(|| first.unwrap_err())
        }
    }
}

/// Candidate endemic states from one-dimensional root finding on the
/// steady-state relations:
///
/// * strain 2 alone: `I₁ = 0` and `β₂(S + (1−σ)V) = k₂`, solved for `I₂`;
/// * coexistence: `β₁(S + (1−σ)V) = k₁` with `I₂ = mI₁/(k₂ − β₂k₁/β₁)`,
///   solved for `I₁`.
///
/// Only branches whose reproduction number exceeds one are attempted.
pub fn threshold_seeds(p: &ModelParameters) -> Vec<State> {
    let (k1, k2) = (p.strain1_exit_rate(), p.strain2_exit_rate());
    let leak = p.leak();
    let seff = |x: &State| x.s + leak * x.v;
    let mut out = Vec::new();
    if p.beta2 > 0.0 {
        let target = k2 / p.beta2;
        let at = |i2: f64| endemic_relations(p, 0.0, i2);
        if let Some(i2) = bisect(|i2| seff(&at(i2)) - target, p.population_bound()) {
            out.push(at(i2));
        }
    }
    if p.beta1 > 0.0 {
        let target = k1 / p.beta1;
        let gap = k2 - p.beta2 * target;
        if gap > 0.0 {
            let at = |i1: f64| endemic_relations(p, i1, p.mutation_rate * i1 / gap);
            if let Some(i1) = bisect(|i1| seff(&at(i1)) - target, p.population_bound()) {
                out.push(at(i1));
            }
        }
    }
    out
}

/// Root of `g` on `(0, hi·2ᵏ]` for a `g` positive at 0, by bisection.
fn bisect(g: impl Fn(f64) -> f64, hi: f64) -> Option<f64> {
    if !(g(0.0) > 0.0) || !(hi > 0.0 && hi.is_finite()) {
        return None;
    }
    let mut hi = hi;
    let mut doublings = 0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn polish(p: &ModelParameters, x0: State) -> Result<EquilibriumPoint> {
    let tol = 1e-10 * p.birth_rate.max(1.0);
    let x = newton(p, x0.to_array(), tol)?;
    let scale = x.iter().map(|v| v.abs()).sum::<f64>().max(1.0);

    let mut state = State::from_array(x);
    for (k, v) in [&mut state.s, &mut state.v, &mut state.i1, &mut state.i2, &mut state.r]
        .into_iter()
        .enumerate()
    {
        if *v < 0.0 {
            if *v < -1e-9 * scale {
                return Err(Error::NoEndemicEquilibrium(format!(
                    "Newton converged to a non-physical point (component {k} = {v:e})"
                )));
            }
            *v = 0.0;
        }
    }
    if state.i1 < 1e-9 * scale && state.i2 < 1e-9 * scale {
        return Err(Error::DfeCoincident);
    }
    let strain2_only = state.i1 < 1e-9 * scale && state.i2 > 0.0;
    if strain2_only {
        state.i1 = 0.0;
    }
    Ok(EquilibriumPoint {
        kind: EquilibriumKind::Endemic,
        state,
        residual_norm: max_abs(&p.vector_field(&state.to_array())),
        aux_c: Some(aux_c(p, state.i1, state.i2)),
        strain2_only,
    })
}

fn newton(p: &ModelParameters, mut x: [f64; 5], tol: f64) -> Result<[f64; 5]> {
    let mut f = p.vector_field(&x);
    let mut r = max_abs(&f);
    for _ in 0..MAX_NEWTON {
        if r <= tol {
            return Ok(x);
        }
        let j = jacobian(p, &State::from_array(x));
        let rhs = f.map(|v| -v);
        let dx = j
            .solve(&rhs)
            .ok_or_else(|| Error::NoEndemicEquilibrium("singular Jacobian during Newton".into()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial: [f64; 5] = std::array::from_fn(|i| x[i] + lambda * dx[i]);
            let ft = p.vector_field(&trial);
            let rt = max_abs(&ft);
            if rt < r {
                x = trial;
                f = ft;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoEndemicEquilibrium(format!("line search stalled at residual {r:e}")));
        }
    }
    if r <= tol {
        Ok(x)
    } else {
        Err(Error::NoEndemicEquilibrium(format!("no convergence after {MAX_NEWTON} iterations (residual {r:e})")))
    }
}
