use serde::{Deserialize, Serialize};

use super::ModelParameters;

/// One point (S, V, I₁, I₂, R) of the state space, in persons.
///
/// The component order is fixed everywhere: matrix indices, CSV columns
/// and array conversions all use S, V, I₁, I₂, R.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl State {
    pub const COLUMNS: [&'static str; 5] = ["S", "V", "I1", "I2", "R"];

    pub const fn new(s: f64, v: f64, i1: f64, i2: f64, r: f64) -> Self {
        Self { s, v, i1, i2, r }
    }

    /// Initial conditions used by the reference simulations.
    pub const fn reference_initial() -> Self {
        Self::new(26_195_740.0, 51_202_223.0, 269_725.0, 2_724.0, 7_009_861.0)
    }

    pub const fn to_array(self) -> [f64; 5] {
        [self.s, self.v, self.i1, self.i2, self.r]
    }

    pub const fn from_array(x: [f64; 5]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }

    pub fn total(&self) -> f64 {
        self.s + self.v + self.i1 + self.i2 + self.r
    }

    pub fn infected(&self) -> f64 {
        self.i1 + self.i2
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.to_array().iter().all(|&c| c >= 0.0)
    }

    /// Effective susceptible pool S + (1 − σ)V.
    pub fn effective_susceptible(&self, p: &ModelParameters) -> f64 {
        self.s + p.leak() * self.v
    }
}

impl From<[f64; 5]> for State {
    fn from(x: [f64; 5]) -> Self {
        State::from_array(x)
    }
}

impl From<State> for [f64; 5] {
    fn from(x: State) -> Self {
        x.to_array()
    }
}

/// Sampled solution of the model: one state per output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub parameters: ModelParameters,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    /// One component as a column vector (0 = S … 4 = R).
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|x| x.to_array()[index]).collect()
    }

    /// Time and value of the largest sample of a column (first one on ties).
    pub fn peak(&self, index: usize) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (t, x) in self.times.iter().zip(&self.states) {
            let v = x.to_array()[index];
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((*t, v));
            }
        }
        best
    }
}
