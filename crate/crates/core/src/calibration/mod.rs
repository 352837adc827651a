//! Least-squares calibration of transmission and mutation rates against a
//! daily case series.
//!
//! ```
//! use svi2r::calibration::{generate_synthetic, objective};
//! use svi2r::{ModelParameters, State};
//!
//! let p = ModelParameters::default();
//! let x0 = State::reference_initial();
//! let series = generate_synthetic(&p, &x0, 10, 0.0, 7)?;
//! assert!(objective(&p, &series, &x0)? < 1e-6 * series.sum_of_squares());
//! # Ok::<(), svi2r::Error>(())
//! ```

mod simplex;

use std::io::{Read, Write};
use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParameters, ParamName, State};
use crate::odeint::{integrate_at, integrate_system, IntegratorConfig};

/// Rates reported as the least-squares optimum for the original case data.
/// Shipped as the baseline of [`ModelParameters::default`].
pub const REFERENCE_OPTIMUM: [(ParamName, f64); 3] = [
    (ParamName::Beta1, 1.167817614e-9),
    (ParamName::Beta2, 7.368542050e-9),
    (ParamName::MutationRate, 0.009308731535398908),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// I₁(t) + I₂(t) at the end of each day.
    #[default]
    ActiveInfectedTotal,
    /// New infections β₁·Seff·I₁ + β₂·Seff·I₂ accumulated over [d, d+1).
    DailyNewInfections,
}

/// Observed counts indexed by integer day offsets from t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSeries {
    pub days: Vec<u32>,
    pub observed: Vec<f64>,
    pub observable_kind: ObservableKind,
}

impl CaseSeries {
    pub fn new(days: Vec<u32>, observed: Vec<f64>, observable_kind: ObservableKind) -> Result<Self> {
        if days.len() != observed.len() {
            return Err(Error::InvalidConfig("days and observed differ in length".into()));
        }
        if let Some(i) = days.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(format!("days not strictly increasing at row {}", i + 2)));
        }
        if let Some(i) = observed.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!("observed value at row {} is negative or not finite", i + 1)));
        }
        Ok(Self { days, observed, observable_kind })
    }

    /// Builds a series from unordered rows; duplicates are rejected.
    pub fn from_rows(mut rows: Vec<(u32, f64)>, observable_kind: ObservableKind) -> Result<Self> {
        rows.sort_by_key(|r| r.0);
        let (days, observed) = rows.into_iter().unzip();
        Self::new(days, observed, observable_kind)
    }

    /// Reads `day,observed` CSV. Days must be strictly increasing; errors
    /// carry the 1-based line number.
    pub fn read_csv<R: Read>(reader: R, observable_kind: ObservableKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(csv_error)?.clone();
        if header.iter().collect::<Vec<_>>() != ["day", "observed"] {
            return Err(Error::Parse { line: 1, message: "expected header `day,observed`".into() });
        }
        let mut days: Vec<u32> = Vec::new();
        let mut observed = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse { line, message };
            let day: u32 = rec[0].parse().map_err(|_| bad(format!("day `{}` is not a non-negative integer", &rec[0])))?;
            let value: f64 = rec[1].parse().map_err(|_| bad(format!("observed `{}` is not a number", &rec[1])))?;
            if !value.is_finite() || value < 0.0 {
                return Err(bad(format!("observed value {value} must be finite and non-negative")));
            }
            if let Some(&prev) = days.last() {
                if day <= prev {
                    return Err(bad(format!("day {day} does not increase (previous {prev})")));
                }
            }
            days.push(day);
            observed.push(value);
        }
        Self::new(days, observed, observable_kind)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "day,observed")?;
        for (d, v) in self.days.iter().zip(&self.observed) {
            writeln!(w, "{d},{v}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.observed.iter().map(|v| v * v).sum()
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

fn accurate_integrator() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-11, h_max: 1.0, ..IntegratorConfig::default() }
}

/// Model values of the series' observable on its days.
pub fn predict(p: &ModelParameters, series: &CaseSeries, x0: &State, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let times: Vec<f64> = series.days.iter().map(|&d| d as f64).collect();
    match series.observable_kind {
        ObservableKind::ActiveInfectedTotal => {
            let traj = integrate_at(p, x0, cfg, &times)?;
            Ok(traj.states.iter().map(State::infected).collect())
        }
        ObservableKind::DailyNewInfections => {
            p.validate()?;
            // Append the cumulative incidence as a sixth component.
            let field = |y: &[f64; 6]| {
                let x = [y[0], y[1], y[2], y[3], y[4]];
                let f = p.vector_field(&x);
                let seff = y[0] + p.leak() * y[1];
                [f[0], f[1], f[2], f[3], f[4], seff * (p.beta1 * y[2] + p.beta2 * y[3])]
            };
            let mut grid: Vec<f64> = times.iter().flat_map(|&t| [t, t + 1.0]).collect();
            grid.dedup();
            let x = x0.to_array();
            let y0 = [x[0], x[1], x[2], x[3], x[4], 0.0];
            let (ts, ys) = integrate_system(field, y0, cfg, &grid, |_, _| ControlFlow::Continue(()))?;
            let at = |t: f64| ys[ts.iter().position(|&s| s == t).expect("grid time present")][5];
            Ok(times.iter().map(|&t| at(t + 1.0) - at(t)).collect())
        }
    }
}

/// Σ (model − observed)² over the series.
pub fn objective(p: &ModelParameters, series: &CaseSeries, x0: &State) -> Result<f64> {
    objective_with(p, series, x0, &accurate_integrator())
}

pub fn objective_with(p: &ModelParameters, series: &CaseSeries, x0: &State, cfg: &IntegratorConfig) -> Result<f64> {
    let pred = predict(p, series, x0, cfg)?;
    Ok(pred.iter().zip(&series.observed).map(|(m, o)| (m - o).powi(2)).sum())
}

/// One fitted rate with its starting value and admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParameter {
    pub name: ParamName,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub free_parameters: Vec<FreeParameter>,
    /// Simplex diameter tolerance in log-parameter space.
    pub x_tol: f64,
    /// Spread of objective values across the simplex, relative to Σ observed².
    pub f_tol: f64,
    pub max_evals: usize,
    pub integrator: IntegratorConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            free_parameters: vec![
                FreeParameter { name: ParamName::Beta1, initial: 4e-9, lower: 1e-13, upper: 1e-6 },
                FreeParameter { name: ParamName::Beta2, initial: 8.5e-9, lower: 1e-13, upper: 1e-6 },
                FreeParameter { name: ParamName::MutationRate, initial: 0.01, lower: 1e-8, upper: 10.0 },
            ],
            x_tol: 1e-9,
            f_tol: 1e-14,
            max_evals: 4000,
            integrator: accurate_integrator(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for fp in &self.free_parameters {
            if !(fp.lower > 0.0 && fp.lower <= fp.initial && fp.initial <= fp.upper && fp.upper.is_finite()) {
                return bad(format!("{}: need 0 < lower <= initial <= upper", fp.name));
            }
        }
        for (i, fp) in self.free_parameters.iter().enumerate() {
            if self.free_parameters[..i].iter().any(|q| q.name == fp.name) {
                return bad(format!("{} listed twice", fp.name));
            }
        }
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_evals == 0 {
            return bad("max_evals must be positive".into());
        }
        self.integrator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub day: u32,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub parameters: ModelParameters,
    pub fitted: Vec<(ParamName, f64)>,
    pub objective: f64,
    pub initial_objective: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective after each simplex iteration.
    pub history: Vec<f64>,
    pub residuals: Vec<Residual>,
}

/// Fits the free parameters by Nelder–Mead on their logarithms, holding the
/// rest of `fixed` constant.
pub fn fit(series: &CaseSeries, cfg: &FitConfig, fixed: &ModelParameters, x0: &State) -> Result<FitResult> {
    cfg.validate()?;
    fixed.validate()?;
    let free = &cfg.free_parameters;
    let lo: Vec<f64> = free.iter().map(|f| f.lower.ln()).collect();
    let hi: Vec<f64> = free.iter().map(|f| f.upper.ln()).collect();
    let build = |z: &[f64]| {
        let mut p = *fixed;
        for (k, fp) in free.iter().enumerate() {
            p.set(fp.name, z[k].clamp(lo[k], hi[k]).exp());
        }
        p
    };
    let start: Vec<f64> = free.iter().map(|f| f.initial.ln()).collect();
    let initial_objective = objective_with(&build(&start), series, x0, &cfg.integrator)?;

    let outcome = if free.is_empty() {
        simplex::Outcome {
            x: Vec::new(),
            f: initial_objective,
            evals: 1,
            iterations: 0,
            converged: true,
            history: vec![initial_objective],
        }
    } else {
        let settings = simplex::Settings {
            x_tol: cfg.x_tol,
            f_tol: cfg.f_tol * series.sum_of_squares().max(f64::MIN_POSITIVE),
            max_evals: cfg.max_evals,
            initial_step: 0.05,
        };
        let mut out = simplex::minimize(
            |z| objective_with(&build(z), series, x0, &cfg.integrator).unwrap_or(f64::INFINITY),
            &start,
            settings,
        );
        out.evals += 1;
        out
    };

    let parameters = build(&outcome.x);
    let predicted = predict(&parameters, series, x0, &cfg.integrator)?;
    let residuals = series
        .days
        .iter()
        .zip(&series.observed)
        .zip(predicted)
        .map(|((&day, &observed), predicted)| Residual { day, observed, predicted })
        .collect();
    log::info!("fit finished after {} evaluations, objective {:e}", outcome.evals, outcome.f);
    Ok(FitResult {
        parameters,
        fitted: free.iter().map(|f| (f.name, parameters.get(f.name))).collect(),
        objective: outcome.f,
        initial_objective,
        evaluations: outcome.evals,
        iterations: outcome.iterations,
        converged: outcome.converged,
        history: outcome.history,
        residuals,
    })
}

/// Daily I₁ + I₂ for days `0..days` from a tight integration, optionally
/// multiplied by lognormal noise with log-scale standard deviation
/// `noise_rel`. Deterministic for a given seed; with zero noise the seed is
/// unused.
pub fn generate_synthetic(p: &ModelParameters, x0: &State, days: u32, noise_rel: f64, seed: u64) -> Result<CaseSeries> {
    if !(noise_rel >= 0.0 && noise_rel.is_finite()) {
        return Err(Error::InvalidConfig("noise_rel must be finite and non-negative".into()));
    }
    let cfg = IntegratorConfig { rel_tol: 1e-12, h_max: 0.5, ..IntegratorConfig::default() };
    let day_list: Vec<u32> = (0..days).collect();
    let times: Vec<f64> = day_list.iter().map(|&d| d as f64).collect();
    let traj = integrate_at(p, x0, &cfg, &times)?;
    let mut observed: Vec<f64> = traj.states.iter().map(State::infected).collect();
    if noise_rel > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = LogNormal::new(0.0, noise_rel).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for v in observed.iter_mut() {
            *v *= dist.sample(&mut rng);
        }
    }
    CaseSeries::new(day_list, observed, ObservableKind::ActiveInfectedTotal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_parse_and_errors() {
        let ok = "day,observed\n0,10\n1,12.5\n3,7\n";
        let s = CaseSeries::read_csv(ok.as_bytes(), ObservableKind::ActiveInfectedTotal).unwrap();
        assert_eq!(s.days, vec![0, 1, 3]);
        assert_eq!(s.observed, vec![10.0, 12.5, 7.0]);

        let non_monotone = "day,observed\n0,10\n2,12\n1,7\n";
        match CaseSeries::read_csv(non_monotone.as_bytes(), ObservableKind::ActiveInfectedTotal) {
            Err(Error::Parse { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        let bad_value = "day,observed\n0,abc\n";
        assert!(matches!(
            CaseSeries::read_csv(bad_value.as_bytes(), ObservableKind::ActiveInfectedTotal),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad_header = "t,value\n0,1\n";
        assert!(matches!(
            CaseSeries::read_csv(bad_header.as_bytes(), ObservableKind::ActiveInfectedTotal),
            Err(Error::Parse { line: 1, .. })
        ));
        let negative = "day,observed\n0,-1\n";
        assert!(CaseSeries::read_csv(negative.as_bytes(), ObservableKind::ActiveInfectedTotal).is_err());
        let ragged = "day,observed\n0,1,2\n";
        assert!(matches!(
            CaseSeries::read_csv(ragged.as_bytes(), ObservableKind::ActiveInfectedTotal),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn rows_are_sorted() {
        let s = CaseSeries::from_rows(vec![(2, 1.0), (0, 3.0), (1, 2.0)], ObservableKind::ActiveInfectedTotal).unwrap();
        assert_eq!(s.days, vec![0, 1, 2]);
        assert_eq!(s.observed, vec![3.0, 2.0, 1.0]);
        assert!(CaseSeries::from_rows(vec![(1, 1.0), (1, 2.0)], ObservableKind::ActiveInfectedTotal).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        let p = ModelParameters::default();
        let x0 = State::reference_initial();
        let a = generate_synthetic(&p, &x0, 5, 0.0, 1).unwrap();
        let b = generate_synthetic(&p, &x0, 5, 0.0, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.observed[0], x0.infected());
        let c = generate_synthetic(&p, &x0, 5, 0.02, 3).unwrap();
        let d = generate_synthetic(&p, &x0, 5, 0.02, 3).unwrap();
        assert_eq!(c, d);
        assert_ne!(c, a);
    }

    #[test]
    fn zero_series_without_infection() {
        let p = ModelParameters::default();
        let x0 = State::new(1e7, 1e7, 0.0, 0.0, 0.0);
        let s = CaseSeries::new(vec![0, 1, 2], vec![0.0; 3], ObservableKind::ActiveInfectedTotal).unwrap();
        assert_eq!(objective(&p, &s, &x0).unwrap(), 0.0);
        let s = CaseSeries { observable_kind: ObservableKind::DailyNewInfections, ..s };
        assert_eq!(objective(&p, &s, &x0).unwrap(), 0.0);
    }

    #[test]
    fn daily_incidence_is_positive_during_outbreak() {
        let p = ModelParameters::default();
        let s = CaseSeries::new(vec![0, 5], vec![0.0, 0.0], ObservableKind::DailyNewInfections).unwrap();
        let pred = predict(&p, &s, &State::reference_initial(), &accurate_integrator()).unwrap();
        assert!(pred.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn empty_fit_echoes_fixed() {
        let p = ModelParameters::default();
        let x0 = State::reference_initial();
        let s = generate_synthetic(&p.with(ParamName::Beta2, 8e-9), &x0, 6, 0.0, 0).unwrap();
        let cfg = FitConfig { free_parameters: vec![], ..FitConfig::default() };
        let r = fit(&s, &cfg, &p, &x0).unwrap();
        assert_eq!(r.parameters, p);
        assert_eq!(r.objective, objective(&p, &s, &x0).unwrap());
        assert!(r.converged);
    }

    #[test]
    fn invalid_fit_config() {
        let mut cfg = FitConfig::default();
        cfg.free_parameters[0].initial = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = FitConfig::default();
        cfg.free_parameters[1].name = ParamName::Beta1;
        assert!(cfg.validate().is_err());
    }
}
