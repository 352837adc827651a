//! Explicit integrators for autonomous systems: classical RK4 with a fixed
//! step and Dormand–Prince 5(4) with step-size control and continuous output.
//!
//! ```
//! use svi2r::odeint::{integrate, IntegratorConfig};
//! use svi2r::{ModelParameters, State};
//!
//! let cfg = IntegratorConfig { t_end: 10.0, ..Default::default() };
//! let traj = integrate(&ModelParameters::default(), &State::reference_initial(), &cfg)?;
//! assert_eq!(traj.times.len(), 21);
//! # Ok::<(), svi2r::Error>(())
//! ```

use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParameters, State, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    DormandPrince45,
}

/// Integration settings. Times are in days.
///
/// `abs_tol = None` means `1e-8 · N(0)`, an absolute tolerance on the scale of
/// the initial population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    /// RK4 step.
    pub step: f64,
    pub abs_tol: Option<f64>,
    pub rel_tol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub t_end: f64,
    /// Spacing of the output grid used by [`integrate`].
    pub output_interval: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::DormandPrince45,
            step: 0.01,
            abs_tol: None,
            rel_tol: 1e-8,
            h_min: 1e-10,
            h_max: 10.0,
            t_end: 200.0,
            output_interval: 0.5,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64, t_end: f64) -> Self {
        Self { method: Method::Rk4, step, t_end, ..Self::default() }
    }

    pub fn dp45(rel_tol: f64, t_end: f64) -> Self {
        Self { method: Method::DormandPrince45, rel_tol, t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("step must be positive");
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_max && self.h_max.is_finite()) {
            return bad("need 0 < h_min <= h_max");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol must be positive");
        }
        if let Some(a) = self.abs_tol {
            if !(a > 0.0 && a.is_finite()) {
                return bad("abs_tol must be positive");
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be non-negative");
        }
        if !(self.output_interval > 0.0 && self.output_interval.is_finite()) {
            return bad("output_interval must be positive");
        }
        Ok(())
    }

    /// Output times `0, Δ, 2Δ, …` up to `t_end`, with `t_end` appended when it
    /// is not on the grid.
    pub fn output_grid(&self) -> Vec<f64> {
        let n = (self.t_end / self.output_interval + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * self.output_interval).collect();
        let last = *times.last().unwrap();
        if self.t_end - last > 1e-9 * self.output_interval {
            times.push(self.t_end);
        }
        times
    }
}

/// Integrates the model on the output grid of `cfg`.
pub fn integrate(p: &ModelParameters, x0: &State, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    integrate_at(p, x0, cfg, &cfg.output_grid())
}

/// Integrates the model and samples it at `times` (non-decreasing, ≥ 0).
/// `cfg.t_end` is ignored.
pub fn integrate_at(
    p: &ModelParameters,
    x0: &State,
    cfg: &IntegratorConfig,
    times: &[f64],
) -> Result<Trajectory> {
    integrate_with(p, x0, cfg, times, |_, _| ControlFlow::Continue(()))
}

/// Like [`integrate_at`], but calls `observer` after every accepted step
/// (and once at t = 0). Returning `Break` stops the integration; the
/// trajectory then ends with the state at the stopping time.
pub fn integrate_with<O>(
    p: &ModelParameters,
    x0: &State,
    cfg: &IntegratorConfig,
    times: &[f64],
    mut observer: O,
) -> Result<Trajectory>
where
    O: FnMut(f64, &State) -> ControlFlow<()>,
{
    p.validate()?;
    if !x0.is_finite() || !x0.is_nonnegative() {
        return Err(Error::Domain(format!("initial state must be finite and non-negative: {x0:?}")));
    }
    let (times, states) = integrate_system(
        |x| p.vector_field(x),
        x0.to_array(),
        cfg,
        times,
        |t, x| observer(t, &State::from_array(*x)),
    )?;
    Ok(Trajectory {
        times,
        states: states.into_iter().map(State::from_array).collect(),
        parameters: *p,
    })
}

/// Integrates `x' = f(x)` from `x(0) = x0` and samples at `times`.
///
/// All components are treated as non-negative quantities: undershoot below
/// zero by less than `1e-9 · Σ|xᵢ|` is clamped. Larger undershoot is an error
/// for RK4; DP45 rejects the step and retries with a smaller one.
pub fn integrate_system<const D: usize, F, O>(
    f: F,
    x0: [f64; D],
    cfg: &IntegratorConfig,
    times: &[f64],
    mut observer: O,
) -> Result<(Vec<f64>, Vec<[f64; D]>)>
where
    F: Fn(&[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D]) -> ControlFlow<()>,
{
    cfg.validate()?;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("output times must be finite, non-negative and sorted".into()));
    }
    let mut out = Output { times, next: 0, t: Vec::with_capacity(times.len()), x: Vec::with_capacity(times.len()) };
    out.emit_exact(0.0, &x0);
    if observer(0.0, &x0).is_break() {
        out.finish(0.0, &x0);
        return Ok((out.t, out.x));
    }
    let t_final = times.last().copied().unwrap_or(0.0);
    match cfg.method {
        Method::Rk4 => rk4_loop(&f, x0, cfg, t_final, &mut out, &mut observer)?,
        Method::DormandPrince45 => dp45_loop(&f, x0, cfg, t_final, &mut out, &mut observer)?,
    }
    Ok((out.t, out.x))
}

struct Output<'a, const D: usize> {
    times: &'a [f64],
    next: usize,
    t: Vec<f64>,
    x: Vec<[f64; D]>,
}

impl<const D: usize> Output<'_, D> {
    fn emit_exact(&mut self, t: f64, x: &[f64; D]) {
        while self.next < self.times.len() && self.times[self.next] <= t {
            self.t.push(self.times[self.next]);
            self.x.push(*x);
            self.next += 1;
        }
    }

    fn finish(&mut self, t: f64, x: &[f64; D]) {
        if self.t.last().is_none_or(|&last| t > last) {
            self.t.push(t);
            self.x.push(*x);
        }
        self.next = self.times.len();
    }
}

fn undershoots<const D: usize>(x: &[f64; D]) -> bool {
    let scale: f64 = x.iter().map(|v| v.abs()).sum();
    x.iter().any(|v| *v < -1e-9 * scale)
}

fn enforce_nonnegative<const D: usize>(t: f64, x: &mut [f64; D]) -> Result<bool> {
    let scale: f64 = x.iter().map(|v| v.abs()).sum();
    let mut clamped = false;
    for (i, v) in x.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::Domain(format!("component {i} became non-finite at t = {t}")));
        }
        if *v < 0.0 {
            if *v < -1e-9 * scale {
                return Err(Error::NegativeState { t, component: i, value: *v });
            }
            *v = 0.0;
            clamped = true;
        }
    }
    Ok(clamped)
}

fn axpy<const D: usize>(x: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut y = *x;
    for (c, k) in terms {
        for i in 0..D {
            y[i] += h * c * k[i];
        }
    }
    y
}

fn rk4_loop<const D: usize, F, O>(
    f: &F,
    mut x: [f64; D],
    cfg: &IntegratorConfig,
    t_final: f64,
    out: &mut Output<'_, D>,
    observer: &mut O,
) -> Result<()>
where
    F: Fn(&[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D]) -> ControlFlow<()>,
{
    let h0 = cfg.step;
    let mut t = 0.0;
    let mut n = 0u64;
    while out.next < out.times.len() {
        // Nominal grid point, clipped so output times are hit exactly.
        let target = out.times[out.next];
        let mut t_next = ((n + 1) as f64 * h0).min(target);
        if target - t <= 1e-12 * h0 {
            out.t.push(target);
            out.x.push(x);
            out.next += 1;
            continue;
        }
        if (t_next - target).abs() <= 1e-9 * h0 {
            t_next = target;
        }
        let h = t_next - t;
        let k1 = f(&x);
        let k2 = f(&axpy(&x, h / 2.0, &[(1.0, &k1)]));
        let k3 = f(&axpy(&x, h / 2.0, &[(1.0, &k2)]));
        let k4 = f(&axpy(&x, h, &[(1.0, &k3)]));
        let mut y = axpy(&x, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
        enforce_nonnegative(t_next, &mut y)?;
        t = t_next;
        x = y;
        if t >= (n + 1) as f64 * h0 - 1e-12 * h0 {
            n += 1;
        }
        out.emit_exact(t, &x);
        if observer(t, &x).is_break() {
            out.finish(t, &x);
            return Ok(());
        }
        if t >= t_final {
            break;
        }
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn rms_scaled<const D: usize>(v: &[f64; D], sc: &[f64; D]) -> f64 {
    (v.iter().zip(sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / D as f64).sqrt()
}

fn initial_step<const D: usize, F>(f: &F, x: &[f64; D], k1: &[f64; D], sc: &[f64; D], h_max: f64) -> f64
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    let d0 = rms_scaled(x, sc);
    let d1 = rms_scaled(k1, sc);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(x, h0, &[(1.0, k1)]);
    let f1 = f(&y1);
    let mut diff = [0.0; D];
    for i in 0..D {
        diff[i] = f1[i] - k1[i];
    }
    let d2 = rms_scaled(&diff, sc) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(h_max)
}

fn dp45_loop<const D: usize, F, O>(
    f: &F,
    mut x: [f64; D],
    cfg: &IntegratorConfig,
    t_final: f64,
    out: &mut Output<'_, D>,
    observer: &mut O,
) -> Result<()>
where
    F: Fn(&[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D]) -> ControlFlow<()>,
{
    let n0: f64 = x.iter().map(|v| v.abs()).sum();
    let atol = cfg.abs_tol.unwrap_or(1e-8 * if n0 > 0.0 { n0 } else { 1.0 });
    let rtol = cfg.rel_tol;
    let scale = |x: &[f64; D], y: &[f64; D]| {
        let mut sc = [0.0; D];
        for i in 0..D {
            sc[i] = atol + rtol * x[i].abs().max(y[i].abs());
        }
        sc
    };

    let mut t = 0.0;
    let mut k1 = f(&x);
    let mut h = initial_step(f, &x, &k1, &scale(&x, &x), cfg.h_max);
    let mut last_rejected = false;
    while t < t_final {
        let remaining = t_final - t;
        let last_step = h >= remaining;
        if last_step {
            h = remaining;
        } else if h < cfg.h_min {
            return Err(Error::StepUnderflow { t, h });
        }

        let k2 = f(&axpy(&x, h, &[(A21, &k1)]));
        let k3 = f(&axpy(&x, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(&x, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(&x, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&axpy(&x, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y = axpy(&x, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y);
        let mut e = [0.0; D];
        for i in 0..D {
            e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = rms_scaled(&e, &scale(&x, &y));
        let err = if err.is_finite() && y.iter().all(|v| v.is_finite()) { err } else { f64::INFINITY };

        let t_new = if last_step { t_final } else { t + h };
        let mut dense = Vec::new();
        let mut accept = err <= 1.0 && !undershoots(&y);
        if accept {
            // Dense output on (t, t_new].
            let mut k = out.next;
            while k < out.times.len() && out.times[k] <= t_new {
                let tq = out.times[k];
                let theta = (tq - t) / h;
                let theta1 = 1.0 - theta;
                let mut xq = [0.0; D];
                for i in 0..D {
                    let ydiff = y[i] - x[i];
                    let bspl = h * k1[i] - ydiff;
                    let r4 = ydiff - h * k7[i] - bspl;
                    let r5 = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    xq[i] = x[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
                }
                if tq == t_new {
                    xq = y;
                }
                if undershoots(&xq) {
                    accept = false;
                    break;
                }
                enforce_nonnegative(tq, &mut xq)?;
                dense.push((tq, xq));
                k += 1;
            }
        }

        if accept {
            for (tq, xq) in dense {
                out.t.push(tq);
                out.x.push(xq);
                out.next += 1;
            }
            let mut y = y;
            let clamped = enforce_nonnegative(t_new, &mut y)?;
            t = t_new;
            x = y;
            k1 = if clamped { f(&x) } else { k7 };
            if observer(t, &x).is_break() {
                out.finish(t, &x);
                return Ok(());
            }
            let mut fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(cfg.h_max);
            last_rejected = false;
        } else {
            // Error estimate too large, or the step left the non-negative orthant.
            let fac = if err.is_finite() && err > 1.0 { (0.9 * err.powf(-0.2)).max(0.2) } else if err <= 1.0 { 0.5 } else { 0.2 };
            h *= fac;
            last_rejected = true;
            if h < cfg.h_min {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    out.emit_exact(t, &x);
    Ok(())
}

/// Empirical RK4 convergence order measured against a tight DP45 reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub step: f64,
    /// Max-norm error over the daily output grid at step `h`.
    pub error_h: f64,
    /// The same at `h/2`.
    pub error_half: f64,
    /// log₂(error_h / error_half).
    pub order: f64,
}

pub fn observed_order(p: &ModelParameters, x0: &State, h: f64, t_end: f64) -> Result<OrderEstimate> {
    let interval = h.max(1.0);
    let grid = IntegratorConfig { t_end, output_interval: interval, ..Default::default() }.output_grid();
    let n0 = x0.total().max(1.0);
    let reference = IntegratorConfig {
        rel_tol: 1e-13,
        abs_tol: Some(1e-13 * n0),
        h_max: h / 4.0,
        ..IntegratorConfig::default()
    };
    let reference = integrate_at(p, x0, &reference, &grid)?;
    let error = |step: f64| -> Result<f64> {
        let run = integrate_at(p, x0, &IntegratorConfig::rk4(step, t_end), &grid)?;
        let mut worst: f64 = 0.0;
        for (a, b) in run.states.iter().zip(&reference.states) {
            for (u, v) in a.to_array().iter().zip(b.to_array()) {
                worst = worst.max((u - v).abs());
            }
        }
        Ok(worst)
    };
    let error_h = error(h)?;
    let error_half = error(h / 2.0)?;
    Ok(OrderEstimate { step: h, error_h, error_half, order: (error_h / error_half).log2() })
}

impl Trajectory {
    /// Writes `t,S,V,I1,I2,R` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,S,V,I1,I2,R")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for c in x.to_array() {
                write!(w, ",{c:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}
