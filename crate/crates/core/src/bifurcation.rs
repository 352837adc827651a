//! Transcritical bifurcation at R₀ᵢ = 1: critical transmission rates, null
//! eigenvectors, the normal-form constants a and b, and the waning-rate
//! threshold δ* that separates forward from backward bifurcation.
//!
//! `a` and `b` follow
//! `a = Σₖᵢⱼ vₖ wᵢ wⱼ ∂²fₖ/∂xᵢ∂xⱼ` and `b = Σₖᵢ vₖ wᵢ ∂²fₖ/∂xᵢ∂β`,
//! summed over ordered index pairs.
//!
//! ```
//! use svi2r::bifurcation::{analyze, Regime, Strain};
//! use svi2r::ModelParameters;
//!
//! let r = analyze(&ModelParameters::default(), Strain::Two)?;
//! assert!(r.b > 0.0);
//! assert_eq!(r.regime, Regime::Forward);
//! # Ok::<(), svi2r::Error>(())
//! ```

use std::fmt;

use serde::{Serialize, Serializer};

use crate::equilibria::disease_free;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix5};
use crate::model::{ModelParameters, ParamName};
use crate::stability::jacobian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strain {
    One,
    Two,
}

impl Strain {
    pub const BOTH: [Strain; 2] = [Strain::One, Strain::Two];

    pub fn number(self) -> u8 {
        match self {
            Strain::One => 1,
            Strain::Two => 2,
        }
    }

    pub fn beta(self) -> ParamName {
        match self {
            Strain::One => ParamName::Beta1,
            Strain::Two => ParamName::Beta2,
        }
    }

    /// State index of the strain's infected compartment.
    fn index(self) -> usize {
        match self {
            Strain::One => 2,
            Strain::Two => 3,
        }
    }
}

impl fmt::Display for Strain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl Serialize for Strain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Backward,
    Forward,
}

/// Which component of each eigenvector is pinned, and to what.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub w_index: usize,
    pub w_value: f64,
    pub v_index: usize,
    pub v_value: f64,
}

impl Normalization {
    /// w₄ = ω(μ+ω+α), v₃ = 1 for strain 1; w₄ = v₄ = 1 for strain 2.
    pub fn standard(p: &ModelParameters, strain: Strain) -> Self {
        match strain {
            Strain::One => Normalization { w_index: 3, w_value: p.aggregates().a, v_index: 2, v_value: 1.0 },
            Strain::Two => Normalization { w_index: 3, w_value: 1.0, v_index: 3, v_value: 1.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullVectors {
    pub w: [f64; 5],
    pub v: [f64; 5],
    /// ‖Jŵ‖ for the unit vector ŵ.
    pub residual_w: f64,
    /// ‖Jᵀv̂‖ for the unit vector v̂.
    pub residual_v: f64,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationReport {
    pub strain: Strain,
    pub beta_star: f64,
    pub right_eigenvector: [f64; 5],
    pub left_eigenvector: [f64; 5],
    pub normalization: Normalization,
    pub a: f64,
    pub b: f64,
    /// Threshold evaluated at the current δ: a > 0 ⇔ δ > delta_star.
    pub delta_star: f64,
    /// Self-consistent δ with δ = δ*(δ), when one exists.
    pub delta_threshold: Option<f64>,
    pub regime: Regime,
    pub zero_eigenvalue_residual: f64,
}

/// `β* = kᵢ ω(μ+ω+α) / (B(μ+ω) + (1−σ)αB)`, the value where R₀ᵢ = 1.
pub fn beta_star(p: &ModelParameters, strain: Strain) -> Result<f64> {
    p.validate()?;
    if p.birth_rate == 0.0 {
        return Err(Error::Domain("β* is undefined for B = 0".into()));
    }
    let g = p.aggregates();
    let den = p.birth_rate * g.q;
    if !(den > 0.0) {
        return Err(Error::Domain("B[(μ+ω) + (1−σ)α] must be positive".into()));
    }
    let k = match strain {
        Strain::One => g.k1,
        Strain::Two => g.k2,
    };
    Ok(k * g.a / den)
}

/// Copy of `p` with the strain's transmission rate set to β*.
pub fn at_threshold(p: &ModelParameters, strain: Strain) -> Result<ModelParameters> {
    Ok(p.with(strain.beta(), beta_star(p, strain)?))
}

/// Jacobian at the disease-free point with β = β*.
pub fn critical_jacobian(p: &ModelParameters, strain: Strain) -> Result<Matrix5> {
    let q = at_threshold(p, strain)?;
    Ok(jacobian(&q, &disease_free(&q)?.state))
}

fn unit_residual(m: &Matrix5, x: &[f64; 5]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = m.mul_vec(x);
    r.iter().map(|v| v * v).sum::<f64>().sqrt() / n
}

/// Numerical right and left null vectors of the critical Jacobian.
pub fn null_eigenvectors(p: &ModelParameters, strain: Strain) -> Result<NullVectors> {
    let j = critical_jacobian(p, strain)?;
    let rank = linalg::rank(&j, 1e-10);
    if rank != 4 {
        return Err(Error::DegenerateBifurcation(format!(
            "critical Jacobian has nullity {} (expected 1)",
            5 - rank
        )));
    }
    let norm = Normalization::standard(p, strain);
    if norm.w_value == 0.0 {
        return Err(Error::DegenerateBifurcation("zero normalization pivot".into()));
    }
    let jt = j.transpose();
    let w = linalg::null_vector(&j, norm.w_index, norm.w_value)
        .ok_or_else(|| Error::DegenerateBifurcation("right null vector has a zero pivot".into()))?;
    let v = linalg::null_vector(&jt, norm.v_index, norm.v_value)
        .ok_or_else(|| Error::DegenerateBifurcation("left null vector has a zero pivot".into()))?;
    let residual_w = unit_residual(&j, &w);
    let residual_v = unit_residual(&jt, &v);
    let tol = 1e-9 * j.norm();
    if !(residual_w <= tol && residual_v <= tol) {
        return Err(Error::DegenerateBifurcation(format!(
            "null vector residuals {residual_w:e}, {residual_v:e} exceed {tol:e}"
        )));
    }
    // v·w = 0 means the zero eigenvalue is not simple (a Jordan block).
    let vw = dot(&v, &w);
    if vw.abs() <= 1e-9 * dot(&v, &v).sqrt() * dot(&w, &w).sqrt() {
        return Err(Error::DegenerateBifurcation(format!("v·w = {vw:e}; zero eigenvalue is not simple")));
    }
    Ok(NullVectors { w, v, residual_w, residual_v, normalization: norm })
}

fn dot(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenvectors from the explicit component formulas, at β = β*.
pub fn closed_form_eigenvectors(p: &ModelParameters, strain: Strain) -> Result<([f64; 5], [f64; 5])> {
    let q = at_threshold(p, strain)?;
    let g = q.aggregates();
    let (w, mu, al, d) = (q.natural_death, q.vaccine_waning, q.vaccination_rate, q.natural_waning);
    let leak = q.leak();
    let b = q.birth_rate;
    match strain {
        Strain::One => {
            let m = q.mutation_rate;
            let r02 = crate::reproduction::closed_form(&q).1;
            let a1 = g.a * g.k2;
            let u = (1.0 - r02) * a1;
            let big_w = q.recovery1 * u + q.recovery2 * m * g.a;
            let x = g.k1 * (mu + w) * (w + d) * u + q.beta2 * b * (mu + w) * m * (w + d) * g.q
                - d * big_w * g.q;
            let y = g.k1 * leak * al * u + leak * q.beta2 * al * b * m * g.q;
            let den = m * (w + d) * g.q * (-g.a);
            let w1 = ((w + mu) * x + mu * (w + d) * y) / den;
            let w2 = (al * x + (w + al) * (w + d) * y) / den;
            Ok(([w1, w2, u / m, g.a, big_w / (m * (w + d))], [0.0, 0.0, 1.0, 0.0, 0.0]))
        }
        Strain::Two => {
            let k2 = g.k2;
            let r2 = q.recovery2;
            let den = -g.a * g.q * (w + d);
            let w22 = (al * k2 * (mu + w) * (w + d) - al * d * r2 * g.q + (w + al) * k2 * leak * al * (w + d))
                / den;
            let w11 = (k2 * (mu + w).powi(2) * (w + d) - (w + mu) * d * r2 * g.q + mu * k2 * leak * al * (w + d))
                / den;
            let v33 = -q.mutation_rate * g.a / (-g.k1 * g.a + q.beta1 * b * g.q);
            Ok(([w11, w22, 0.0, 1.0, r2 / (w + d)], [0.0, 0.0, v33, 1.0, 0.0]))
        }
    }
}

/// Second derivatives ∂²fₖ/∂xᵢ∂xⱼ (constant: the nonlinearity is bilinear).
fn hessian(p: &ModelParameters) -> [[[f64; 5]; 5]; 5] {
    let mut h = [[[0.0; 5]; 5]; 5];
    let leak = p.leak();
    let mut set = |k: usize, i: usize, j: usize, v: f64| {
        h[k][i][j] = v;
        h[k][j][i] = v;
    };
    set(0, 0, 2, -p.beta1);
    set(0, 0, 3, -p.beta2);
    set(1, 1, 2, -leak * p.beta1);
    set(1, 1, 3, -leak * p.beta2);
    set(2, 0, 2, p.beta1);
    set(2, 1, 2, leak * p.beta1);
    set(3, 0, 3, p.beta2);
    set(3, 1, 3, leak * p.beta2);
    h
}

/// Mixed derivatives ∂²fₖ/∂xᵢ∂β at the disease-free point.
fn parameter_hessian(p: &ModelParameters, strain: Strain) -> [[f64; 5]; 5] {
    let g = p.aggregates();
    let c = strain.index();
    let mut hb = [[0.0; 5]; 5];
    hb[0][c] = -g.s0;
    hb[1][c] = -p.leak() * g.v0;
    hb[c][c] = g.seff0;
    hb
}

/// (a, b) from given eigenvectors at β = β*.
pub fn constants_for(p: &ModelParameters, strain: Strain, w: &[f64; 5], v: &[f64; 5]) -> Result<(f64, f64)> {
    let q = at_threshold(p, strain)?;
    let h = hessian(&q);
    let hb = parameter_hessian(&q, strain);
    let mut a = 0.0;
    let mut b = 0.0;
    for k in 0..5 {
        for i in 0..5 {
            b += v[k] * w[i] * hb[k][i];
            for j in 0..5 {
                a += v[k] * w[i] * w[j] * h[k][i][j];
            }
        }
    }
    Ok((a, b))
}

/// Generic (a, b) from the numerical null vectors.
pub fn bifurcation_constants(p: &ModelParameters, strain: Strain) -> Result<(f64, f64)> {
    let nv = null_eigenvectors(p, strain)?;
    constants_for(p, strain, &nv.w, &nv.v)
}

/// Quantities behind the explicit a and δ* formulas.
struct Threshold {
    /// a = prefactor · (δ·w₅ − numerator)
    prefactor: f64,
    numerator: f64,
    w5: f64,
}

fn threshold_terms(p: &ModelParameters, strain: Strain) -> Result<Threshold> {
    let q = at_threshold(p, strain)?;
    let g = q.aggregates();
    let (w, mu, al, d) = (q.natural_death, q.vaccine_waning, q.vaccination_rate, q.natural_waning);
    let leak = q.leak();
    let b = q.birth_rate;
    match strain {
        Strain::One => {
            let m = q.mutation_rate;
            let r02 = crate::reproduction::closed_form(&q).1;
            let u = (1.0 - r02) * g.a * g.k2;
            let e = u * g.k1 * (mu + w) / (m * g.q)
                + (mu + w) * q.beta2 * b
                + g.p * g.k1 * leak * al * u / (m * g.q * g.q)
                + g.p * leak * q.beta2 * al * b / g.q;
            let w5 = (q.recovery1 * u + q.recovery2 * m * g.a) / (m * (w + d));
            Ok(Threshold { prefactor: 2.0 * u * g.k1 / (m * b), numerator: e, w5 })
        }
        Strain::Two => {
            let gg = g.k2 * ((mu + w) * g.q + leak * al * g.p);
            Ok(Threshold {
                prefactor: 2.0 * g.k2 / b,
                numerator: gg / (g.q * g.q),
                w5: q.recovery2 / (w + d),
            })
        }
    }
}

/// (a, b) from the explicit formulas, with a doubled so that it follows the
/// ordered-pair summation used by [`bifurcation_constants`].
pub fn closed_form_constants(p: &ModelParameters, strain: Strain) -> Result<(f64, f64)> {
    let t = threshold_terms(p, strain)?;
    let a = t.prefactor * (p.natural_waning * t.w5 - t.numerator);
    let q = at_threshold(p, strain)?;
    let g = q.aggregates();
    let b = match strain {
        Strain::One => closed_form_eigenvectors(p, strain)?.0[2] * g.seff0,
        Strain::Two => g.seff0,
    };
    Ok((a, b))
}

/// δ* evaluated with w₅ at the current δ.
pub fn delta_star(p: &ModelParameters, strain: Strain) -> Result<f64> {
    let t = threshold_terms(p, strain)?;
    if t.w5 == 0.0 || !t.w5.is_finite() {
        return Err(Error::DegenerateBifurcation("w₅ = 0".into()));
    }
    Ok(t.numerator / t.w5)
}

/// Fixed point δ = δ*(δ). Since w₅ ∝ 1/(ω+δ), this is
/// `δ_c = ω·c / (1 − c)` with `c = δ*(δ)/(ω+δ)` independent of δ.
pub fn delta_threshold(p: &ModelParameters, strain: Strain) -> Result<Option<f64>> {
    let ds = delta_star(p, strain)?;
    let c = ds / (p.natural_death + p.natural_waning);
    if !(c > 0.0 && c < 1.0) {
        return Ok(None);
    }
    let dc = p.natural_death * c / (1.0 - c);
    Ok(dc.is_finite().then_some(dc))
}

pub fn analyze(p: &ModelParameters, strain: Strain) -> Result<BifurcationReport> {
    let nv = null_eigenvectors(p, strain)?;
    let (a, b) = constants_for(p, strain, &nv.w, &nv.v)?;
    Ok(BifurcationReport {
        strain,
        beta_star: beta_star(p, strain)?,
        right_eigenvector: nv.w,
        left_eigenvector: nv.v,
        normalization: nv.normalization,
        a,
        b,
        delta_star: delta_star(p, strain)?,
        delta_threshold: delta_threshold(p, strain)?,
        regime: if a > 0.0 && b > 0.0 { Regime::Backward } else { Regime::Forward },
        zero_eigenvalue_residual: nv.residual_w,
    })
}
