//! Jacobians, spectra, characteristic polynomials, the Routh–Hurwitz test and
//! the linear Lyapunov function for the disease-free state.
//!
//! ```
//! use svi2r::equilibria::disease_free;
//! use svi2r::stability::{analyze, Classification};
//! use svi2r::ModelParameters;
//!
//! let p = ModelParameters::default();
//! let report = analyze(&p, &disease_free(&p)?)?;
//! // The mutant strain invades: R₀₂ > 1.
//! assert_eq!(report.classification, Classification::Unstable);
//! # Ok::<(), svi2r::Error>(())
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::equilibria::EquilibriumPoint;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix5, Spectrum};
use crate::model::{ModelParameters, State};

pub use crate::linalg::char_poly;

/// Analytic Jacobian of the vector field at `x`.
pub fn jacobian(p: &ModelParameters, x: &State) -> Matrix5 {
    let leak = p.leak();
    let (b1, b2) = (p.beta1, p.beta2);
    let w = p.natural_death;
    let seff = x.s + leak * x.v;
    Matrix5([
        [
            -w - b1 * x.i1 - b2 * x.i2 - p.vaccination_rate,
            p.vaccine_waning,
            -b1 * x.s,
            -b2 * x.s,
            p.natural_waning,
        ],
        [
            p.vaccination_rate,
            -w - leak * (b1 * x.i1 + b2 * x.i2) - p.vaccine_waning,
            -leak * b1 * x.v,
            -leak * b2 * x.v,
            0.0,
        ],
        [b1 * x.i1, leak * b1 * x.i1, -p.strain1_exit_rate() + b1 * seff, 0.0, 0.0],
        [b2 * x.i2, leak * b2 * x.i2, p.mutation_rate, -p.strain2_exit_rate() + b2 * seff, 0.0],
        [0.0, 0.0, p.recovery1, p.recovery2, -w - p.natural_waning],
    ])
}

/// Central finite-difference Jacobian with step `1e-5 · max(|xⱼ|, 0.01·B/ω, 1)`.
/// The field is quadratic, so central differences carry only rounding error
/// and a population-sized step keeps it small.
pub fn jacobian_fd(p: &ModelParameters, x: &State) -> Matrix5 {
    let base = x.to_array();
    let floor = (0.01 * p.population_bound()).max(1.0);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    let mut m = Matrix5::zeros();
    for j in 0..5 {
        let h = 1e-5 * base[j].abs().max(floor);
        let mut up = base;
        let mut down = base;
        up[j] += h;
        down[j] -= h;
        let fu = p.vector_field(&up);
        let fd = p.vector_field(&down);
        for i in 0..5 {
            m.0[i][j] = (fu[i] - fd[i]) / (2.0 * h);
        }
    }
    m
}

pub fn eigenvalues(m: &Matrix5) -> Result<Spectrum> {
    linalg::eigenvalues(m)
}

/// The five eigenvalues of the Jacobian at the disease-free point in closed
/// form: `−ω`, `−(ω+α+μ)`, `k₁(R₀₁−1)`, `k₂(R₀₂−1)`, `−(ω+δ)`.
pub fn dfe_eigenvalues(p: &ModelParameters) -> [f64; 5] {
    let g = p.aggregates();
    let w = p.natural_death;
    [
        -w,
        -(w + p.vaccination_rate + p.vaccine_waning),
        -g.k1 + p.beta1 * g.seff0,
        -g.k2 + p.beta2 * g.seff0,
        -w - p.natural_waning,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouthHurwitz {
    pub coefficients_positive: [bool; 5],
    /// k₁k₂k₃ − k₃² − k₁²k₄ (must be > 0).
    pub second_margin: f64,
    /// (k₁k₄ − k₅)(k₁k₂k₃ − k₃² − k₁²k₄) − k₅(k₁k₂ − k₃)² − k₁k₅² (must be > 0).
    pub third_margin: f64,
    pub first_condition: bool,
    pub second_condition: bool,
    pub third_condition: bool,
    pub satisfied: bool,
}

/// Evaluates the three condition groups for a monic quintic
/// `τ⁵ + k₁τ⁴ + k₂τ³ + k₃τ² + k₄τ + k₅`.
pub fn routh_hurwitz(k: &[f64; 5]) -> RouthHurwitz {
    let [k1, k2, k3, k4, k5] = *k;
    let coefficients_positive = k.map(|c| c > 0.0);
    let first_condition = coefficients_positive.iter().all(|b| *b);
    let second_margin = k1 * k2 * k3 - k3 * k3 - k1 * k1 * k4;
    let third_margin =
        (k1 * k4 - k5) * second_margin - k5 * (k1 * k2 - k3).powi(2) - k1 * k5 * k5;
    let second_condition = second_margin > 0.0;
    let third_condition = third_margin > 0.0;
    RouthHurwitz {
        coefficients_positive,
        second_margin,
        third_margin,
        first_condition,
        second_condition,
        third_condition,
        satisfied: first_condition && second_condition && third_condition,
    }
}

/// k₁…k₄ written out term by term in the entries dᵢⱼ, assuming the sparsity
/// pattern of the Jacobian (d₂₅ = d₃₄ = d₃₅ = d₄₅ = d₅₁ = d₅₂ = 0).
/// Only a diagnostic; [`char_poly`] is the source of truth.
pub fn expanded_coefficients(m: &Matrix5) -> [f64; 4] {
    let d = |i: usize, j: usize| m.0[i - 1][j - 1];
    let (d11, d12, d13, d14, d15) = (d(1, 1), d(1, 2), d(1, 3), d(1, 4), d(1, 5));
    let (d21, d22, d23, d24) = (d(2, 1), d(2, 2), d(2, 3), d(2, 4));
    let (d31, d32, d33) = (d(3, 1), d(3, 2), d(3, 3));
    let (d41, d42, d43, d44) = (d(4, 1), d(4, 2), d(4, 3), d(4, 4));
    let (d53, d54, d55) = (d(5, 3), d(5, 4), d(5, 5));

    let k1 = -d11 - d22 - d33 - d44 - d55;
    let k2 = d11 * d22 - d12 * d21 - d31 * d13 - d14 * d41 - d23 * d32 - d24 * d42
        + d44 * (d11 + d22 + d33)
        - d33 * (-d11 - d22)
        - d55 * (-d11 - d22 - d33 - d44);

    let s13 = d11 * d13 + d12 * d23;
    let s23 = d21 * d13 + d22 * d23;
    let s14 = d11 * d14 + d12 * d24;
    let s24 = d21 * d14 + d22 * d24;
    let s34 = d31 * d14 + d32 * d24;
    let t1 = d14 * d41 + d24 * d42;
    let t2 = d13 * d31 + d23 * d32;
    let minor12 = d11 * d22 - d12 * d21;
    let inner = -d11 * d22 + d12 * d21 + t2 + d33 * (-d11 - d22);

    let k3 = -d15 * d53 * d31 - d15 * d54 * d41 - d31 * s13 - d32 * s23 - d41 * s14 - d42 * s24
        - d43 * s34
        + (d11 + d22 + d33) * t1
        - d33 * minor12
        - t2 * (-d11 - d22)
        + d44 * inner
        - d55
            * (minor12 - d13 * d31 - d14 * d41 - d23 * d32 - d24 * d42 + d44 * (d11 + d22 + d33)
                - d33 * (-d11 - d22));

    let k4 = -d53 * (d11 * d31 * d15 + d21 * d32 * d15 + d31 * d15 * d33)
        - d54 * (d11 * d41 * d15 + d21 * d15 * d42 + d31 * d15 * d43 - d41 * d15 * d44)
        - d41 * (d11 * s14 + d12 * s24 + d13 * s34)
        - d42 * (d21 * s14 + d22 * s24 + d23 * s34)
        - d43 * (d31 * s14 + d32 * s24 + d33 * s34)
        + (d11 + d22 + d33) * (d41 * s14 + d42 * s24 + d43 * s34)
        + t1 * inner
        + d44 * (d31 * s13 + d32 * s23 + d33 * minor12 + t2 * (-d11 - d22))
        - (d31 * d15 * d53 + d41 * d15 * d54) * (-d11 - d22 - d33 - d44)
        - d55
            * (-d31 * s13 - d32 * s23 - d41 * s14 - d42 * s24 - d43 * s34
                + (d11 + d22 + d33) * t1
                - d33 * minor12
                - t2 * (-d11 - d22)
                + d44 * inner);
    [k1, k2, k3, k4]
}

/// Compares [`expanded_coefficients`] with `k` and logs disagreements.
/// Returns the relative mismatch per coefficient.
pub fn check_expanded_coefficients(m: &Matrix5, k: &[f64; 5]) -> [f64; 4] {
    let e = expanded_coefficients(m);
    let mut rel = [0.0; 4];
    for i in 0..4 {
        rel[i] = (e[i] - k[i]).abs() / k[i].abs().max(f64::MIN_POSITIVE);
        if rel[i] > 1e-8 {
            log::warn!("expanded k{} = {:e} differs from Faddeev–LeVerrier {:e}", i + 1, e[i], k[i]);
        }
    }
    rel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    LocallyAsymptoticallyStable,
    Unstable,
    Marginal,
}

/// Marginal if some real part is within `1e-9 · max|τ|` of zero.
pub fn classify(s: &Spectrum) -> Classification {
    let scale = s.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if s.values.iter().any(|z| z.re.abs() <= 1e-9 * scale) {
        Classification::Marginal
    } else if s.abscissa() > 0.0 {
        Classification::Unstable
    } else {
        Classification::LocallyAsymptoticallyStable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub point: EquilibriumPoint,
    pub jacobian: Matrix5,
    pub eigenvalues: [Complex64; 5],
    pub eigen_residuals: [f64; 5],
    pub char_poly_coeffs: [f64; 5],
    pub routh_hurwitz: RouthHurwitz,
    pub classification: Classification,
}

pub fn analyze(p: &ModelParameters, point: &EquilibriumPoint) -> Result<StabilityReport> {
    p.validate()?;
    let j = jacobian(p, &point.state);
    let spectrum = eigenvalues(&j)?;
    let k = char_poly(&j);
    check_expanded_coefficients(&j, &k);
    Ok(StabilityReport {
        point: *point,
        jacobian: j,
        eigenvalues: spectrum.values,
        eigen_residuals: spectrum.residuals,
        char_poly_coeffs: k,
        routh_hurwitz: routh_hurwitz(&k),
        classification: classify(&spectrum),
    })
}

/// Weights of `L₀ = C₁I₁ + C₂I₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovWeights {
    pub c1: f64,
    pub c2: f64,
}

/// `C₁ = 1/k₁ − mω(μ+ω+α) / (k₂(−k₁ω(μ+ω+α) + β₁BQ))`, `C₂ = 1/k₂`.
pub fn lyapunov_weights(p: &ModelParameters) -> Result<LyapunovWeights> {
    p.validate()?;
    let g = p.aggregates();
    let den = -g.k1 * g.a + p.beta1 * p.birth_rate * g.q;
    if den.abs() <= 1e-12 * g.k1 * g.a {
        return Err(Error::ThresholdDegenerate("R₀₁ = 1 makes C₁ singular".into()));
    }
    Ok(LyapunovWeights {
        c1: 1.0 / g.k1 - p.mutation_rate * g.a / (g.k2 * den),
        c2: 1.0 / g.k2,
    })
}

/// `dL₀/dt = C₁I₁' + C₂I₂'` at `x`.
pub fn dfe_lyapunov_derivative(p: &ModelParameters, x: &State) -> Result<f64> {
    let c = lyapunov_weights(p)?;
    let f = crate::model::rhs(p, x)?;
    Ok(c.c1 * f[2] + c.c2 * f[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{disease_free, endemic};
    use crate::model::ParamName;

    #[test]
    fn jacobian_matches_finite_differences_at_reference_state() {
        let p = ModelParameters::default();
        let x = State::reference_initial();
        let a = jacobian(&p, &x);
        let n = jacobian_fd(&p, &x);
        for i in 0..5 {
            for j in 0..5 {
                let (u, v) = (a.0[i][j], n.0[i][j]);
                assert!((u - v).abs() <= 1e-6 * u.abs().max(1e-12), "({i},{j}) {u} vs {v}");
            }
            if i == 2 || i == 3 {
                assert_eq!(a.0[i][4], 0.0);
            }
        }
    }

    #[test]
    fn strain1_growth_entry_at_dfe() {
        let p = ModelParameters::default();
        let j = jacobian(&p, &disease_free(&p).unwrap().state);
        let want = -0.062031955531415875;
        assert!((j.0[2][2] - want).abs() <= 1e-13 * want.abs());
    }

    #[test]
    fn dfe_spectrum_matches_closed_forms() {
        let p = ModelParameters::default();
        let s = eigenvalues(&jacobian(&p, &disease_free(&p).unwrap().state)).unwrap();
        let mut want = dfe_eigenvalues(&p);
        want.sort_by(|a, b| b.total_cmp(a));
        for (z, w) in s.values.iter().zip(want) {
            assert!((z.re - w).abs() <= 1e-8 * w.abs() && z.im == 0.0, "{z} vs {w}");
        }
        assert_eq!(classify(&s), Classification::Unstable);
    }

    #[test]
    fn char_poly_trivial_cases() {
        assert_eq!(char_poly(&Matrix5::zeros()), [0.0; 5]);
        assert_eq!(char_poly(&Matrix5::identity()), [-5.0, 10.0, -10.0, 5.0, -1.0]);
        let s = eigenvalues(&Matrix5::from_diagonal([1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        let re: Vec<f64> = s.values.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![5.0, 4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn routh_hurwitz_examples() {
        // (τ + 1)⁵
        assert!(routh_hurwitz(&[5.0, 10.0, 10.0, 5.0, 1.0]).satisfied);
        let r = routh_hurwitz(&[5.0, 10.0, 10.0, 5.0, -1.0]);
        assert!(!r.first_condition && !r.satisfied);
        // (τ − 1)(τ + 1)⁴ has a positive root despite k₁ > 0.
        let r = routh_hurwitz(&[3.0, 2.0, -2.0, -3.0, -1.0]);
        assert!(!r.satisfied);
    }

    #[test]
    fn endemic_point_is_stable_and_expanded_terms_agree() {
        let p = ModelParameters::default();
        let e = endemic(&p, None).unwrap();
        let r = analyze(&p, &e).unwrap();
        assert_eq!(r.classification, Classification::LocallyAsymptoticallyStable);
        assert!(r.routh_hurwitz.satisfied);
        let rel = check_expanded_coefficients(&r.jacobian, &r.char_poly_coeffs);
        assert!(rel[0] < 1e-12 && rel[1] < 1e-10 && rel[2] < 1e-10, "{rel:?}");
        // k₁ = −trace
        assert_eq!(r.char_poly_coeffs[0], -r.jacobian.trace());
    }

    #[test]
    fn lyapunov_derivative_basics() {
        let p = ModelParameters::default();
        let x = State::new(1e7, 2e7, 0.0, 0.0, 5e6);
        assert_eq!(dfe_lyapunov_derivative(&p, &x).unwrap(), 0.0);
        let v = dfe_lyapunov_derivative(&p, &State::reference_initial()).unwrap();
        assert!(v.is_finite());

        let g = p.aggregates();
        let at_threshold = p.with(ParamName::Beta1, g.k1 * g.a / (p.birth_rate * g.q));
        assert!(matches!(
            dfe_lyapunov_derivative(&at_threshold, &x),
            Err(Error::ThresholdDegenerate(_))
        ));
    }
}
