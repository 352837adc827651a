mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{initial_in_region, rel};
use svi2r::bifurcation::{self, Regime, Strain};
use svi2r::calibration::{objective, CaseSeries, ObservableKind};
use svi2r::equilibria::{disease_free, endemic, endemic_relations};
use svi2r::model::{conservation_residual, rhs};
use svi2r::odeint::{integrate_with, IntegratorConfig};
use svi2r::reproduction::{closed_form, reproduction_numbers};
use svi2r::sensitivity::{analytic_index, finite_difference_index, sensitivity_indices};
use svi2r::stability::{self, char_poly, classify, jacobian, jacobian_fd, Classification};
use svi2r::{ModelParameters, ParamName, State};

/// Rates within a factor of 3 of the baseline, σ anywhere in [0, 1].
fn params() -> impl Strategy<Value = ModelParameters> {
    (prop::array::uniform13(-1.0986f64..1.0986), 0.0f64..=1.0).prop_map(|(logs, sigma)| {
        let mut p = ModelParameters::default();
        for (name, l) in ParamName::ALL.into_iter().zip(logs) {
            p.set(name, p.get(name) * l.exp());
        }
        p.vaccine_efficacy = sigma;
        p
    })
}

/// Like [`params`], with the transmission rates rescaled so that both
/// reproduction numbers lie in [0.05, 0.99].
fn subcritical_params() -> impl Strategy<Value = ModelParameters> {
    (params(), 0.05f64..0.99, 0.05f64..0.99).prop_map(|(mut p, t1, t2)| {
        let (r1, r2) = closed_form(&p);
        p.beta1 *= t1 / r1;
        p.beta2 *= t2 / r2;
        p
    })
}

fn state() -> impl Strategy<Value = State> {
    prop::array::uniform5(0.0f64..5e7).prop_map(State::from_array)
}

fn balance_scale(p: &ModelParameters, x: &State) -> f64 {
    let f = p.vector_field(&x.to_array());
    f.iter().map(|v| v.abs()).sum::<f64>() + p.birth_rate + p.natural_death * x.total()
        + p.excess_death1 * x.i1
        + p.excess_death2 * x.i2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conservation_holds_pointwise(p in params(), x in state()) {
        let r = conservation_residual(&p, &x).unwrap();
        prop_assert!(r.abs() <= 1e-9 * balance_scale(&p, &x));
    }

    #[test]
    fn dfe_is_a_rest_point(p in params()) {
        let e0 = disease_free(&p).unwrap();
        prop_assert!(e0.residual_norm <= 1e-9 * p.birth_rate);
    }

    #[test]
    fn orthant_faces_are_not_crossed(p in params(), x in state(), face in 0usize..5) {
        let mut a = x.to_array();
        a[face] = 0.0;
        let f = rhs(&p, &State::from_array(a)).unwrap();
        prop_assert!(f[face] >= 0.0, "face {face}: {}", f[face]);
        if face == 2 {
            prop_assert_eq!(f[2], 0.0);
        }
    }

    #[test]
    fn analytic_jacobian_matches_differences(p in params(), x in state()) {
        let a = jacobian(&p, &x);
        let n = jacobian_fd(&p, &x);
        let floor = 1e-10 * a.norm();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert!((a.0[i][j] - n.0[i][j]).abs() <= 1e-6 * a.0[i][j].abs() + floor, "({i},{j}): {} vs {}, x = {x:?}", a.0[i][j], n.0[i][j]);
            }
        }
    }

    #[test]
    fn vieta_relations(p in params(), x in state()) {
        let j = jacobian(&p, &x);
        let k = char_poly(&j);
        let spec = stability::eigenvalues(&j).unwrap();
        let sum: num_complex::Complex64 = spec.values.iter().sum();
        let prod: num_complex::Complex64 = spec.values.iter().product();
        let scale = spec.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((sum.re + k[0]).abs() <= 1e-8 * 5.0 * scale);
        prop_assert!((prod.re + k[4]).abs() <= 1e-8 * scale.powi(5));
        prop_assert!(sum.im.abs() <= 1e-8 * scale && prod.im.abs() <= 1e-8 * scale.powi(5));
    }

    #[test]
    fn dfe_classification_follows_r0(p in params()) {
        let (r1, r2) = closed_form(&p);
        prop_assume!((r1 - 1.0).abs() > 1e-6 && (r2 - 1.0).abs() > 1e-6);
        let e0 = disease_free(&p).unwrap();
        let class = classify(&stability::eigenvalues(&jacobian(&p, &e0.state)).unwrap());
        let want = if r1 < 1.0 && r2 < 1.0 {
            Classification::LocallyAsymptoticallyStable
        } else {
            Classification::Unstable
        };
        prop_assert_eq!(class, want);
    }

    #[test]
    fn next_generation_matrix_structure(p in params()) {
        let r = reproduction_numbers(&p).unwrap();
        prop_assert_eq!(r.ngm_k[0][1], 0.0);
        prop_assert!(rel(r.max(), r.r01.max(r.r02)) == 0.0);
        prop_assert!(rel(r.from_spectral.0, r.from_closed_form.0) <= 1e-12);
        prop_assert!(rel(r.from_spectral.1, r.from_closed_form.1) <= 1e-12);
    }

    #[test]
    fn reproduction_number_monotonicity(p in params(), f in 1.01f64..2.0) {
        let (r1, r2) = closed_form(&p);
        let up = |name: ParamName| closed_form(&p.with(name, p.get(name) * f));
        prop_assert!(up(ParamName::Beta1).0 > r1);
        prop_assert!(up(ParamName::Beta2).1 > r2);
        let b = up(ParamName::BirthRate);
        prop_assert!(b.0 > r1 && b.1 > r2);
        prop_assert!(rel(b.0, f * r1) <= 1e-12 && rel(b.1, f * r2) <= 1e-12);
        prop_assert!(up(ParamName::Recovery1).0 < r1);
        prop_assert!(up(ParamName::Recovery2).1 < r2);
        if p.vaccine_efficacy < 0.99 {
            let s = closed_form(&p.with(ParamName::VaccineEfficacy, (p.vaccine_efficacy + 0.01).min(1.0)));
            prop_assert!(s.0 < r1 && s.1 < r2);
        }
    }

    #[test]
    fn sensitivity_structure(p in params()) {
        let r = sensitivity_indices(&p).unwrap();
        prop_assert_eq!(r.entry(ParamName::Beta1).index_r01, 1.0);
        prop_assert_eq!(r.entry(ParamName::Beta2).index_r02, 1.0);
        let z1 = r.entry(ParamName::Recovery1).index_r01;
        let z2 = r.entry(ParamName::Recovery2).index_r02;
        prop_assert!(z1 > -1.0 && z1 <= 0.0 && z2 > -1.0 && z2 <= 0.0);
    }

    #[test]
    fn regime_matches_constant_signs(p in params(), strain in prop_oneof![Just(Strain::One), Just(Strain::Two)]) {
        if let Ok(r) = bifurcation::analyze(&p, strain) {
            prop_assert_eq!(r.regime == Regime::Backward, r.a > 0.0 && r.b > 0.0);
            if let Ok((ac, bc)) = bifurcation::closed_form_constants(&p, strain) {
                prop_assert!(rel(r.a, ac) <= 1e-8 && rel(r.b, bc) <= 1e-8);
            }
        }
    }

    #[test]
    fn objective_ignores_row_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let days: Vec<u32> = (0..8).map(|d| d * 3).collect();
        let rows: Vec<(u32, f64)> = days.iter().map(|&d| (d, 1e5 * (1.0 + d as f64))).collect();
        let mut shuffled = rows.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let p = ModelParameters::default();
        let x0 = State::reference_initial();
        let a = CaseSeries::from_rows(rows, ObservableKind::ActiveInfectedTotal).unwrap();
        let b = CaseSeries::from_rows(shuffled, ObservableKind::ActiveInfectedTotal).unwrap();
        prop_assert_eq!(objective(&p, &a, &x0).unwrap(), objective(&p, &b, &x0).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn region_is_forward_invariant(p in params(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = initial_in_region(&mut rng, &p);
        let bound = x0.total().max(p.population_bound());
        let mut worst: f64 = 0.0;
        integrate_with(&p, &x0, &IntegratorConfig::default(), &[365.0], |_, x| {
            worst = worst.max(x.total() - bound);
            std::ops::ControlFlow::Continue(())
        })
        .unwrap();
        prop_assert!(worst <= 1e-8 * bound, "excess {worst}");
    }

    #[test]
    fn endemic_points_are_consistent(p in params()) {
        let (r1, r2) = closed_form(&p);
        prop_assume!(r1.max(r2) > 1.05);
        match endemic(&p, None) {
            Ok(e) => {
                prop_assert!(e.residual_norm <= 1e-8 * p.birth_rate.max(1.0));
                let c = endemic_relations(&p, e.state.i1, e.state.i2);
                prop_assert!(rel(e.state.s, c.s) <= 1e-6 && rel(e.state.v, c.v) <= 1e-6);
                prop_assert!((e.state.r - c.r).abs() <= 1e-6 * c.r.max(1.0));
            }
            Err(err) => prop_assert!(false, "no endemic point above threshold: {err}"),
        }
    }

    #[test]
    fn no_interior_endemic_below_threshold(p in subcritical_params(), seed in any::<u64>()) {
        let backward = Strain::BOTH
            .iter()
            .any(|&s| matches!(bifurcation::analyze(&p, s), Ok(r) if r.regime == Regime::Backward));
        prop_assume!(!backward);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let guess = initial_in_region(&mut rng, &p);
            if let Ok(e) = endemic(&p, Some(guess)) {
                prop_assert!(false, "interior equilibrium {:?}", e.state);
            }
        }
    }

    #[test]
    fn finite_difference_indices_converge(p in params(), k in 0usize..13) {
        let name = ParamName::ALL[k];
        let (a1, a2) = analytic_index(&p, name);
        let errs: Vec<f64> = [1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&h| {
                let (f1, f2) = finite_difference_index(&p, name, h);
                (f1 - a1).abs().max((f2 - a2).abs())
            })
            .collect();
        prop_assert!(errs[2] <= 1e-7, "{name}: {errs:?}");
        // Central differences: the error shrinks with the step until rounding dominates.
        prop_assert!(errs[1] <= errs[0] + 1e-9, "{name}: {errs:?}");
    }
}
