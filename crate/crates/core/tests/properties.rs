use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use bqpt::estimators::{estimate_v_squared, moment_r2_pair, ParamEstimates, Thresholds, OzStatistics};
use bqpt::measurement::{closed_form_ox, closed_form_oz, ox_probabilities, oz_probabilities, sample_outcome, FrequencyAccumulator, OutcomeProbabilities};
use bqpt::oracle::evolution_by_expm;
use bqpt::physics::{apply_process, build_evolution_matrix, mixing_parameters, sgn_nonneg, PhysicalConstants, ProcessParams};
use bqpt::reconstruction::{extended_protocol, relative_error, shift_phase_factor, single_interval, ProtocolTimes};
use bqpt::states::{product_state, PreparedPair, QubitParams};

fn process() -> impl Strategy<Value = ProcessParams> {
    (0.5..3.0f64, 0.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_map(|(g, b, jz, jxy)| ProcessParams::from_kelvin(g, b, jz, jxy, PhysicalConstants::default()))
}

fn qubit() -> impl Strategy<Value = QubitParams> {
    (0.0..=1.0f64, -PI..PI, -PI..PI).prop_map(|(r, theta, phi)| QubitParams { r, theta, phi })
}

fn pair() -> impl Strategy<Value = PreparedPair> {
    (qubit(), qubit()).prop_map(|(q1, q2)| PreparedPair { q1, q2 })
}

fn exact_estimates(p: &ProcessParams, v_tau: f64, w_tau: f64) -> ParamEstimates {
    let v = mixing_parameters(p, v_tau);
    let w = mixing_parameters(p, w_tau);
    ParamEstimates {
        v_hat: v.v,
        w1_hat: w.w1,
        w2_hat: w.w2,
        diagnostics: Default::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evolution_is_unitary(p in process(), dt in 1e-12..5e-9f64) {
        let m = build_evolution_matrix(&p, dt);
        prop_assert!(m.unitarity_defect() <= 1e-12);
        prop_assert!((m.frobenius_norm() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn evolution_composes(p in process(), a in 0.0..3e-9f64, b in 0.0..3e-9f64) {
        let lhs = build_evolution_matrix(&p, a) * build_evolution_matrix(&p, b);
        prop_assert!(lhs.max_abs_diff(&build_evolution_matrix(&p, a + b)) <= 1e-10);
    }

    #[test]
    fn norm_is_preserved(p in process(), dt in 0.0..5e-9f64, pr in pair()) {
        let out = apply_process(&build_evolution_matrix(&p, dt), &product_state(&pr));
        prop_assert!((out.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn closed_forms_match_state_vector(p in process(), dt in 0.0..5e-9f64, pr in pair()) {
        let mix = mixing_parameters(&p, dt);
        let out = apply_process(&build_evolution_matrix(&p, dt), &product_state(&pr));
        let z = oz_probabilities(&out).p;
        let x = ox_probabilities(&out).p;
        let (p1, p2, p4) = closed_form_oz(&pr, mix.v);
        prop_assert!((p1 - z[0]).abs() <= 1e-12);
        prop_assert!((p2 - z[1]).abs() <= 1e-12);
        prop_assert!((p4 - z[3]).abs() <= 1e-12);
        let cf = closed_form_ox(&pr, &mix);
        prop_assert!((cf.diff - (x[0] - x[3])).abs() <= 1e-12);
        prop_assert!((cf.sum - (x[0] + x[3])).abs() <= 1e-12);
    }

    #[test]
    fn relative_error_is_bounded(p in process(), a in 0.0..5e-9f64, b in 0.0..5e-9f64) {
        let e = relative_error(&build_evolution_matrix(&p, a), &build_evolution_matrix(&p, b));
        prop_assert!((0.0..=2.0 + 1e-12).contains(&e));
    }

    #[test]
    fn grouping_does_not_change_frequencies(outcomes in prop::collection::vec(0usize..4, 1..200), split in 1usize..20) {
        let mut flat = FrequencyAccumulator::for_qubits(2);
        outcomes.iter().for_each(|&o| flat.accumulate(o));
        let mut grouped = FrequencyAccumulator::for_qubits(2);
        for chunk in outcomes.chunks(split) {
            let mut part = FrequencyAccumulator::for_qubits(2);
            chunk.iter().for_each(|&o| part.accumulate(o));
            grouped.merge(&part);
        }
        prop_assert_eq!(flat.estimate4().unwrap(), grouped.estimate4().unwrap());
    }

    #[test]
    fn sampled_outcome_has_positive_probability(w in prop::array::uniform4(0.0..1.0f64), u in 0.0..1.0f64) {
        let s: f64 = w.iter().sum();
        prop_assume!(s > 0.0);
        let p = OutcomeProbabilities { p: w.map(|x| x / s) };
        prop_assert!(p.p[sample_outcome(&p, u)] > 0.0);
    }

    #[test]
    fn v_squared_inverts_forward_model(lo1 in 0.0..0.3f64, w1 in 0.05..0.2f64, lo2 in 0.55..0.8f64, w2 in 0.05..0.2f64, v in -1.0..1.0f64) {
        let m1 = (lo1 * lo1 + lo1 * (lo1 + w1) + (lo1 + w1).powi(2)) / 3.0;
        let m2 = (lo2 * lo2 + lo2 * (lo2 + w2) + (lo2 + w2).powi(2)) / 3.0;
        let oz = OzStatistics { e_p1zz: m1 * m2, e_p2zz: m1 * (1.0 - m2) + (m2 - m1) * v * v, e_p4zz: (1.0 - m1) * (1.0 - m2) };
        let m = moment_r2_pair(oz.e_p1zz, oz.e_p4zz).unwrap();
        let (v_sq, _) = estimate_v_squared(&oz, m, &Thresholds::default()).unwrap();
        prop_assert!((v_sq - v * v).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_matches_matrix_exponential(p in process(), dt in 0.0..5e-9f64) {
        let d = build_evolution_matrix(&p, dt).max_abs_diff(&evolution_by_expm(&p, dt));
        prop_assert!(d <= 1e-10, "deviation {}", d);
    }

    #[test]
    fn extended_protocol_is_shift_invariant(p in process(), tau1 in 0.05e-9..1e-9f64, kxy in -2i64..=2, kz in -1i64..=1) {
        let t = ProtocolTimes::doubling(tau1);
        let est = exact_estimates(&p, t.tau1, t.tau2);
        let gb = p.zeeman() / p.constants.hbar;
        let base = extended_protocol(&est, &t, gb, 0, 0).unwrap().m_hat;
        let shifted = extended_protocol(&est, &t, gb, kxy, kz).unwrap().m_hat;
        prop_assert!(shifted.max_abs_diff(&base) <= 1e-12);
        prop_assert!(base.max_abs_diff(&build_evolution_matrix(&p, t.tau3)) <= 1e-10);
    }

    #[test]
    fn single_interval_carries_shift_phase(p in process(), tau in 0.05e-9..1e-9f64, kxy in -2i64..=2, kz in -1i64..=1) {
        let est = exact_estimates(&p, tau, tau);
        let gb = p.zeeman() / p.constants.hbar;
        let c = p.scaled(tau);
        let kxy0 = ((c.jxy + est.v_hat.asin()) / PI).round() as i64;
        let d = sgn_nonneg(est.w2_hat) * est.w1_hat.acos();
        let kz0 = ((c.jz - d - c.jxy - c.gb) / (2.0 * PI)).round() as i64;
        let m_hat = single_interval(&est, tau, gb, kxy, kz).unwrap().m_hat;
        let factor = shift_phase_factor(kxy - kxy0, kz - kz0);
        prop_assert!(m_hat.max_abs_diff(&build_evolution_matrix(&p, tau).scaled(factor)) <= 1e-10);
        prop_assert!((factor.norm() - 1.0).abs() < 1e-15 && factor != Complex64::new(0.0, 0.0));
    }
}
