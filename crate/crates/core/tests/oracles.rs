//! Frozen reference values and forward-model oracles for the estimation
//! and reconstruction chain at the reference configuration.

use std::f64::consts::{FRAC_2_PI, PI};

use approx::assert_abs_diff_eq;

use bqpt::estimators::{
    estimate_v_sign, estimate_v_squared, estimate_w, expected_r14_i14, moment_r2_pair, EstimatorOptions, OxStatistics, OzStatistics, Thresholds,
};
use bqpt::measurement::closed_form_ox;
use bqpt::physics::{angular_frequencies, build_evolution_matrix, mixing_parameters, ProcessParams};
use bqpt::reconstruction::{extended_protocol, invert_v, invert_w, ProtocolTimes};
use bqpt::states::{analytic_moments, sample_pair, Preset, StateKey};

// Independent double-precision evaluation of the reference configuration.
const V_TAU1: f64 = -0.925_083_715_889_750_4;
const W1_TAU2: f64 = -0.521_707_584_505_356_6;
const W2_TAU2: f64 = 0.853_124_373_271_322_1;
const DPHI_1M1_TAU2: f64 = -358.644_137_746_761;
const OMEGA: [f64; 4] = [110_345_780_272.260_01, 26_184_067_841.441_288, 104_736_271_365.765_12, -241_266_119_479.466_43];

fn reference() -> (ProcessParams, ProtocolTimes) {
    (ProcessParams::reference(), ProtocolTimes::doubling(0.51e-9))
}

#[test]
fn reference_values_are_frozen() {
    let (p, t) = reference();
    let m1 = mixing_parameters(&p, t.tau1);
    let m2 = mixing_parameters(&p, t.tau2);
    assert_abs_diff_eq!(m1.v, V_TAU1, epsilon = 1e-12);
    assert_abs_diff_eq!(m2.w1, W1_TAU2, epsilon = 1e-12);
    assert_abs_diff_eq!(m2.w2, W2_TAU2, epsilon = 1e-12);
    assert_abs_diff_eq!(m2.delta_phi_1m1, DPHI_1M1_TAU2, epsilon = 1e-9);
    let f = angular_frequencies(&p);
    for (got, want) in [f.omega_11, f.omega_10, f.omega_00, f.omega_1m1].into_iter().zip(OMEGA) {
        assert_abs_diff_eq!(got, want, epsilon = 1e-1);
    }
}

#[test]
fn v_squared_from_forward_step1_expectations() {
    let (p, t) = reference();
    let v = mixing_parameters(&p, t.tau1).v;
    let m = analytic_moments(&Preset::Step1.distribution()).unwrap();
    let (m1, m2) = (m.e_r2[0], m.e_r2[1]);
    let oz = OzStatistics {
        e_p1zz: m1 * m2,
        e_p2zz: m1 * (1.0 - m2) + (m2 - m1) * v * v,
        e_p4zz: (1.0 - m1) * (1.0 - m2),
    };
    let moments = moment_r2_pair(oz.e_p1zz, oz.e_p4zz).unwrap();
    assert_abs_diff_eq!(moments.0, 0.07, epsilon = 1e-12);
    assert_abs_diff_eq!(moments.1, 0.57, epsilon = 1e-12);
    let (v_sq, clamped) = estimate_v_squared(&oz, moments, &Thresholds::default()).unwrap();
    assert!(!clamped);
    assert_abs_diff_eq!(v_sq, v * v, epsilon = 1e-10);
}

#[test]
fn v_sign_from_forward_step2_expectations() {
    let m = analytic_moments(&Preset::Step2.distribution()).unwrap();
    assert_abs_diff_eq!(m.e_sin_delta_i, FRAC_2_PI, epsilon = 1e-15);
    assert_eq!(m.sign_e_sin_delta_i, 1);
    let (m1, m2) = (m.e_r2[0], m.e_r2[1]);
    for v in [V_TAU1, -V_TAU1, 0.3, -0.3] {
        let e_p2zz = m1 * (1.0 - m2) * (1.0 - v * v) + (1.0 - m1) * m2 * v * v
            - 2.0 * m.e_rq[0] * m.e_rq[1] * (1.0 - v * v).sqrt() * v * m.e_sin_delta_i;
        let oz = OzStatistics {
            e_p1zz: m1 * m2,
            e_p2zz,
            e_p4zz: (1.0 - m1) * (1.0 - m2),
        };
        let s = estimate_v_sign(&oz, (m1, m2), v * v, 1, &Thresholds::default()).unwrap();
        assert_eq!(s, v.signum(), "v = {v}");
    }
}

fn forward_ox(preset: Preset, w1: f64, w2: f64, d: f64) -> OxStatistics {
    let m = analytic_moments(&preset.distribution()).unwrap();
    let cross = m.e_rq[0] * m.e_cos_phi_theta[0];
    let sum = 0.5 + cross * cross * (1.0 + d.cos());
    let (r14, i14) = expected_r14_i14(m.e_r2[0], cross, d);
    let diff = r14 * w1 - i14 * w2;
    OxStatistics {
        e_p1xx: (sum + diff) / 2.0,
        e_p4xx: (sum - diff) / 2.0,
        e_p1zz: m.e_r2[0] * m.e_r2[1],
    }
}

#[test]
fn w_from_forward_expectations() {
    let eqs = [
        forward_ox(Preset::WEq1, W1_TAU2, W2_TAU2, DPHI_1M1_TAU2),
        forward_ox(Preset::WEq2, W1_TAU2, W2_TAU2, DPHI_1M1_TAU2),
    ];
    let w = estimate_w(&eqs, DPHI_1M1_TAU2, &EstimatorOptions::default()).unwrap();
    assert_abs_diff_eq!(w.w1, W1_TAU2, epsilon = 1e-10);
    assert_abs_diff_eq!(w.w2, W2_TAU2, epsilon = 1e-10);
    assert!(w.radicand_clamped.iter().all(|c| !c));
}

#[test]
fn r14_i14_expectations_match_monte_carlo() {
    let dist = Preset::WEq1.distribution();
    let (p, t) = reference();
    let mix = mixing_parameters(&p, t.tau2);
    let n = 1_000_000u64;
    let (mut sr, mut si) = (0.0, 0.0);
    for i in 0..n {
        let cf = closed_form_ox(&sample_pair(&dist, &StateKey::new(99, 0, i)), &mix);
        sr += cf.r14;
        si += cf.i14;
    }
    let m = analytic_moments(&dist).unwrap();
    let (r14, i14) = expected_r14_i14(m.e_r2[0], m.e_rq[0] * m.e_cos_phi_theta[0], mix.delta_phi_1m1);
    assert_abs_diff_eq!(sr / n as f64, r14, epsilon = 5e-3);
    assert_abs_diff_eq!(si / n as f64, i14, epsilon = 5e-3);
}

fn residue(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

#[test]
fn shifted_estimates_are_congruent_to_true_couplings() {
    let (p, t) = reference();
    let c1 = p.scaled(t.tau1);
    let c2 = p.scaled(t.tau2);
    let (_, jxy1) = invert_v(V_TAU1, 0).unwrap();
    assert!(residue(jxy1 - c1.jxy, PI) < 1e-10);
    let (_, jz2) = invert_w(W1_TAU2, W2_TAU2, 2.0 * jxy1, c2.gb, 0).unwrap();
    assert!(residue(jz2 - c2.jz, 2.0 * PI) < 1e-9);
}

#[test]
fn extended_protocol_recovers_true_gate() {
    let (p, t) = reference();
    let est = bqpt::estimators::ParamEstimates {
        v_hat: V_TAU1,
        w1_hat: W1_TAU2,
        w2_hat: W2_TAU2,
        diagnostics: Default::default(),
    };
    let gb = p.zeeman() / p.constants.hbar;
    let m3 = build_evolution_matrix(&p, t.tau3);
    for (kxy, kz) in [(0, 0), (3, 1), (-2, -1)] {
        let rec = extended_protocol(&est, &t, gb, kxy, kz).unwrap();
        assert!(rec.m_hat.max_abs_diff(&m3) < 1e-10, "({kxy}, {kz})");
        assert!(rec.m_hat.unitarity_defect() < 1e-12);
        assert!((-PI / 2.0..=PI / 2.0).contains(&rec.delta_ed));
        assert!((-PI..=PI).contains(&rec.delta_phi_10d));
    }
}
