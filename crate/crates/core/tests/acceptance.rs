//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use bqpt::config::ExperimentConfig;
use bqpt::estimators::{Diagnostics, ParamEstimates};
use bqpt::harness::{run_sweep, Experiment, SweepReport, CRITERIA};
use bqpt::physics::{build_evolution_matrix, mixing_parameters, sgn_nonneg};
use bqpt::reconstruction::{extended_protocol, shift_phase_factor, single_interval, ProtocolTimes};
use bqpt::rng::repetition_seed;
use bqpt::selftest::{closed_form_oracle, hamiltonian_oracle, noiseless_pipeline};

const GOLDEN_V_TAU1: f64 = -0.925_083_715_889_750_4;
const GOLDEN_W1_TAU2: f64 = -0.521_707_584_505_356_6;
const GOLDEN_W2_TAU2: f64 = 0.853_124_373_271_322_1;

struct Line {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn line(name: &'static str, passed: bool, detail: String) -> Line {
    Line { name, passed, detail }
}

fn closed_form_criterion() -> Line {
    let t = Instant::now();
    let dev = closed_form_oracle(11, 100, 10_000);
    let secs = t.elapsed().as_secs_f64();
    line(
        "closed-form vs state-vector oracle",
        dev <= 1e-12 && secs < 10.0,
        format!("10^4 pairs x 100 processes, max deviation {dev:.2e} (<= 1e-12), {secs:.2} s (< 10 s)"),
    )
}

fn hamiltonian_criterion() -> Line {
    let t = Instant::now();
    let dev = hamiltonian_oracle(12, 100);
    let secs = t.elapsed().as_secs_f64();
    line(
        "hamiltonian oracle",
        dev <= 1e-10 && secs < 5.0,
        format!("100 processes, max entry deviation {dev:.2e} (<= 1e-10), {secs:.2} s (< 5 s)"),
    )
}

fn noiseless_criterion() -> Line {
    let cfg = ExperimentConfig::default();
    let t = cfg.times().unwrap();
    let p = cfg.process_params();
    let m1 = mixing_parameters(&p, t.tau1);
    let m2 = mixing_parameters(&p, t.tau2);
    let golden_dev = (m1.v - GOLDEN_V_TAU1)
        .abs()
        .max((m2.w1 - GOLDEN_W1_TAU2).abs())
        .max((m2.w2 - GOLDEN_W2_TAU2).abs());
    match noiseless_pipeline(&cfg, 20) {
        Ok([dv, dw1, dw2, em]) => {
            let d = dv.max(dw1).max(dw2);
            line(
                "noiseless pipeline",
                d <= 1e-10 && em <= 1e-9 && golden_dev <= 1e-12,
                format!("max |est - golden| {d:.2e} (<= 1e-10), M(tau3) rel. error {em:.2e} (<= 1e-9), golden drift {golden_dev:.1e}"),
            )
        }
        Err(e) => line("noiseless pipeline", false, e.to_string()),
    }
}

fn reference_error_sweep(nk: Vec<u64>) -> SweepReport {
    let cfg = ExperimentConfig {
        nk_budget: nk,
        k_sweep: vec![1],
        repetitions: 100,
        ..Default::default()
    };
    run_sweep(&cfg).expect("sweep runs")
}

fn reference_error_criterion() -> Vec<Line> {
    let bands = [(10_000u64, 0.03, 0.09), (100_000, 0.010, 0.030), (1_000_000, 0.0035, 0.011)];
    let report = reference_error_sweep(bands.iter().map(|b| b.0).collect());
    let mut out = Vec::new();
    for (p, &(n, lo, hi)) in report.points.iter().zip(&bands) {
        let e = p.m_rel_error.map_or(f64::NAN, |c| c.mean);
        out.push(line(
            "reference error level (mean relative error of M, K = 1)",
            (lo..=hi).contains(&e) && p.failed == 0,
            format!(
                "N = {n}: {:.2}% in [{:.2}%, {:.2}%], {} failed",
                100.0 * e,
                100.0 * lo,
                100.0 * hi,
                p.failed
            ),
        ));
    }
    out
}

fn trend_criterion() -> Line {
    let seeds = 1..=10u64;
    let (mut ok, mut total) = (0, 0);
    for s in seeds.clone() {
        let cfg = ExperimentConfig {
            nk_budget: vec![100_000],
            k_sweep: vec![1, 10, 100, 1000],
            repetitions: 100,
            master_seed: s,
            ..Default::default()
        };
        let r = run_sweep(&cfg).expect("sweep runs");
        for c in CRITERIA {
            let vals: Vec<f64> = r.points.iter().map(|p| p.criterion(c).map_or(f64::NAN, |x| x.mean)).collect();
            for w in vals.windows(2) {
                total += 1;
                if w[0] <= w[1] {
                    ok += 1;
                }
            }
        }
    }
    let frac = ok as f64 / total as f64;
    line(
        "error trend in K at NK = 10^5",
        frac >= 0.9,
        format!(
            "{ok}/{total} paired comparisons non-increasing as K decreases ({:.1}% >= 90%), master seeds {:?}",
            100.0 * frac,
            seeds
        ),
    )
}

fn exact_estimates(v: f64, w1: f64, w2: f64) -> ParamEstimates {
    ParamEstimates {
        v_hat: v,
        w1_hat: w1,
        w2_hat: w2,
        diagnostics: Diagnostics::default(),
    }
}

/// True `(k_xy, k_z)` at interval `tau` for the configured process.
fn true_shifts(cfg: &ExperimentConfig, tau: f64) -> (i64, i64) {
    let p = cfg.process_params();
    let mix = mixing_parameters(&p, tau);
    let c = p.scaled(tau);
    let k_xy = ((c.jxy + mix.v.asin()) / std::f64::consts::PI).round() as i64;
    let d = sgn_nonneg(mix.w2) * mix.w1.clamp(-1.0, 1.0).acos();
    let k_z = ((c.jz - d - c.jxy - c.gb) / (2.0 * std::f64::consts::PI)).round() as i64;
    (k_xy, k_z)
}

fn invariance_criterion() -> Vec<Line> {
    let cfg = ExperimentConfig::default();
    let p = cfg.process_params();
    let t: ProtocolTimes = cfg.times().unwrap();
    let gb = p.zeeman() / p.constants.hbar;
    let m1 = mixing_parameters(&p, t.tau1);
    let m2 = mixing_parameters(&p, t.tau2);

    let est = exact_estimates(m1.v, m2.w1, m2.w2);
    let base = extended_protocol(&est, &t, gb, 0, 0).unwrap().m_hat;
    let mut spread: f64 = 0.0;
    for kxy in -2..=2 {
        for kz in -1..=1 {
            spread = spread.max(extended_protocol(&est, &t, gb, kxy, kz).unwrap().m_hat.max_abs_diff(&base));
        }
    }
    let ext_err = base.max_abs_diff(&build_evolution_matrix(&p, t.tau3));

    let (kxy0, kz0) = true_shifts(&cfg, t.tau1);
    let m_tau1 = build_evolution_matrix(&p, t.tau1);
    let single = exact_estimates(m1.v, m1.w1, m1.w2);
    let mut cases: Vec<(i64, i64)> = Vec::new();
    for kxy in -2..=2 {
        for kz in -1..=1 {
            cases.push((kxy, kz));
        }
    }
    cases.push((kxy0 + 1, kz0));
    let (mut minus_dev, mut plus_dev): (f64, f64) = (0.0, 0.0);
    let mut minus_bad = Vec::new();
    for &(kxy, kz) in &cases {
        let m_hat = single_interval(&single, t.tau1, gb, kxy, kz).unwrap().m_hat;
        let (dxy, dz) = (kxy - kxy0, kz - kz0);
        let minus = Complex64::from_polar(1.0, std::f64::consts::PI * (dz as f64 - dxy as f64 / 2.0));
        let d = m_hat.max_abs_diff(&m_tau1.scaled(minus));
        if d > 1e-10 {
            minus_bad.push((dxy, dz));
        }
        minus_dev = minus_dev.max(d);
        plus_dev = plus_dev.max(m_hat.max_abs_diff(&m_tau1.scaled(shift_phase_factor(dxy, dz))));
    }
    vec![
        line(
            "indeterminacy: extended protocol shift invariance",
            spread <= 1e-12 && ext_err <= 1e-10,
            format!("max spread over k_xy in -2..2, k_z in -1..1: {spread:.2e} (<= 1e-12); |M_hat - M(tau3)| {ext_err:.2e}"),
        ),
        line(
            "indeterminacy: single-interval phase law exp(i(dkz*pi - dkxy*pi/2))",
            minus_dev <= 1e-10,
            format!(
                "max deviation {minus_dev:.2e} (<= 1e-10); violated for (dkxy, dkz) in {minus_bad:?}; \
                 exp(i(dkz*pi + dkxy*pi/2)) holds to {plus_dev:.2e}"
            ),
        ),
    ]
}

fn estimator_statistics_criterion() -> Line {
    let exp = Experiment::new(&ExperimentConfig::default()).unwrap();
    let ls = [1_000u64, 10_000, 100_000];
    let seeds = 200u64;
    let mut worst_z: f64 = 0.0;
    let mut worst_ratio: f64 = 1.0;
    for slot in 0..6 {
        let exact = exp.series_expectation(slot, 20).p;
        let mut scaled_var = [[0.0; 3]; 4];
        for (li, &l) in ls.iter().enumerate() {
            let draws: Vec<[f64; 4]> = (0..seeds)
                .map(|r| exp.series_frequencies(repetition_seed(2024, Some(li as u64), r), slot, l, 1).unwrap().p)
                .collect();
            for j in 0..4 {
                let xs: Vec<f64> = draws.iter().map(|d| d[j] - exact[j]).collect();
                let mean = xs.iter().sum::<f64>() / seeds as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
                let se = (var / seeds as f64).sqrt();
                worst_z = worst_z.max(mean.abs() / se);
                scaled_var[j][li] = var * l as f64;
            }
        }
        for v in scaled_var {
            let max = v.iter().cloned().fold(f64::MIN, f64::max);
            let min = v.iter().cloned().fold(f64::MAX, f64::min);
            worst_ratio = worst_ratio.max(max / min);
        }
    }
    line(
        "single-preparation estimator statistics",
        worst_z <= 3.0 && worst_ratio <= 1.5,
        format!(
            "6 series x 4 outcomes, 200 seeds, K = 1: max |bias|/SE {worst_z:.2} (<= 3), \
             max spread of L*variance over L in {{1e3, 1e4, 1e5}} {worst_ratio:.3} (<= 1.5)"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut lines = vec![closed_form_criterion(), hamiltonian_criterion(), noiseless_criterion()];
    lines.extend(reference_error_criterion());
    lines.push(trend_criterion());
    lines.extend(invariance_criterion());
    lines.push(estimator_statistics_criterion());
    for l in &lines {
        println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("acceptance: {} passed, {failed} failed in {:.1} s", lines.len() - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
