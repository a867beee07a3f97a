//! Elementary tests and fixed-budget sweeps.
//!
//! An elementary test draws six measurement series (N states × K copies
//! each), runs the single-preparation estimation chain and the extended
//! reconstruction, and scores `M̂(τ3)` against the true gate. A sweep runs
//! `repetitions` elementary tests per `(K, N = NK/K)` point and reduces them
//! to the four criteria: NRMSE of `v̂`, `ŵ1`, `ŵ2` and the mean relative
//! error of `M̂`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SERIES};
use crate::error::{Error, Result};
use crate::estimators::{estimate_parameters, OxStatistics, OzStatistics, ParamEstimates, SeriesStatistics};
use crate::measurement::{probabilities, sample_outcome, Axis, FrequencyAccumulator, OutcomeProbabilities, TrialRecord};
use crate::oracle::expected_probabilities;
use crate::physics::{apply_process, build_evolution_matrix, mixing_parameters, MixingParams, ProcessMatrix, ProcessParams};
use crate::reconstruction::{extended_protocol, nrmse, relative_error, ProtocolTimes};
use crate::rng::{repetition_seed, ParamId};
use crate::states::{analytic_moments, product_state, sample_pair, PrepDistribution, Preset, StateKey};

/// Series id of the redrawn sign series.
pub const STEP2_RETRY_SERIES: u32 = 6;

/// Which interval a series is measured at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Interval {
    Tau1,
    Tau2,
}

/// The six series in their fixed order.
const LAYOUT: [(Preset, Axis, Interval); SERIES] = [
    (Preset::Step1, Axis::Z, Interval::Tau1),
    (Preset::Step2, Axis::Z, Interval::Tau1),
    (Preset::WEq1, Axis::Z, Interval::Tau2),
    (Preset::WEq1, Axis::X, Interval::Tau2),
    (Preset::WEq2, Axis::Z, Interval::Tau2),
    (Preset::WEq2, Axis::X, Interval::Tau2),
];

/// Everything an elementary test needs that does not depend on the seed.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub params: ProcessParams,
    pub times: ProtocolTimes,
    pub m_tau1: ProcessMatrix,
    pub m_tau2: ProcessMatrix,
    pub m_tau3: ProcessMatrix,
    /// Mixing parameters at `τ1` (for `v`) and `τ2` (for `w1`, `w2`).
    pub mix_tau1: MixingParams,
    pub mix_tau2: MixingParams,
    pub sign_e_sin: i8,
    distributions: [PrepDistribution; SERIES],
    /// Exact series expectations, in exact mode.
    exact: Option<[OutcomeProbabilities; SERIES]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reconstructed {
    /// `Ĵxy·τ3/ħ`.
    pub jxy_scaled: f64,
    /// `Ĵz·τ3/ħ`.
    pub jz_scaled: f64,
    pub w1_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub seed: u64,
    pub n_states: u64,
    pub k_copies: u64,
    /// Prepared pairs consumed, `Σ N_s K_s` (6NK by default).
    pub preparations: u64,
    pub step2_retried: bool,
    pub estimates: Option<ParamEstimates>,
    pub reconstruction: Option<Reconstructed>,
    pub m_rel_error: Option<f64>,
    pub error: Option<String>,
    pub wall_seconds: f64,
}

impl TestResult {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn any_clamp(&self) -> bool {
        self.estimates.is_some_and(|e| e.diagnostics.any_clamp()) || self.reconstruction.is_some_and(|r| r.w1_clamped)
    }
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let params = config.process_params();
        let times = config.times()?;
        let distributions = LAYOUT.map(|(p, _, _)| config.presets.get(p));
        let sign_e_sin = analytic_moments(&config.presets.get(Preset::Step2))?.sign_e_sin_delta_i;
        let mut exp = Experiment {
            config: config.clone(),
            params,
            times,
            m_tau1: build_evolution_matrix(&params, times.tau1),
            m_tau2: build_evolution_matrix(&params, times.tau2),
            m_tau3: build_evolution_matrix(&params, times.tau3),
            mix_tau1: mixing_parameters(&params, times.tau1),
            mix_tau2: mixing_parameters(&params, times.tau2),
            sign_e_sin,
            distributions,
            exact: None,
        };
        if config.exact {
            let exact = std::array::from_fn(|s| {
                let (_, axis, iv) = LAYOUT[s];
                expected_probabilities(&exp.distributions[s], exp.matrix(iv), axis, config.quadrature_nodes)
            });
            exp.exact = Some(exact);
        }
        Ok(exp)
    }

    fn matrix(&self, iv: Interval) -> &ProcessMatrix {
        match iv {
            Interval::Tau1 => &self.m_tau1,
            Interval::Tau2 => &self.m_tau2,
        }
    }

    /// Frequencies of one series. `series` addresses the random streams and
    /// may differ from `slot` (the layout entry) for redrawn series.
    fn sample_series(
        &self,
        seed: u64,
        slot: usize,
        series: u32,
        n: u64,
        k: u64,
        mut records: Option<&mut Vec<TrialRecord>>,
    ) -> Result<OutcomeProbabilities> {
        let (_, axis, iv) = LAYOUT[slot];
        let m = self.matrix(iv);
        let dist = &self.distributions[slot];
        let mut acc = FrequencyAccumulator::for_qubits(2);
        for idx in 0..n {
            let key = StateKey::new(seed, series as u64, idx);
            let state = apply_process(m, &product_state(&sample_pair(dist, &key)));
            let p = probabilities(axis, &state);
            let stream = key.stream(ParamId::Measure);
            for c in 0..k {
                let j = sample_outcome(&p, stream.uniform_at(c));
                acc.accumulate(j);
                if let Some(r) = records.as_deref_mut() {
                    r.push(TrialRecord {
                        series,
                        axis,
                        state: idx,
                        outcome: j as u8 + 1,
                    });
                }
            }
        }
        acc.estimate4()
    }

    /// Pooled frequencies of series `slot` (0..6 in the fixed order) for
    /// one seed.
    pub fn series_frequencies(&self, seed: u64, slot: usize, n: u64, k: u64) -> Result<OutcomeProbabilities> {
        if slot >= SERIES {
            return Err(Error::InvalidInput(format!("series index {slot} out of range")));
        }
        self.sample_series(seed, slot, slot as u32, n, k, None)
    }

    /// Exact `E{p_j}` of series `slot`.
    pub fn series_expectation(&self, slot: usize, nodes: usize) -> OutcomeProbabilities {
        let (_, axis, iv) = LAYOUT[slot];
        expected_probabilities(&self.distributions[slot], self.matrix(iv), axis, nodes)
    }

    fn statistics(freq: &[OutcomeProbabilities; SERIES]) -> SeriesStatistics {
        SeriesStatistics {
            step1: OzStatistics::from(&freq[0]),
            step2: OzStatistics::from(&freq[1]),
            w_eq: [OxStatistics::new(&freq[2], &freq[3]), OxStatistics::new(&freq[4], &freq[5])],
        }
    }

    fn finish(&self, stats: &SeriesStatistics) -> Result<(ParamEstimates, Reconstructed, f64)> {
        let est = estimate_parameters(stats, self.mix_tau2.delta_phi_1m1, self.sign_e_sin, &self.config.estimator)?;
        let gb_over_hbar = self.params.zeeman() / self.params.constants.hbar;
        let rec = extended_protocol(&est, &self.times, gb_over_hbar, self.config.k_xy_hat, self.config.k_z_hat)?;
        let mut est = est;
        est.diagnostics.w1_clamped = rec.w1_clamped;
        Ok((
            est,
            Reconstructed {
                jxy_scaled: rec.operating.jxy,
                jz_scaled: rec.operating.jz,
                w1_clamped: rec.w1_clamped,
            },
            relative_error(&rec.m_hat, &self.m_tau3),
        ))
    }

    /// One elementary test with uniform `(N, K)` unless the configuration
    /// carries per-series sizes. Trial records are appended when requested.
    pub fn run_with_records(&self, seed: u64, n: u64, k: u64, mut records: Option<&mut Vec<TrialRecord>>) -> TestResult {
        let start = self.config.record_timing.then(Instant::now);
        let sizes = self.config.series_sizes(n, k);
        let mut preparations: u64 = sizes.iter().map(|(n, k)| n * k).sum();
        let mut step2_retried = false;

        let outcome = (|| -> Result<(ParamEstimates, Reconstructed, f64)> {
            let freq: [OutcomeProbabilities; SERIES] = match &self.exact {
                Some(e) => *e,
                None => {
                    let mut f = [OutcomeProbabilities { p: [0.0; 4] }; SERIES];
                    for (s, slot) in f.iter_mut().enumerate() {
                        let (ns, ks) = sizes[s];
                        *slot = self.sample_series(seed, s, s as u32, ns, ks, records.as_deref_mut())?;
                    }
                    f
                }
            };
            let mut stats = Self::statistics(&freq);
            match self.finish(&stats) {
                Err(Error::IndeterminateSign { .. }) if self.config.retry_step2 && self.exact.is_none() => {
                    let (ns, ks) = sizes[1];
                    step2_retried = true;
                    preparations += ns * ks;
                    let redrawn = self.sample_series(seed, 1, STEP2_RETRY_SERIES, ns, ks, records.as_deref_mut())?;
                    stats.step2 = OzStatistics::from(&redrawn);
                    self.finish(&stats)
                }
                other => other,
            }
        })();

        let wall_seconds = start.map_or(0.0, |t| t.elapsed().as_secs_f64());
        let base = TestResult {
            seed,
            n_states: n,
            k_copies: k,
            preparations,
            step2_retried,
            estimates: None,
            reconstruction: None,
            m_rel_error: None,
            error: None,
            wall_seconds,
        };
        match outcome {
            Ok((est, rec, err)) => TestResult {
                estimates: Some(est),
                reconstruction: Some(rec),
                m_rel_error: Some(err),
                ..base
            },
            Err(e) => TestResult {
                error: Some(e.to_string()),
                ..base
            },
        }
    }

    pub fn run(&self, seed: u64, n: u64, k: u64) -> TestResult {
        self.run_with_records(seed, n, k, None)
    }
}

/// One elementary test at the configured `(N, K)`.
pub fn run_elementary_test(cfg: &ExperimentConfig, seed: u64) -> Result<TestResult> {
    let exp = Experiment::new(cfg)?;
    Ok(exp.run(seed, cfg.n_states, cfg.k_copies))
}

/// Per-criterion reduction of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: u64,
    pub n: u64,
    pub repetitions: u64,
    /// Repetitions that produced estimates.
    pub succeeded: u64,
    pub failed: u64,
    pub nrmse_v: Option<Criterion>,
    pub nrmse_w1: Option<Criterion>,
    pub nrmse_w2: Option<Criterion>,
    pub m_rel_error: Option<Criterion>,
    /// Fraction of successful repetitions with any clamp.
    pub clamp_rate: f64,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub results: Vec<TestResult>,
}

/// The four criteria in output order.
pub const CRITERIA: [&str; 4] = ["nrmse_v", "nrmse_w1", "nrmse_w2", "m_rel_error"];

impl SweepPoint {
    pub fn criterion(&self, name: &str) -> Option<Criterion> {
        match name {
            "nrmse_v" => self.nrmse_v,
            "nrmse_w1" => self.nrmse_w1,
            "nrmse_w2" => self.nrmse_w2,
            "m_rel_error" => self.m_rel_error,
            _ => None,
        }
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// NRMSE of `estimates` with the spread of `x̂/|x|` as its std.
fn nrmse_criterion(estimates: &[f64], actual: f64) -> Option<Criterion> {
    let mean = nrmse(estimates, actual).ok()?;
    let scaled: Vec<f64> = estimates.iter().map(|e| e / actual.abs()).collect();
    Some(Criterion { mean, std: sample_std(&scaled) })
}

/// Reduces repetitions of one point; failed repetitions are excluded.
pub fn summarize(exp: &Experiment, k: u64, n: u64, results: Vec<TestResult>, keep: bool) -> SweepPoint {
    let ok: Vec<&TestResult> = results.iter().filter(|r| r.is_ok()).collect();
    let est: Vec<ParamEstimates> = ok.iter().filter_map(|r| r.estimates).collect();
    let col = |f: fn(&ParamEstimates) -> f64| est.iter().map(f).collect::<Vec<_>>();
    let errs: Vec<f64> = ok.iter().filter_map(|r| r.m_rel_error).collect();
    let m_rel_error = (!errs.is_empty()).then(|| Criterion {
        mean: errs.iter().sum::<f64>() / errs.len() as f64,
        std: sample_std(&errs),
    });
    let clamps = ok.iter().filter(|r| r.any_clamp()).count();
    SweepPoint {
        k,
        n,
        repetitions: results.len() as u64,
        succeeded: ok.len() as u64,
        failed: (results.len() - ok.len()) as u64,
        nrmse_v: nrmse_criterion(&col(|e| e.v_hat), exp.mix_tau1.v),
        nrmse_w1: nrmse_criterion(&col(|e| e.w1_hat), exp.mix_tau2.w1),
        nrmse_w2: nrmse_criterion(&col(|e| e.w2_hat), exp.mix_tau2.w2),
        m_rel_error,
        clamp_rate: if ok.is_empty() { 0.0 } else { clamps as f64 / ok.len() as f64 },
        wall_seconds: results.iter().map(|r| r.wall_seconds).sum(),
        results: if keep { results } else { Vec::new() },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn failure_rate(&self) -> f64 {
        let total: u64 = self.points.iter().map(|p| p.repetitions).sum();
        let failed: u64 = self.points.iter().map(|p| p.failed).sum();
        if total == 0 {
            0.0
        } else {
            failed as f64 / total as f64
        }
    }
}

/// Runs every `(K, N)` point of the sweep. Repetitions execute in parallel
/// and are merged by index.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate_sweep()?;
    let exp = Experiment::new(cfg)?;
    let points = cfg.sweep_points()?;
    let jobs: Vec<(usize, u64)> = (0..points.len()).flat_map(|p| (0..cfg.repetitions).map(move |r| (p, r))).collect();
    let results: Vec<TestResult> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let point = (!cfg.common_random_numbers).then_some(p as u64);
            let (k, n) = points[p];
            exp.run(repetition_seed(cfg.master_seed, point, r), n, k)
        })
        .collect();
    let mut it = results.into_iter();
    let summaries = points
        .iter()
        .map(|&(k, n)| {
            let chunk: Vec<TestResult> = it.by_ref().take(cfg.repetitions as usize).collect();
            summarize(&exp, k, n, chunk, cfg.full)
        })
        .collect();
    Ok(SweepReport {
        master_seed: cfg.master_seed,
        config: cfg.clone(),
        points: summaries,
    })
}

/// Comment lines shared by every output file.
pub fn header_lines(cfg: &ExperimentConfig) -> Vec<String> {
    let t = cfg.times().unwrap_or(ProtocolTimes::doubling(cfg.tau1));
    vec![
        format!("# master_seed={}", cfg.master_seed),
        format!(
            "# g={} b={} jz_over_kb={} jxy_over_kb={} tau1={:e} tau2={:e} tau3={:e}",
            cfg.g, cfg.b, cfg.jz_over_kb, cfg.jxy_over_kb, t.tau1, t.tau2, t.tau3
        ),
        format!(
            "# repetitions={} exact={} common_random_numbers={} w_normalization={:?}",
            cfg.repetitions, cfg.exact, cfg.common_random_numbers, cfg.estimator.w_normalization
        ),
    ]
}

/// Writes one criterion table: comment header, then
/// `K,N,repetitions,criterion_mean,criterion_std,clamp_rate,wall_seconds`
/// with `repetitions` counting the repetitions that entered the mean.
pub fn write_criterion_csv<W: Write>(mut w: W, report: &SweepReport, criterion: &str) -> io::Result<()> {
    for line in header_lines(&report.config) {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "# criterion={criterion}")?;
    let excluded: Vec<String> = report.points.iter().map(|p| format!("K={}:{}", p.k, p.failed)).collect();
    writeln!(w, "# excluded {}", excluded.join(" "))?;
    writeln!(w, "K,N,repetitions,criterion_mean,criterion_std,clamp_rate,wall_seconds")?;
    for p in &report.points {
        let (mean, std) = p.criterion(criterion).map_or((f64::NAN, f64::NAN), |c| (c.mean, c.std));
        writeln!(
            w,
            "{},{},{},{:e},{:e},{:e},{:e}",
            p.k, p.n, p.succeeded, mean, std, p.clamp_rate, p.wall_seconds
        )?;
    }
    Ok(())
}

/// Writes the four CSV files (and the full JSON when configured) into
/// `dir`; returns the written paths.
pub fn write_outputs(dir: &Path, report: &SweepReport) -> Result<Vec<PathBuf>> {
    let io_err = |p: &Path, e: io::Error| Error::Config(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for c in CRITERIA {
        let path = dir.join(format!("{c}.csv"));
        let mut buf = Vec::new();
        write_criterion_csv(&mut buf, report, c).expect("writing to memory");
        fs::write(&path, buf).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    if report.config.full {
        let path = dir.join("sweep.json");
        let json = serde_json::to_string_pretty(report).expect("report is serializable");
        fs::write(&path, json).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
