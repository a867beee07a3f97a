//! Experiment configuration, read from a TOML key-value file.
//!
//! Every field has a default, so an empty file is a valid configuration
//! reproducing the reference experiment. Command-line flags override file
//! values (see the `bqpt` binary).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{check_w_step_distribution, EstimatorOptions};
use crate::physics::{PhysicalConstants, ProcessParams};
use crate::reconstruction::ProtocolTimes;
use crate::states::{Law, PrepDistribution, Preset};

/// Environment variable that overrides `out_dir`.
pub const OUT_DIR_ENV: &str = "BQPT_OUT_DIR";

/// Number of measurement series in an elementary test.
pub const SERIES: usize = 6;

/// Field-wise replacement of a preset's laws; absent fields keep the
/// preset value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<Law>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<Law>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta1: Option<Law>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta2: Option<Law>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi1: Option<Law>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi2: Option<Law>,
}

impl PrepOverride {
    pub fn apply(&self, base: PrepDistribution) -> PrepDistribution {
        PrepDistribution {
            r1: self.r1.unwrap_or(base.r1),
            r2: self.r2.unwrap_or(base.r2),
            theta1: self.theta1.unwrap_or(base.theta1),
            theta2: self.theta2.unwrap_or(base.theta2),
            phi1: self.phi1.unwrap_or(base.phi1),
            phi2: self.phi2.unwrap_or(base.phi2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresetTable {
    pub step1: PrepOverride,
    pub step2: PrepOverride,
    pub w_eq1: PrepOverride,
    pub w_eq2: PrepOverride,
}

impl PresetTable {
    pub fn get(&self, preset: Preset) -> PrepDistribution {
        let o = match preset {
            Preset::Step1 => &self.step1,
            Preset::Step2 => &self.step2,
            Preset::WEq1 => &self.w_eq1,
            Preset::WEq2 => &self.w_eq2,
        };
        o.apply(preset.distribution())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// States per series, N.
    pub n_states: u64,
    /// Copies per state, K.
    pub k_copies: u64,
    pub repetitions: u64,
    /// Sweep budgets NK; one curve per entry.
    pub nk_budget: Vec<u64>,
    pub k_sweep: Vec<u64>,
    pub master_seed: u64,

    pub g: f64,
    /// Field along Oz, T.
    pub b: f64,
    /// `Jz/k_B`, K.
    pub jz_over_kb: f64,
    /// `Jxy/k_B`, K.
    pub jxy_over_kb: f64,
    /// First interval, s.
    pub tau1: f64,
    /// Defaults to `2·tau1`.
    pub tau2: Option<f64>,
    /// Defaults to `2·tau2`.
    pub tau3: Option<f64>,
    pub constants: PhysicalConstants,

    pub presets: PresetTable,
    /// Per-series state counts, in series order; elementary tests only.
    pub series_n: Option<[u64; SERIES]>,
    /// Per-series copy counts, in series order; elementary tests only.
    pub series_k: Option<[u64; SERIES]>,

    pub estimator: EstimatorOptions,
    pub k_xy_hat: i64,
    pub k_z_hat: i64,

    /// Feed exact expected probabilities instead of sampled frequencies.
    pub exact: bool,
    /// Quadrature nodes per dimension in exact mode.
    pub quadrature_nodes: usize,
    /// Redraw the sign series once on an indeterminate sign.
    pub retry_step2: bool,
    /// Share random numbers across sweep points.
    pub common_random_numbers: bool,
    /// Fraction of failed repetitions above which the run is reported as
    /// failed.
    pub max_failure_rate: f64,
    /// Measure wall time; off by default so outputs are reproducible.
    pub record_timing: bool,

    pub out_dir: PathBuf,
    /// Write the per-repetition JSON next to the CSV files.
    pub full: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_states: 10_000,
            k_copies: 1,
            repetitions: 100,
            nk_budget: vec![100_000],
            k_sweep: vec![1, 10, 100, 1000],
            master_seed: 1,
            g: 2.0,
            b: 1.0,
            jz_over_kb: 1.0,
            jxy_over_kb: 0.3,
            tau1: 0.51e-9,
            tau2: None,
            tau3: None,
            constants: PhysicalConstants::default(),
            presets: PresetTable::default(),
            series_n: None,
            series_k: None,
            estimator: EstimatorOptions::default(),
            k_xy_hat: 0,
            k_z_hat: 0,
            exact: false,
            quadrature_nodes: crate::oracle::DEFAULT_NODES,
            retry_step2: false,
            common_random_numbers: false,
            max_failure_rate: 0.05,
            record_timing: false,
            out_dir: PathBuf::from("results"),
            full: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn process_params(&self) -> ProcessParams {
        ProcessParams::from_kelvin(self.g, self.b, self.jz_over_kb, self.jxy_over_kb, self.constants)
    }

    pub fn times(&self) -> Result<ProtocolTimes> {
        let tau2 = self.tau2.unwrap_or(2.0 * self.tau1);
        let tau3 = self.tau3.unwrap_or(2.0 * tau2);
        ProtocolTimes::new(self.tau1, tau2, tau3)
    }

    /// `(N, K)` of each series for an elementary test.
    pub fn series_sizes(&self, n: u64, k: u64) -> [(u64, u64); SERIES] {
        std::array::from_fn(|s| {
            (
                self.series_n.map_or(n, |v| v[s]),
                self.series_k.map_or(k, |v| v[s]),
            )
        })
    }

    /// `(K, N)` pairs of the sweep, grouped by budget.
    pub fn sweep_points(&self) -> Result<Vec<(u64, u64)>> {
        let mut out = Vec::new();
        for &nk in &self.nk_budget {
            for &k in &self.k_sweep {
                if k == 0 || nk % k != 0 {
                    return Err(Error::Config(format!("K = {k} does not divide the budget NK = {nk}")));
                }
                out.push((k, nk / k));
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_states == 0 || self.k_copies == 0 {
            return bad(format!("N and K must be at least 1, got N = {}, K = {}", self.n_states, self.k_copies));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if let Some(v) = self.series_n.iter().chain(self.series_k.iter()).flatten().find(|&&x| x == 0) {
            return bad(format!("per-series sizes must be at least 1, got {v}"));
        }
        for (name, v) in [("g", self.g), ("b", self.b), ("jz_over_kb", self.jz_over_kb), ("jxy_over_kb", self.jxy_over_kb)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return bad(format!("max_failure_rate must lie in [0, 1], got {}", self.max_failure_rate));
        }
        if self.quadrature_nodes == 0 {
            return bad("quadrature_nodes must be at least 1".into());
        }
        self.constants.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.times()?;
        for preset in Preset::ALL {
            self.presets
                .get(preset)
                .validate()
                .map_err(|e| Error::Config(format!("preset {preset}: {e}")))?;
        }
        for preset in [Preset::WEq1, Preset::WEq2] {
            check_w_step_distribution(&self.presets.get(preset)).map_err(|e| Error::Config(format!("preset {preset}: {e}")))?;
        }
        Ok(())
    }

    pub fn validate_sweep(&self) -> Result<()> {
        self.validate()?;
        if self.nk_budget.is_empty() || self.k_sweep.is_empty() {
            return Err(Error::Config("sweep needs at least one budget and one K".into()));
        }
        if self.series_n.is_some() || self.series_k.is_some() {
            return Err(Error::Config("per-series sizes are not supported in sweeps".into()));
        }
        self.sweep_points().map(|_| ())
    }
}
