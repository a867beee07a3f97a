//! Command-line front end: elementary tests, sweeps, golden values and the
//! oracle self-test.
//!
//! Exit codes: 0 success, 1 configuration error, 2 failure rate above
//! `max_failure_rate`, 3 self-test failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bqpt::config::{ExperimentConfig, OUT_DIR_ENV};
use bqpt::estimators::WNormalization;
use bqpt::harness::{header_lines, run_sweep, write_outputs, Experiment};
use bqpt::measurement::write_trial_records;
use bqpt::physics::{build_evolution_matrix, mixing_parameters, ProcessMatrix};
use bqpt::{selftest, Error};

#[derive(Parser)]
#[command(name = "bqpt", version, about = "Blind single-preparation tomography of a two-qubit exchange gate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one elementary test and print its record.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Seed of the test; defaults to the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write every simulated trial to this CSV file.
        #[arg(long)]
        dump_trials: Option<PathBuf>,
    },
    /// Sweep K at fixed NK budgets and write the criterion tables.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print the true v, w1, w2 and process matrices for the configuration.
    Goldens {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the oracle suites.
    Selftest {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short = 'n')]
    n_states: Option<u64>,
    #[arg(long, short = 'k')]
    k_copies: Option<u64>,
    #[arg(long)]
    repetitions: Option<u64>,
    /// Sweep budgets NK, comma separated.
    #[arg(long, value_delimiter = ',')]
    nk_budget: Option<Vec<u64>>,
    /// Sweep values of K, comma separated.
    #[arg(long, value_delimiter = ',')]
    k_sweep: Option<Vec<u64>>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    g: Option<f64>,
    /// Field along Oz, T.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    jz_over_kb: Option<f64>,
    #[arg(long)]
    jxy_over_kb: Option<f64>,
    /// First interval, s.
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    tau3: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k_xy_hat: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    k_z_hat: Option<i64>,
    /// Rescale (ŵ1, ŵ2) onto the unit circle.
    #[arg(long)]
    unit_circle_w: bool,
    /// Use exact expectations instead of sampled frequencies.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    retry_step2: bool,
    #[arg(long)]
    common_random_numbers: bool,
    #[arg(long)]
    max_failure_rate: Option<f64>,
    #[arg(long)]
    record_timing: bool,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    /// Also write per-repetition records as JSON.
    #[arg(long)]
    full: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = &self.$f { c.$f = v.clone(); })* };
        }
        set!(n_states, k_copies, repetitions, nk_budget, k_sweep, master_seed, g, b, jz_over_kb, jxy_over_kb, tau1, k_xy_hat, k_z_hat, max_failure_rate, out_dir);
        if self.tau2.is_some() {
            c.tau2 = self.tau2;
        }
        if self.tau3.is_some() {
            c.tau3 = self.tau3;
        }
        if self.unit_circle_w {
            c.estimator.w_normalization = WNormalization::UnitCircle;
        }
        c.exact |= self.exact;
        c.retry_step2 |= self.retry_step2;
        c.common_random_numbers |= self.common_random_numbers;
        c.record_timing |= self.record_timing;
        c.full |= self.full;
        c.validate()?;
        Ok(c)
    }
}

fn print_matrix(out: &mut impl Write, name: &str, m: &ProcessMatrix) -> io::Result<()> {
    writeln!(out, "{name}")?;
    for row in &m.entries {
        let cells: Vec<String> = row.iter().map(|z| format!("{:+.12e}{:+.12e}i", z.re, z.im)).collect();
        writeln!(out, "  {}", cells.join("  "))?;
    }
    Ok(())
}

fn goldens(cfg: &ExperimentConfig) -> Result<(), Error> {
    let p = cfg.process_params();
    let t = cfg.times()?;
    let m1 = mixing_parameters(&p, t.tau1);
    let m2 = mixing_parameters(&p, t.tau2);
    let out = &mut io::stdout().lock();
    let res = (|| -> io::Result<()> {
        for line in header_lines(cfg) {
            writeln!(out, "{line}")?;
        }
        writeln!(out, "v(tau1) = {:.16e}", m1.v)?;
        writeln!(out, "w1(tau2) = {:.16e}", m2.w1)?;
        writeln!(out, "w2(tau2) = {:.16e}", m2.w2)?;
        writeln!(out, "dphi_1m1(tau2) = {:.16e}", m2.delta_phi_1m1)?;
        for (name, dt) in [("M(tau1)", t.tau1), ("M(tau2)", t.tau2), ("M(tau3)", t.tau3)] {
            print_matrix(out, name, &build_evolution_matrix(&p, dt))?;
        }
        Ok(())
    })();
    match res {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::Config(e.to_string())),
        _ => Ok(()),
    }
}

fn run_one(cfg: &ExperimentConfig, seed: Option<u64>, dump: Option<&PathBuf>) -> Result<ExitCode, Error> {
    let exp = Experiment::new(cfg)?;
    let seed = seed.unwrap_or(cfg.master_seed);
    let mut records = dump.map(|_| Vec::new());
    let r = exp.run_with_records(seed, cfg.n_states, cfg.k_copies, records.as_mut());
    if let (Some(path), Some(records)) = (dump, records) {
        let f = File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        write_trial_records(BufWriter::new(f), &records).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    println!("# seed={seed}");
    println!("{}", serde_json::to_string_pretty(&r).expect("result is serializable"));
    Ok(if r.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn sweep(cfg: &ExperimentConfig) -> Result<ExitCode, Error> {
    let report = run_sweep(cfg)?;
    for path in write_outputs(&cfg.out_dir, &report)? {
        println!("wrote {}", path.display());
    }
    for line in header_lines(cfg) {
        println!("{line}");
    }
    println!("K,N,ok,failed,nrmse_v,nrmse_w1,nrmse_w2,m_rel_error");
    for p in &report.points {
        let f = |c: Option<bqpt::harness::Criterion>| c.map_or("nan".to_string(), |c| format!("{:.4e}", c.mean));
        println!(
            "{},{},{},{},{},{},{},{}",
            p.k,
            p.n,
            p.succeeded,
            p.failed,
            f(p.nrmse_v),
            f(p.nrmse_w1),
            f(p.nrmse_w2),
            f(p.m_rel_error)
        );
    }
    let rate = report.failure_rate();
    if rate > cfg.max_failure_rate {
        eprintln!("failure rate {rate:.3} exceeds {:.3}", cfg.max_failure_rate);
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn selftest_cmd(cfg: &ExperimentConfig) -> ExitCode {
    println!("# master_seed={}", cfg.master_seed);
    let checks = selftest::run_all(cfg);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { common, seed, dump_trials } => common.resolve().and_then(|c| run_one(&c, *seed, dump_trials.as_ref())),
        Command::Sweep { common } => common.resolve().and_then(|c| {
            c.validate_sweep()?;
            sweep(&c)
        }),
        Command::Goldens { common } => common.resolve().and_then(|c| goldens(&c).map(|_| ExitCode::SUCCESS)),
        Command::Selftest { common } => common.resolve().map(|c| selftest_cmd(&c)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
