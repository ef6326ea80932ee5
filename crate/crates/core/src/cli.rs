//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or usage, 2 on failures while
//! running (including an oracle check that does not pass).

use std::fs::{self, File};
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimators::{batch_schedule, ScheduleRule};
use crate::harness::{
    compute_coverage, histogram_export, run_experiment, standardize, StandardizationMode,
};
use crate::io::{
    load_config, read_lasso_csv, stream_estimate, write_coverage_csv, write_histogram_csv,
    write_trace_csv, ResultDocument,
};
use crate::oracles::{
    bias_upper_bound, check_moment_limit, empirical_cross_moment, empirical_fourth_moment,
    shifted_bias, sigma2_from_autocov, toy_autocovariance, AutocovModel, StationaryToy,
    DEFAULT_TAIL_TOLERANCE,
};
use crate::samplers::{
    ar1_chain, toy_chain, EtaRateMode, IgMeanMode, LassoChain, LassoModes, LassoState,
    NormalSource, RngStream,
};

pub const SEED_ENV: &str = "BMCLT_SEED";

#[derive(Debug, Parser)]
#[command(name = "bmclt", version, about = "Batch means MCMC variance estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the MCMC variance of a trace (one value per line).
    Estimate {
        /// Trace file; standard input when omitted.
        input: Option<PathBuf>,
        #[arg(long, alias = "batch-rule", default_value = "sqrt")]
        rule: ScheduleRuleArg,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Write a simulated trace to standard output or a file.
    Simulate {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        tau2: Option<f64>,
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value = "blocked")]
        eta_rate: String,
        #[arg(long, default_value = "standard")]
        ig_mean: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a replicated experiment described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "out", alias = "output-dir", default_value = "bmclt-results")]
        output_dir: PathBuf,
        /// Overrides the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check an analytic or Monte Carlo ground truth.
    Oracle {
        #[arg(long, value_enum)]
        check: OracleCheck,
        #[arg(long, default_value_t = 20_000)]
        replicates: usize,
        #[arg(long, default_value_t = 4096)]
        batch_size: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Toy,
    Ar1,
    Lasso,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleCheck {
    ToySigma2,
    BiasBound,
    MomentA2,
    MomentA3,
}

#[derive(Debug, Clone, Copy)]
struct ScheduleRuleArg(ScheduleRule);

impl std::str::FromStr for ScheduleRuleArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse().map(ScheduleRuleArg).map_err(|e: Error| e.to_string())
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::ConfigInvalid(format!("{SEED_ENV}=`{v}` is not a u64"))),
        Err(_) => Ok(None),
    }
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Parse `argv` (including the program name) and run the command.
pub fn run(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(Failure::Validation(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}

fn dispatch(
    command: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    match command {
        Command::Estimate { input, rule, level } => {
            let record = match input {
                Some(path) => {
                    let file = File::open(&path)
                        .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
                    stream_estimate(std::io::empty(), Some(file), rule.0, level)?
                }
                None => stream_estimate(std::io::stdin().lock(), None, rule.0, level)?,
            };
            let mut doc = ResultDocument::new(None);
            doc.estimates.push(record);
            writeln!(stdout, "{}", doc.to_json())?;
        }
        Command::Simulate {
            model,
            n,
            burn_in,
            seed,
            stream,
            rho,
            tau2,
            y,
            x,
            lambda,
            eta_rate,
            ig_mean,
            output,
        } => {
            let seed = seed.or(env_seed()?).unwrap_or(0);
            let mut rng = RngStream::new(seed, stream);
            let values = match model {
                ModelArg::Toy => {
                    let init = rng.standard_normal();
                    toy_chain(n, burn_in, init, &mut rng)?.into_values()
                }
                ModelArg::Ar1 => {
                    let rho = rho.ok_or_else(|| Failure::Validation("--rho is required".into()))?;
                    let tau2 =
                        tau2.ok_or_else(|| Failure::Validation("--tau2 is required".into()))?;
                    let init = rng.standard_normal();
                    ar1_chain(rho, tau2, n, burn_in, init, &mut rng)?.into_values()
                }
                ModelArg::Lasso => {
                    let (Some(y), Some(x), Some(lambda)) = (y, x, lambda) else {
                        return Err(Failure::Validation(
                            "--y, --x and --lambda are required for the lasso model".into(),
                        ));
                    };
                    let data = read_lasso_csv(y, x, lambda)?;
                    let modes = LassoModes {
                        eta_rate: eta_rate.parse::<EtaRateMode>()?,
                        ig_mean: ig_mean.parse::<IgMeanMode>()?,
                    };
                    let init = LassoState::initial(data.p(), &mut rng);
                    let mut chain = LassoChain::new(&data, modes, init)?;
                    let (values, err) = chain.run(n, burn_in, &mut rng);
                    if let Some(e) = err {
                        return Err(e.into());
                    }
                    values
                }
            };
            let _ = writeln!(stderr, "# {} seed={seed} stream={stream}", crate::io::TOOL_NAME);
            match output {
                Some(path) => write_trace_csv(std::io::BufWriter::new(File::create(path)?), &values)?,
                None => write_trace_csv(&mut *stdout, &values)?,
            }
        }
        Command::Experiment {
            config,
            output_dir,
            workers,
            seed,
        } => {
            let mut loaded = load_config(&config, env_seed()?)?;
            if let Some(w) = workers {
                loaded.experiment.workers = w;
            }
            if let Some(s) = seed {
                loaded.experiment.base_seed = s;
                loaded.echo.base_seed = s;
            }
            let exp = &loaded.experiment;
            let result = run_experiment(exp)?;
            let coverage = match loaded.output.truth {
                Some(truth) => compute_coverage(&result, truth, exp.level)?,
                None => Vec::new(),
            };
            let mode = match loaded.output.truth {
                Some(t) => StandardizationMode::ExactTruth(t),
                None => StandardizationMode::Approximate,
            };
            let mut histograms = Vec::new();
            for &n in &exp.checkpoints {
                for &rule in &exp.rules {
                    let s = standardize(&result, n, rule, mode)?;
                    let mut h = histogram_export(
                        &s.values,
                        loaded.output.histogram_bins,
                        loaded.output.histogram_range,
                    )?;
                    h.standardization = Some(s.record);
                    histograms.push(h);
                }
            }
            let doc = ResultDocument::from_experiment(
                loaded.echo.clone(),
                &result,
                exp.level,
                coverage.clone(),
                histograms.clone(),
            )?;

            fs::create_dir_all(output_dir.join("histograms"))?;
            fs::write(output_dir.join("result.json"), doc.to_json() + "\n")?;
            write_coverage_csv(File::create(output_dir.join("coverage.csv"))?, &coverage)?;
            for h in &histograms {
                let rec = h.standardization.as_ref().expect("set above");
                let name = format!("hist_n{}_{}.csv", rec.n, rule_slug(rec.rule));
                write_histogram_csv(File::create(output_dir.join("histograms").join(name))?, h)?;
            }

            writeln!(
                stdout,
                "{} replicates, seed {}, {:.2}s -> {}",
                exp.replicates,
                exp.base_seed,
                result.elapsed.as_secs_f64(),
                output_dir.display()
            )?;
            if !coverage.is_empty() {
                writeln!(stdout, "{:>10}  {:<18} {:>9} {:>8}", "n", "rule", "coverage", "failed")?;
                for row in &coverage {
                    writeln!(
                        stdout,
                        "{:>10}  {:<18} {:>9.4} {:>8}",
                        row.n,
                        row.rule.to_string(),
                        row.coverage,
                        row.failed_count
                    )?;
                }
            }
        }
        Command::Oracle {
            check,
            replicates,
            batch_size,
            seed,
        } => {
            let seed = seed.or(env_seed()?).unwrap_or(0);
            if !oracle(check, replicates, batch_size, seed, stdout)? {
                return Err(Failure::Runtime(format!("oracle check {check:?} failed")));
            }
        }
    }
    Ok(())
}

fn rule_slug(rule: ScheduleRule) -> String {
    rule.to_string().replace([':', '.'], "_")
}

fn oracle(
    check: OracleCheck,
    replicates: usize,
    batch_size: usize,
    seed: u64,
    out: &mut dyn Write,
) -> std::result::Result<bool, Failure> {
    let toy = AutocovModel::toy();
    match check {
        OracleCheck::ToySigma2 => {
            let s = sigma2_from_autocov(&toy, DEFAULT_TAIL_TOLERANCE)?;
            let passed = (s.value - 1.5).abs() <= 1e-10;
            writeln!(out, "{}", s.value)?;
            writeln!(
                out,
                "toy-sigma2: terms={} tail_bound={:e} expected=1.5 {}",
                s.terms,
                s.tail_bound,
                verdict(passed)
            )?;
            Ok(passed)
        }
        OracleCheck::BiasBound => {
            let grid = [2usize, 4, 8, 16, 32, 64];
            let lower_coef = 4.0 * toy_autocovariance(2);
            let mut failures = 0;
            for &a in &grid {
                for &b in &grid {
                    let schedule = batch_schedule(a * b, ScheduleRule::Fixed(b))?;
                    let bias = shifted_bias(&toy, &schedule, DEFAULT_TAIL_TOLERANCE)?.abs();
                    let upper = bias_upper_bound(a, b, toy.lambda_bound, toy.f0_norm2);
                    let lower = lower_coef * (a as f64).sqrt() / b as f64;
                    let ok = lower <= bias && bias <= upper;
                    if !ok {
                        failures += 1;
                    }
                    writeln!(
                        out,
                        "a={a:>2} b={b:>2} lower={lower:.6e} |bias|={bias:.6e} upper={upper:.6e} {}",
                        verdict(ok)
                    )?;
                }
            }
            writeln!(out, "bias-bound: {failures} violations {}", verdict(failures == 0))?;
            Ok(failures == 0)
        }
        OracleCheck::MomentA2 | OracleCheck::MomentA3 => {
            if batch_size < 2 || replicates < 2 {
                return Err(Failure::Validation(
                    "--batch-size and --replicates must be at least 2".into(),
                ));
            }
            let (name, limit, est, half) = if matches!(check, OracleCheck::MomentA2) {
                (
                    "moment-a2",
                    3.0 * 1.5 * 1.5,
                    empirical_fourth_moment(&StationaryToy, batch_size, replicates, seed),
                    empirical_fourth_moment(&StationaryToy, batch_size / 2, replicates, seed ^ 1),
                )
            } else {
                (
                    "moment-a3",
                    1.5 * 1.5,
                    empirical_cross_moment(&StationaryToy, batch_size, replicates, seed),
                    empirical_cross_moment(&StationaryToy, batch_size / 2, replicates, seed ^ 1),
                )
            };
            let c = check_moment_limit(est, half, limit);
            writeln!(
                out,
                "{name}: b={} R={} estimate={:.6} se={:.6} slack={:.6} limit={} tolerance={:.6} {}",
                est.batch_size,
                est.replicates,
                est.mean,
                est.std_error,
                c.slack,
                limit,
                c.tolerance,
                verdict(c.passed)
            )?;
            Ok(c.passed)
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
