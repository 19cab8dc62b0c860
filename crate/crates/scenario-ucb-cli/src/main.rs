//! Experiment CLI for scenario-UCB robust blackbox optimization.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error,
//! 4 validation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scenario_ucb::regret::{consistency_guaranteed, consistency_scaling};
use scenario_ucb::rng::SeedBundle;
use scenario_ucb::scenario::{
    sample_count_corollary1, sample_count_redraw, sample_count_theorem2,
};
use scenario_ucb::validate::{
    bound_suite, concentration_suite, robustness_suite, violation_suite, RobustnessConfig,
    RunPopulationConfig, SuiteReport, ViolationConfig,
};

use scenario_ucb_cli::config::{ConfigError, ExperimentConfig};
use scenario_ucb_cli::runner;

#[derive(Parser)]
#[command(
    name = "scenario-ucb",
    version,
    about = "Scenario-based robust blackbox optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes manifest.txt, trace.csv, and curve.csv
    Run {
        /// Key=value config file (a saved manifest re-runs verbatim)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-draw frequency exponent override (alpha(t) = t^nu)
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Run a nu-sweep: mean regret curves over repetitions per nu
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated nu values, e.g. 0.1,0.4,1.0
        #[arg(long, value_delimiter = ',')]
        nu: Option<Vec<f64>>,
        /// Repetitions per nu
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Print the three sample-complexity counts side by side
    SampleComplexity {
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 0.05)]
        zeta: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha_t: f64,
    },
    /// Run a Monte-Carlo validation suite and write its report
    Validate {
        /// One of: concentration, violation, bound, robustness
        #[arg(long)]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Outer repetition count override
        #[arg(long)]
        reps: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => e.report(),
    }
}

enum CliError {
    Config(String),
    Run(scenario_ucb::Error),
    Io(std::io::Error),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Config(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            CliError::Run(e) => {
                eprintln!("error: {e}");
                let code = match e {
                    scenario_ucb::Error::Numerical(_) | scenario_ucb::Error::AtIteration { .. } => 3,
                    _ => 2,
                };
                ExitCode::from(code)
            }
            CliError::Io(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<scenario_ucb::Error> for CliError {
    fn from(e: scenario_ucb::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn load_config(
    path: &Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            nu,
        } => {
            let mut cfg = load_config(&config, seed, out)?;
            if let Some(nu) = nu {
                cfg.nu = nu;
                cfg.alpha_table = None;
                cfg.validate()?;
            }
            let bundle = SeedBundle::derive(cfg.seed, 0);
            let output = runner::execute_run(&cfg, None, bundle)?;
            runner::write_run_outputs(&cfg.out_dir, &cfg, &output)?;
            let final_regret = output.curve.redraw_avg.last().copied().unwrap_or(f64::NAN);
            println!(
                "run complete: T={} N={} final re-draw regret {:.6} -> {}",
                cfg.t_max,
                cfg.resolved_n()?,
                final_regret,
                cfg.out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            seed,
            out,
            nu,
            reps,
        } => {
            let mut cfg = load_config(&config, seed, out)?;
            if let Some(r) = reps {
                cfg.repetitions = r;
                cfg.validate()?;
            }
            let nus = nu
                .or_else(|| cfg.nu_list.clone())
                .unwrap_or_else(|| vec![0.1, 0.4, 1.0]);
            if nus.is_empty() {
                return Err(CliError::Config("nu list must not be empty".to_string()));
            }
            for &v in &nus {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(CliError::Config(format!("nu = {v} outside (0, 1]")));
                }
            }
            cfg.nu_list = Some(nus.clone());
            let series = runner::execute_sweep(&cfg, &nus)?;
            runner::write_sweep_outputs(&cfg.out_dir, &cfg, &series)?;
            for s in &series {
                let scaling = consistency_scaling(
                    cfg.t_max,
                    s.nu,
                    cfg.grid().map_err(CliError::Run)?.len(),
                    cfg.eta,
                    cfg.zeta,
                    cfg.epsilon,
                )?;
                println!(
                    "nu={} reps={} final mean re-draw regret {:.6} (order-level scaling {:.3}{})",
                    s.nu,
                    s.repetitions,
                    s.mean_redraw.last().copied().unwrap_or(f64::NAN),
                    scaling,
                    if consistency_guaranteed(s.nu) {
                        ""
                    } else {
                        "; consistency not guaranteed at nu = 1"
                    }
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SampleComplexity { eta, zeta, alpha_t } => {
            let t2 = sample_count_theorem2(eta, zeta)?;
            let c1 = sample_count_corollary1(eta, zeta)?;
            let rd = sample_count_redraw(eta, zeta, alpha_t)?;
            println!("eta={eta} zeta={zeta} alpha_T={alpha_t}");
            println!("{:<28}{:>8}", "log-ratio bound", t2);
            println!("{:<28}{:>8}", "ceiling bound", c1);
            println!("{:<28}{:>8}", "re-draw sequence bound", rd);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            suite,
            config,
            seed,
            out,
            reps,
        } => {
            let cfg = load_config(&config, seed, out)?;
            let report = run_suite(&suite, &cfg, reps)?;
            let text = format!("{}\n", report.summary_line());
            runner::write_file(&cfg.out_dir, &format!("validate_{suite}.txt"), &text)?;
            print!("{text}");
            if report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
    }
}

fn run_suite(
    suite: &str,
    cfg: &ExperimentConfig,
    reps: Option<usize>,
) -> Result<SuiteReport, CliError> {
    match suite {
        "violation" => {
            let mut c = ViolationConfig {
                eta: cfg.eta,
                zeta: cfg.zeta,
                seed: cfg.seed,
                ..Default::default()
            };
            if let Some(r) = reps {
                c.n_outer = r;
            }
            Ok(violation_suite(&c)?)
        }
        "concentration" | "bound" => {
            let mut c = RunPopulationConfig {
                epsilon: cfg.epsilon,
                rho2: cfg.noise_var,
                seed: cfg.seed,
                ..Default::default()
            };
            if let Some(r) = reps {
                c.n_runs = r;
            }
            if suite == "concentration" {
                Ok(concentration_suite(&c)?)
            } else {
                Ok(bound_suite(&c)?)
            }
        }
        "robustness" => {
            let mut c = RobustnessConfig {
                eta: cfg.eta,
                zeta: cfg.zeta,
                seed: cfg.seed,
                ..Default::default()
            };
            if let Some(r) = reps {
                c.n_outer = r;
            }
            Ok(robustness_suite(&c)?)
        }
        other => Err(CliError::Config(format!(
            "unknown suite `{other}` (expected concentration, violation, bound, or robustness)"
        ))),
    }
}
