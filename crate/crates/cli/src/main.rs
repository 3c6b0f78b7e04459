use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use csmd::harness::acceptance::{run_acceptance, AcceptanceOptions};
use csmd::harness::experiment::{check_lines, write_outputs};
use csmd::harness::{run_suite, ConfigFile, Executor};
use csmd::noise::{validate_noise, Generator, NoiseModel, RngStream, MIN_VALIDATION_SAMPLES};
use csmd::schedules::{analysis_sequences, Rule, Schedule, ScheduleParams};

#[derive(Parser)]
#[command(name = "csmd", version, about = "Composite stochastic mirror descent experiments")]
struct Cli {
    /// Base seed for every random stream (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory for results.csv, summary.json and acceptance.txt.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a TOML config.
    Run { config: PathBuf },
    /// Monte Carlo check of a noise generator against its declared assumption.
    ValidateNoise {
        model: Generator,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Tail exponent for symmetric_pareto and symmetric_weibull.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Print a step-size schedule and its weight sequences as CSV.
    DumpSchedule {
        rule: Rule,
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        eta_star: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        l: f64,
        #[arg(long, default_value_t = 0.0)]
        mu_f: f64,
        #[arg(long, default_value_t = 0.0)]
        mu_h: f64,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Run the full acceptance matrix.
    Accept,
}

fn write_lines(dir: &Path, lines: &[String]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(dir.join("acceptance.txt"), text)?;
    Ok(())
}

fn report(lines: &[String]) -> ExitCode {
    for l in lines {
        println!("{l}");
    }
    if lines.iter().any(|l| l.starts_with("FAIL")) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = ConfigFile::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let seed = cli.seed.unwrap_or(cfg.base_seed);
            let exec = Executor::new(cli.jobs.or(cfg.jobs).unwrap_or(0));
            let dir = cli.out_dir.or(cfg.out_dir).unwrap_or_else(|| PathBuf::from("out"));
            let results = run_suite(&cfg.experiment, seed, &exec)?;
            write_outputs(&dir, &results, seed)?;
            let lines = check_lines(&results);
            write_lines(&dir, &lines)?;
            eprintln!("wrote {}", dir.display());
            Ok(report(&lines))
        }
        Command::ValidateNoise {
            model,
            sigma,
            p,
            samples,
            dim,
        } => {
            let noise = NoiseModel::new(model, sigma, p)?;
            let samples = samples.max(MIN_VALIDATION_SAMPLES);
            let rep = validate_noise(&noise, samples, dim, RngStream::new(cli.seed.unwrap_or(0), 0))?;
            if let Some(dir) = &cli.out_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&rep)?)?;
            }
            let mut lines = Vec::new();
            for c in &rep.checks {
                let at = c.lambda.map(|l| format!(" lambda={l:.4}")).unwrap_or_default();
                lines.push(format!(
                    "{} {}{at}: estimate {:.6} +- {:.1e} vs bound {:.6}",
                    if c.passed { "PASS" } else { "FAIL" },
                    rep.assumption.name(),
                    c.estimate,
                    c.std_error,
                    c.bound
                ));
            }
            for (n, m) in &rep.second_moment_growth {
                lines.push(format!("info second moment over {n} samples: {m:.4}"));
            }
            Ok(report(&lines))
        }
        Command::DumpSchedule {
            rule,
            horizon,
            eta,
            eta_star,
            l,
            mu_f,
            mu_h,
            p,
        } => {
            let s = Schedule::new(
                rule,
                ScheduleParams {
                    eta,
                    eta_star,
                    l,
                    mu_f,
                    mu_h,
                    p,
                },
                Some(horizon),
            )?;
            let (mf, mh) = s.analysis_moduli();
            let seq = analysis_sequences(&s, mf, mh, horizon)?;
            let mut out: Box<dyn Write> = match &cli.out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    Box::new(fs::File::create(dir.join("schedule.csv"))?)
                }
                None => Box::new(std::io::stdout().lock()),
            };
            writeln!(out, "t,eta,gamma,big_gamma,v")?;
            for t in 1..=horizon {
                let i = t - 1;
                writeln!(
                    out,
                    "{t},{:e},{:e},{:e},{:e}",
                    seq.eta[i], seq.gamma[i], seq.big_gamma[i], seq.v[t]
                )?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Accept => {
            let dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("out"));
            let rep = run_acceptance(&AcceptanceOptions {
                base_seed: cli.seed,
                jobs: cli.jobs.unwrap_or(0),
                out_dir: Some(dir.clone()),
            })?;
            eprintln!("wrote {}", dir.display());
            Ok(report(&rep.lines()))
        }
    }
}
