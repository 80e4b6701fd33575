use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use isac_core::constellation::{self, Constellation};
use isac_core::exec::Execution;
use isac_core::harness::{fmt_sig9, run_sweep, theory_table, write_csv, SweepConfig, SweepResult};
use isac_core::shaping::{self, DesignProblem, SensingMetric};
use isac_core::{IsacError, Result};

#[derive(Parser)]
#[command(
    name = "isac",
    version,
    about = "OFDM sensing with random payloads: simulation, theory and constellation shaping"
)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Mf,
    Rf,
}

impl From<MetricArg> for SensingMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Mf => SensingMetric::MfMu4,
            MetricArg::Rf => SensingMetric::RfNu2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print mu4, nu_minus2 and the minimum distance of a constellation.
    Moments {
        /// Name (qpsk, 16qam, 64qam, 32apsk, 8psk, ...) or JSON file.
        #[arg(long)]
        constellation: String,
    },
    /// Monte-Carlo sweep; writes the result CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form MSE and CRB for the sweep in a config, same CSV schema.
    Theory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design one constellation and write it as JSON.
    Design {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, default_value_t = shaping::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the priority weight and tabulate sensing metric, distance and SER.
    Tradeoff {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        rho: Vec<f64>,
        #[arg(long, default_value_t = shaping::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// SNR at which the SER column is evaluated.
        #[arg(long, default_value_t = 14.0)]
        ref_snr_db: f64,
        #[arg(long, default_value_t = 100_000)]
        ser_symbols: usize,
        /// Directory for the designed constellation files.
        #[arg(long)]
        out_dir: PathBuf,
        /// CSV destination; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symbol-error rate under minimum-distance detection over AWGN.
    Ser {
        #[arg(long)]
        constellation: String,
        #[arg(long)]
        snr_db: f64,
        #[arg(long, default_value_t = 1_000_000)]
        symbols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IsacError + '_ {
    move |source| IsacError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_csv(result: &SweepResult, out: Option<&Path>) -> Result<()> {
    let path = out.unwrap_or(Path::new("<stdout>"));
    let mut w = output(out)?;
    write_csv(result, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn load_sweep(config: &Path, seed: Option<u64>) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Moments { constellation } => {
            let c = Constellation::from_name_or_path(&constellation)?;
            let m = c.moments()?;
            println!("mu4={}", short(m.mu4));
            println!("nu_minus2={}", short(m.nu_minus2));
            println!("d_min={}", short(m.d_min));
        }
        Command::Simulate { config, seed, out } => {
            let cfg = load_sweep(&config, seed)?;
            let result = run_sweep(&cfg, exec)?;
            for r in result.records.iter().filter(|r| r.failures > 0) {
                log::warn!(
                    "{} {} {}: {} of {} trials failed",
                    r.constellation,
                    r.receiver.as_str(),
                    r.sweep_value,
                    r.failures,
                    r.trials
                );
            }
            emit_csv(&result, out.as_deref())?;
        }
        Command::Theory { config, seed, out } => {
            let cfg = load_sweep(&config, seed)?;
            emit_csv(&theory_table(&cfg)?, out.as_deref())?;
        }
        Command::Design {
            m,
            rho,
            metric,
            restarts,
            seed,
            out,
        } => {
            let p = DesignProblem::new(m, rho, metric.into())
                .with_restarts(restarts)
                .with_seed(seed);
            let r = shaping::design_with(&p, exec)?;
            constellation::save(&r.constellation, &out)?;
            println!("objective={}", fmt_sig9(r.objective));
            println!("metric_value={}", fmt_sig9(r.sensing_metric_value));
            println!("d_min={}", fmt_sig9(r.d_min));
            println!("restart={}", r.restart_index_of_best);
            println!("max_residual={}", fmt_sig9(r.residuals.feasibility()));
        }
        Command::Tradeoff {
            m,
            metric,
            rho,
            restarts,
            seed,
            ref_snr_db,
            ser_symbols,
            out_dir,
            out,
        } => {
            fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
            let points = shaping::pareto_sweep(m, metric.into(), &rho, restarts, seed, exec)?;
            let path = out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            let csv_err = |e: csv::Error| IsacError::Io {
                path: path.clone(),
                source: e.into(),
            };
            w.write_record([
                "rho",
                "metric_value",
                "d_min",
                "ser_at_refsnr",
                "path_to_constellation",
            ])
            .map_err(csv_err)?;
            for (i, point) in points.into_iter().enumerate() {
                match point.outcome {
                    Ok(r) => {
                        let file = out_dir.join(format!("rho_{i}_{}.json", point.rho));
                        constellation::save(&r.constellation, &file)?;
                        let ser =
                            shaping::evaluate_ser(&r.constellation, ref_snr_db, ser_symbols, seed)?;
                        w.write_record([
                            fmt_sig9(point.rho),
                            fmt_sig9(r.sensing_metric_value),
                            fmt_sig9(r.d_min),
                            fmt_sig9(ser),
                            file.display().to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                    Err(e) => {
                        log::warn!("rho = {}: {e}", point.rho);
                        w.write_record([
                            fmt_sig9(point.rho),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
            w.flush().map_err(io_err(&path))?;
        }
        Command::Ser {
            constellation,
            snr_db,
            symbols,
            seed,
        } => {
            let c = Constellation::from_name_or_path(&constellation)?;
            println!(
                "ser={}",
                fmt_sig9(shaping::evaluate_ser(&c, snr_db, symbols, seed)?)
            );
        }
    }
    Ok(())
}

fn report(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
