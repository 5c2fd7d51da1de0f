use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kuramoto_core::scenario::output::write_summary_json;
use kuramoto_core::scenario::server::{ServeOptions, Server, DEFAULT_FPS};
use kuramoto_core::scenario::sweep::write_sweep;
use kuramoto_core::scenario::{load_config, run_scenario, sweep, ScenarioConfig, SweepParameter};
use kuramoto_core::{solve_fixed_point, threshold_report};

#[derive(Parser)]
#[command(name = "kuramoto", version, about = "Simulate and analyse Kuramoto oscillator networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Override every seed in the scenario.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the scenario and write the trace CSV and summary JSON.
    Simulate,
    /// Run the scenario once per parameter value.
    Sweep {
        /// Parameter to vary: k or n.
        #[arg(long)]
        param: SweepParameter,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
    },
    /// Print the coupling thresholds and convergence rates as JSON.
    Thresholds,
    /// Solve for the phase-locked state from zero phases and print it as JSON.
    Fixedpoint {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// Stream the running simulation as newline-delimited JSON over TCP.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// 0 picks a free port; the bound address is printed on stdout.
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value_t = DEFAULT_FPS)]
        fps: f64,
        #[arg(long, default_value_t = 1)]
        steps_per_frame: usize,
        /// Exit after one client disconnects.
        #[arg(long)]
        once: bool,
    },
}

fn load(common: &Common) -> Result<(ScenarioConfig, PathBuf)> {
    let Some(path) = &common.config else {
        bail!("--config PATH is required");
    };
    let mut cfg = load_config(path)?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let common = &cli.common;
    let (cfg, base) = load(common)?;
    match cli.cmd {
        Cmd::Simulate => {
            let (outcome, files) = run_scenario(&cfg, &base, &common.out)?;
            if !common.quiet {
                let s = &outcome.summary;
                eprintln!(
                    "n={} K={} final r={:.6} mean r (tail)={:.6} synced={}",
                    s.n, s.k, s.final_r, s.mean_r_tail, s.is_frequency_synced
                );
                eprintln!("wrote {} and {}", files.trace_csv.display(), files.summary_json.display());
            }
        }
        Cmd::Sweep { param, values } => {
            let rows = sweep(&cfg, param, &values, &base);
            write_sweep(param, &rows, &common.out)?;
            if !common.quiet {
                for row in &rows {
                    match (&row.summary, &row.error) {
                        (Some(s), _) => eprintln!("{:>10} mean r (tail) {:.6}", row.value, s.mean_r_tail),
                        (None, Some(e)) => eprintln!("{:>10} error: {e}", row.value),
                        _ => {}
                    }
                }
                eprintln!("wrote {}", common.out.join("sweep.csv").display());
            }
        }
        Cmd::Thresholds => {
            let net = cfg.build_network(&base)?;
            let report = threshold_report(&net, cfg.analysis.epsilon)?;
            print_json(&report)?;
            std::fs::create_dir_all(&common.out).with_context(|| common.out.display().to_string())?;
            write_summary_json(&report, &common.out.join("thresholds.json"))?;
        }
        Cmd::Fixedpoint { tol, max_iter } => {
            let net = cfg.build_network(&base)?;
            let zeros = kuramoto_core::nalgebra::DVector::zeros(net.n());
            let fp = solve_fixed_point(&net, &zeros, tol, max_iter)?;
            print_json(&fp)?;
            std::fs::create_dir_all(&common.out).with_context(|| common.out.display().to_string())?;
            write_summary_json(&fp, &common.out.join("fixedpoint.json"))?;
            if !fp.converged && !common.quiet {
                eprintln!("warning: no convergence after {} iterations (residual {:e})", fp.iterations, fp.residual);
            }
        }
        Cmd::Serve {
            host,
            port,
            fps,
            steps_per_frame,
            once,
        } => {
            let opts = ServeOptions {
                fps,
                steps_per_frame,
                max_frames: None,
            };
            let server = Server::bind((host.as_str(), port), cfg, &base, opts)?;
            println!("listening {}", server.local_addr()?);
            std::io::stdout().flush()?;
            if once {
                let frames = server.serve_one()?;
                if !common.quiet {
                    eprintln!("client disconnected after {frames} frames");
                }
            } else {
                server.run()?;
            }
        }
    }
    Ok(())
}
