use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use risran_core::metrics::write_csv;
use risran_core::scenario::ScenarioConfig;
use risran_core::sim::{compare, run_dir, simulate, RunOptions, COMPARISON_HEADER};
use risran_core::{Error, Result};

#[derive(Parser)]
#[command(name = "risran", version, about = "RIS-assisted sliced RAN simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write kpm.csv, summary.csv and ris_gains.csv.
    Run {
        /// Catalog id (I..VIII) or path to a scenario TOML file.
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated duration in seconds.
        #[arg(long)]
        duration: Option<u64>,
        /// Output directory; defaults to <RIS_SIM_OUT or ./runs>/<config>-seed<seed>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-TTI allocation trace.
        #[arg(long)]
        trace: bool,
    },
    /// Run several configurations over several seeds and report medians and
    /// pairwise percentage deltas.
    Compare {
        /// Comma-separated catalog ids or scenario paths.
        #[arg(long, value_delimiter = ',', required = true)]
        configs: Vec<String>,
        /// Comma-separated seeds; `a-b` expands to an inclusive range.
        #[arg(long, default_value = "1-20")]
        seeds: String,
        #[arg(long)]
        duration: Option<u64>,
        /// Optional CSV path for the comparison table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in configuration catalog.
    Catalog,
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = |s: &str| Error::InvalidArgument(format!("bad seed list entry {s:?}"));
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad(part))?, b.parse().map_err(|_| bad(part))?);
                if a > b {
                    return Err(bad(part));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad(part))?),
        }
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    Ok(seeds)
}

fn output_root() -> PathBuf {
    std::env::var_os("RIS_SIM_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            duration,
            out,
            trace,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = duration {
                cfg.duration_s = d;
            }
            let dir = out.unwrap_or_else(|| run_dir(&output_root(), &cfg));
            let output = simulate(&cfg, RunOptions { record_trace: trace })?;
            for path in output.write(&dir)? {
                println!("{}", path.display());
            }
        }
        Command::Compare {
            configs,
            seeds,
            duration,
            out,
        } => {
            let seeds = parse_seeds(&seeds)?;
            let configs = configs
                .iter()
                .map(|c| {
                    let cfg = ScenarioConfig::load(c)?;
                    Ok(match duration {
                        Some(d) => cfg.with_duration(d),
                        None => cfg,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let cmp = compare(&configs, &seeds)?;
            let table = cmp.table();
            println!("{}", COMPARISON_HEADER.join(","));
            for row in &table {
                println!("{}", row.join(","));
            }
            if let Some(path) = out {
                write_csv(&path, &COMPARISON_HEADER, table)?;
            }
        }
        Command::Catalog => {
            println!(
                "{:<6} {:<10} {:<10} {:>13} {:>15} {:>6} {:<5}",
                "config", "eMBB UEs", "URLLC UEs", "MHz", "PRBs", "RIS", "xApp"
            );
            for c in ScenarioConfig::catalog_all() {
                println!("{c}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1,3,5-7").unwrap(), vec![1, 3, 5, 6, 7]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("5-1").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
