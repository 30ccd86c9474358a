use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elliptical_edge::edge::limiting_edge_report;
use elliptical_edge::harness::{
    local_law_study, omega_frequency, run_campaign, ExperimentConfig, ExperimentSpec,
};
use elliptical_edge::locallaw::write_rows;
use elliptical_edge::selfconsistent::{density, DensityOptions, SelfConsistentSystem, SolverOptions, Variant};
use elliptical_edge::tracy_widom::{default_table, TW1Table};

#[derive(Parser)]
#[command(name = "elliptical-edge", about = "Edge statistics of elliptical sample covariance matrices")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Flat key = value experiment file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Self-consistent solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Limiting edge, γ₀ and regularity as JSON.
    Edge {
        #[arg(long)]
        sqrt_fit: bool,
    },
    /// Limiting density as CSV.
    Density,
    /// Build the TW₁ table, write it, and check the re-import.
    TwTable,
    /// Monte-Carlo campaign for the rescaled largest eigenvalue.
    Campaign {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Local-law checks over several seeds.
    Locallaw {
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Ω-event frequency for growing n.
    Omega {
        #[arg(long, value_delimiter = ',', default_values_t = vec![500, 2000, 8000])]
        n_values: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
    },
}

fn load(global: &Global) -> elliptical_edge::Result<ExperimentConfig> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        config.seed_base = seed;
    }
    if let Some(tol) = global.tol {
        config.tol = tol;
    }
    Ok(config)
}

fn write_json(out: Option<&Path>, value: &serde_json::Value) -> elliptical_edge::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> elliptical_edge::Result<bool> {
    let config = load(&cli.global)?;
    let out = cli.global.out.as_deref();
    let threads = cli.global.threads;
    match cli.command {
        Command::Edge { sqrt_fit } => {
            let model = config.model()?;
            let opts = SolverOptions { tol: config.tol, ..SolverOptions::default() };
            let sys = SelfConsistentSystem::limiting(&model)?.with_options(opts);
            let report = limiting_edge_report(&model, &sys, sqrt_fit)?;
            write_json(out, &report.to_flat_json())?;
            Ok(report.regularity.as_ref().is_some_and(|r| r.passes()))
        }
        Command::Density => {
            let model = config.model()?;
            let opts = SolverOptions { tol: config.tol, ..SolverOptions::default() };
            let sys = SelfConsistentSystem::limiting(&model)?.with_options(opts);
            let e_max = match config.density.e_max {
                Some(e) => e,
                None => elliptical_edge::edge::find_edge(&sys)?.edge + 0.5,
            };
            let k = config.density.points.max(2);
            let grid: Vec<f64> = (0..k)
                .map(|i| config.density.e_min + (e_max - config.density.e_min) * (i as f64 + 0.5) / k as f64)
                .collect();
            let curve = density(&sys, Variant::M, &grid, DensityOptions::default())?;
            match out {
                Some(path) => curve.save_csv(path)?,
                None => curve.write_csv(std::io::stdout())?,
            }
            Ok(true)
        }
        Command::TwTable => {
            let table = default_table()?;
            let path = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("tw1.csv"));
            table.save_csv(&path)?;
            let back = TW1Table::load_csv(&path)?;
            let (mean, var) = table.moments();
            println!("wrote {} rows to {}; mean {mean:.5}, variance {var:.5}", table.s_grid.len(), path.display());
            Ok(back == table)
        }
        Command::Campaign { trials, force } => {
            let mut config = config;
            if let Some(t) = trials {
                config.trials = t;
            }
            if let Some(dir) = out {
                config.outputs = dir.to_path_buf();
            }
            let spec = ExperimentSpec::from_config(&config)?;
            let outcome = run_campaign(&spec, threads, force)?;
            std::fs::write(spec.outputs.join("config.txt"), config.to_text())?;
            write_json(None, &serde_json::to_value(&outcome.summary)?)?;
            Ok(outcome.summary.all_checks_pass())
        }
        Command::Locallaw { seeds } => {
            let model = config.model()?;
            let ll = &config.locallaw;
            let study = local_law_study(
                &model,
                seeds.unwrap_or(ll.seeds),
                config.seed_base,
                ll.c_left,
                ll.c_right,
                ll.epsilon_e,
                threads,
            )?;
            if let Some(path) = out {
                write_rows(&study.rows(), std::fs::File::create(path)?)?;
            }
            println!(
                "entrywise pass rate {:.3}, averaged pass rate {:.3}, worst Ward defect {:.2e}, worst Frobenius defect {:.2e}",
                study.entrywise_rate, study.averaged_rate, study.worst_ward, study.worst_frobenius
            );
            Ok(study.entrywise_rate >= 0.95
                && study.averaged_rate >= 0.95
                && study.worst_ward <= 1e-10
                && study.worst_frobenius <= 1e-8)
        }
        Command::Omega { n_values, seeds } => {
            let model = config.model()?;
            let rates = omega_frequency(&model, &n_values, seeds, config.seed_base, config.omega, threads)?;
            let mut writer = match out {
                Some(path) => Some(csv::Writer::from_path(path)?),
                None => None,
            };
            for r in &rates {
                println!(
                    "n = {:>6}: gap1 {:.3} spacing {:.3} lln {:.3} omega {:.3}",
                    r.n, r.gap1_rate, r.spacing_rate, r.lln_rate, r.omega_rate
                );
                if let Some(w) = writer.as_mut() {
                    w.serialize(r)?;
                }
            }
            Ok(rates.windows(2).all(|w| w[1].omega_rate > w[0].omega_rate))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
