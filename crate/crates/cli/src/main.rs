//! `crackslope`: run experiment configurations and dump their meshes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crackslope_core::experiments::{describe, emit_outputs, preview_meshes, run_experiment, Config, ExperimentResult, EXPERIMENTS};
use crackslope_core::mesh::MeshText;

#[derive(Parser, Debug)]
#[command(name = "crackslope", version, about = "Slopes of the crack energy on cracked planar domains")]
struct Cli {
    /// Output directory (overrides the `output` key of the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Random seed (overrides the `seed` key of the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every experiment section of a configuration file.
    Run {
        config: PathBuf,
        /// Run only the named experiment.
        #[arg(long)]
        only: Option<String>,
    },
    /// List the available experiments.
    List,
    /// Write the finest mesh of each section in the text mesh format.
    Mesh { config: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<Config> {
    let mut cfg = Config::load(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &Config) -> PathBuf {
    cli.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: &Cli, config: &Path, only: Option<&str>) -> anyhow::Result<bool> {
    let cfg = load(config, cli.seed)?;
    let mut names = cfg.experiments();
    if let Some(o) = only {
        if !names.contains(&o) {
            bail!("configuration has no section {o}");
        }
        names.retain(|n| *n == o);
    }
    if names.is_empty() {
        bail!("configuration has no experiment sections");
    }
    let results: Vec<(String, crackslope_core::Result<ExperimentResult>)> =
        names.par_iter().map(|n| (n.to_string(), run_experiment(&cfg, n))).collect();
    let dir = out_dir(cli, &cfg);
    let mut ok = true;
    for (name, r) in results {
        match r {
            Ok(res) => {
                for p in emit_outputs(&res, &dir)? {
                    log::info!("wrote {}", p.display());
                }
                print!("{}", res.report());
                ok &= res.pass() && !(cli.strict && !res.warnings.is_empty());
            }
            Err(e) => {
                println!("{name}: ERROR {e}");
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn mesh(cli: &Cli, config: &Path) -> anyhow::Result<bool> {
    let cfg = load(config, cli.seed)?;
    let dir = out_dir(cli, &cfg);
    std::fs::create_dir_all(&dir)?;
    for (name, m) in preview_meshes(&cfg)? {
        let p = dir.join(format!("{name}_mesh.txt"));
        std::fs::write(&p, MeshText::from_mesh(&m).write())?;
        println!("{name}: {} nodes, {} triangles, {} seam pairs -> {}", m.n_nodes(), m.triangles().len(), m.seam_pairs().len(), p.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::List => {
            for n in EXPERIMENTS {
                println!("{n:<22} {}", describe(n));
            }
            Ok(true)
        }
        Command::Run { config, only } => run(&cli, config, only.as_deref()),
        Command::Mesh { config } => mesh(&cli, config),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
