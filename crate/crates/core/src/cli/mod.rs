//! Configuration-driven experiments behind the `squeezekit` binary.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration,
//! 3 register larger than the state-vector cap, 4 numerical instability.

pub mod config;
pub mod run;
pub mod trajectory;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Experiment, RunConfig};
pub use run::{run_experiment, OutputDir};
pub use trajectory::{trajectory_scan, TrajectoryPoint};

use crate::error::Error;
use crate::statevec::set_max_atoms;

#[derive(Debug, Parser)]
#[command(name = "squeezekit", version, about = "Variational spin-squeezing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a TOML or JSON config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        threads: Option<usize>,
        /// Largest register the state-vector engine accepts.
        #[arg(long)]
        cap_n: Option<usize>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Capacity { .. } => 3,
        Error::Numerical(_) => 4,
        _ => 1,
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let Command::Run {
        config,
        output_dir,
        seed,
        threads,
        cap_n,
    } = cli.command;
    if let Some(t) = threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        // Fails only if a pool already exists, e.g. on a second call in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if let Some(cap) = cap_n {
        set_max_atoms(cap);
    }
    let result = RunConfig::from_path(&config).and_then(|mut cfg| {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(d) = output_dir {
            cfg.output_dir = d;
        }
        let out = OutputDir::create(&cfg.output_dir)?;
        log::info!("running {:?} into {}", cfg.experiment, out.path().display());
        run_experiment(&cfg, &out)
    });
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
