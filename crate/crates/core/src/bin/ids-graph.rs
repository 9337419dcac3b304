use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ids_graph::config::{parse_config, parse_policies};
use ids_graph::report::run;

/// Bandit experiments with graph feedback.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write CSV results.
    ///
    /// Exits with status 3 if the invariant monitor recorded a violation.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated policy ids, e.g. `ts-n,ids-n`.
        #[arg(long)]
        policies: Option<String>,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        seed,
        trials,
        out,
        policies,
    } = Cli::parse().command;

    let result = (|| {
        let mut cfg = parse_config(&config)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(t) = trials {
            if t == 0 {
                return Err(ids_graph::Error::InvalidArgument(
                    "--trials must be positive".into(),
                ));
            }
            cfg.trials = t;
        }
        if let Some(o) = out {
            cfg.output = o;
        }
        if let Some(p) = policies {
            cfg.policies = parse_policies(&p)?;
        }
        run(&cfg)
    })();

    match result {
        Ok(report) => {
            print!("{}", report.summary());
            println!("results written to {}", report.output.display());
            let code = report.exit_code();
            if code != 0 {
                eprintln!("invariant monitor recorded violations; see monitor.csv");
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
