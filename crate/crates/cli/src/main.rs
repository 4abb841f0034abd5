use std::path::PathBuf;
use std::process::ExitCode;

use anderson_cli::{run, CliError, Command, ExperimentConfig};
use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "toolkit", version, about = "Anderson model / PAM experiment runner")]
struct Args {
    /// spectrum | pam | ids | bounds | tauber | report
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output`, else the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = ExperimentConfig::load(&args.config).map_err(CliError::from).and_then(|mut cfg| {
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
        run(args.command, &cfg, &out).map(|m| (m, out))
    });
    match result {
        Ok((manifest, out)) => {
            for f in &manifest.outputs {
                println!("{}  {}", f.sha256, out.join(&f.file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("toolkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
