mod cli;

use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

fn workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("TICKSIZE_WORKERS") {
        let n: usize = v.parse().with_context(|| format!("TICKSIZE_WORKERS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = cli::Cli::parse();
    match workers().and_then(|()| cli::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
