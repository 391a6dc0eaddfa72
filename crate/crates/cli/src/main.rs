use clap::Parser;
use plemelj_lab::{run, thread_cap, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    let (kind, overrides) = cli.command.split();
    let result = thread_cap()
        .and_then(|cap| {
            if let Some(n) = cap {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
            }
            overrides.resolve()
        })
        .and_then(|cfg| run(kind, &cfg));
    if let Err(e) = result {
        eprintln!("plemelj-lab: {e}");
        std::process::exit(e.exit_code());
    }
}
