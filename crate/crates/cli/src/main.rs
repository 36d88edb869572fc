use clap::Parser;
use tracing_subscriber::EnvFilter;

fn main() {
    let cli = groundlab_cli::Cli::parse();
    let filter = EnvFilter::try_from_env("GROUNDLAB_LOG").unwrap_or_else(|_| EnvFilter::new(&cli.log_level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = groundlab_cli::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
