use clap::Parser;
use env_logger::Env;
use sls_cli::Cli;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("SLS_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = sls_cli::run(cli) {
        eprintln!("sls: {e}");
        std::process::exit(e.exit_code());
    }
}
