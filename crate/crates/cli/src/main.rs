use clap::Parser;

use ecd_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ECD_LOG", "warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("ecd: {e}");
        std::process::exit(e.exit_code());
    }
}
