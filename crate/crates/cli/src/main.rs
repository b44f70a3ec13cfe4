use clap::Parser;
use stochtex_cli::config::Cli;

fn main() {
    if let Err(e) = stochtex_cli::run(Cli::parse()) {
        eprintln!("stochtex: {e}");
        std::process::exit(e.exit_code());
    }
}
