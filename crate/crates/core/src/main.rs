use clap::Parser;
use lrb_core::cli::{error_report, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprint!("{}", error_report(&e));
        std::process::exit(e.exit_code());
    }
}
