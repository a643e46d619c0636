use clap::Parser;

use pscale::cli::{run_args, Args};

fn main() {
    let args = Args::parse();
    if let Err(e) = run_args(&args) {
        eprintln!("pscale: {e}");
        std::process::exit(e.exit_code());
    }
}
