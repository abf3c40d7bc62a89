use clap::Parser;
use destcon::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
