use clap::Parser;

use skolem::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
