use clap::Parser;
use dnls_lab::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
