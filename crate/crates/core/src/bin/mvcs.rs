use clap::Parser;
use mvcs::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
