use clap::Parser;
use stable_convolve::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
