use clap::Parser;

use ensreas::cli::{dispatch, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(dispatch(cli));
}
