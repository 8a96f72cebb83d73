use clap::Parser;

fn main() {
    let args = christoffel_lab::cli::Args::parse();
    std::process::exit(christoffel_lab::cli::run(&args));
}
