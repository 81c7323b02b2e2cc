use clap::Parser;

fn main() {
    let cli = doe_cli::Cli::parse();
    std::process::exit(doe_cli::run(&cli));
}
