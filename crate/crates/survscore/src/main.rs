use clap::Parser;

fn main() {
    let cli = survscore::cli::Cli::parse();
    std::process::exit(survscore::cli::main_run(cli));
}
