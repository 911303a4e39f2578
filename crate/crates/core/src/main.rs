use clap::Parser;

fn main() {
    let cli = dehnfill::cli::Cli::parse();
    std::process::exit(dehnfill::cli::run(&cli));
}
