use clap::Parser;

fn main() {
    let cli = accretion::cli::Cli::parse();
    if let Err(e) = accretion::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            accretion::AppError::Usage(_) => 2,
            _ => 1,
        });
    }
}
