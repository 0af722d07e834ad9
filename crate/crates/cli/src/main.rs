use clap::Parser;

fn main() {
    let cli = resilience_cli::Cli::parse();
    if let Err(e) = resilience_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
