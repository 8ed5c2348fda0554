use clap::Parser;

fn main() {
    if let Err(e) = dosefind_cli::run(dosefind_cli::Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
