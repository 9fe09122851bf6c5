use clap::Parser;

fn main() {
    let cli = r3eval::cli::Cli::parse();
    if let Err(err) = r3eval::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
