use clap::Parser;

fn main() {
    let cli = cavmag_cli::Cli::parse();
    if let Err(e) = cavmag_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
