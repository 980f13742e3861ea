use clap::Parser;

fn main() {
    let cli = transcf::cli::Cli::parse();
    if let Err(err) = transcf::cli::execute(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
