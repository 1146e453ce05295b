use clap::Parser;

use siflow_cli::Cli;

fn main() {
    let cli = Cli::parse();
    match siflow_cli::run(cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}
