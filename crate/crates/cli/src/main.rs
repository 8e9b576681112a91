use clap::Parser;
use ising_emachine_cli::app::{self, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = app::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
