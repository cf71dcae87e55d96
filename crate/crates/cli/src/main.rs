use clap::Parser;
use quadcool::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(m) => {
            for f in &m.outputs {
                println!("{}", f.path);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
