use clap::Parser;
use plan_cli::{execute, Cli, FAILURE_EXIT};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.stage, &cli.args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(FAILURE_EXIT);
        }
    }
}
