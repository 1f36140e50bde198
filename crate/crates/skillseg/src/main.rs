use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SKILLSEG_LOG", "warn")).init();
    let cli = skillseg::cli::Cli::parse();
    if let Err(e) = skillseg::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
