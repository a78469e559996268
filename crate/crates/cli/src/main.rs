use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = proctime_cli::Cli::parse();
    if let Err(error) = proctime_cli::execute(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
