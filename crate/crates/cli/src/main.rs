use clap::Parser;
use trace_topology_cli::config::Args;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    std::process::exit(trace_topology_cli::run(&args));
}
