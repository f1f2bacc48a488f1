use clap::Parser;

fn main() {
    let cli = minigraph_cli::Cli::parse();
    std::process::exit(minigraph_cli::run(&cli));
}
