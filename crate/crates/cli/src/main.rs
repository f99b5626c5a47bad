use clap::Parser;

fn main() -> anyhow::Result<()> {
    pal_cli::run(pal_cli::Cli::parse())
}
