use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wvtransfer::cli::{exit_code, run, ScenarioConfig, Subcommand, CASES};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Pwv,
    Widths,
    Moments,
    Compare,
    Simulate,
    Figures,
    Catalog,
}

impl From<Cmd> for Subcommand {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Pwv => Subcommand::Pwv,
            Cmd::Widths => Subcommand::Widths,
            Cmd::Moments => Subcommand::Moments,
            Cmd::Compare => Subcommand::Compare,
            Cmd::Simulate => Subcommand::Simulate,
            Cmd::Figures => Subcommand::Figures,
            Cmd::Catalog => Subcommand::Catalog,
        }
    }
}

/// Weak-valued momentum transfer in twin-slit which-way measurements.
#[derive(Parser, Debug)]
#[command(name = "wvt", version)]
struct Args {
    command: Cmd,
    /// key = value scenario file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(CASES))]
    case: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    hbar: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match &args.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    return ExitCode::from(1);
                }
            };
            match ScenarioConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
        }
        None => ScenarioConfig::default(),
    };
    if let Some(c) = args.case {
        cfg.case = c;
        cfg.kind = None;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.out {
        cfg.out = v;
    }
    if let Some(v) = args.hbar {
        cfg.hbar = v;
    }
    if let Some(v) = args.s {
        cfg.s = v;
    }
    let bundle = match run(args.command.into(), &cfg) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    if let Err(e) = bundle.write_to(&cfg.out) {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code(&e) as u8);
    }
    for name in bundle.files.keys() {
        println!("{}", cfg.out.join(name).display());
    }
    for (name, pass) in &bundle.checks {
        if !pass {
            eprintln!("check failed: {name}");
        }
    }
    ExitCode::from(bundle.exit_code() as u8)
}
