use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracldg::harness::{emit_table, run_sweep, NumberOrExpr, RawSpec, RunSpec, ValueList};
use fracldg::Result;

#[derive(Parser)]
#[command(name = "fracldg", version, about = "Convergence sweeps for fractional LDG solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one sweep and emit its error table(s).
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["ex1", "ex2", "ex3", "ex4"])]
    case: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long, value_parser = ["K", "dt", "theta"])]
    sweep: Option<String>,
    /// Comma-separated; items may be numbers, fractions or T/m.
    #[arg(long)]
    values: Option<String>,
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long = "S")]
    s: Option<usize>,
    /// Time step; a number or an expression such as T/500.
    #[arg(long)]
    dt: Option<String>,
    /// Element count for dt and theta sweeps.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, value_parser = ["flat", "gamma3"])]
    weight: Option<String>,
    #[arg(long, value_parser = ["analytic", "discrete"])]
    forcing: Option<String>,
    #[arg(long, value_parser = ["left", "right"])]
    flux: Option<String>,
    #[arg(long, value_parser = ["csv", "md"])]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn spec(self) -> Result<RunSpec> {
        let base = match &self.config {
            Some(path) => RawSpec::from_file(path)?,
            None => RawSpec::default(),
        };
        let flags = RawSpec {
            case: self.case,
            beta: self.beta,
            degree: self.n,
            sweep: self.sweep,
            values: self.values.map(ValueList::Text),
            t_final: self.t,
            s: self.s,
            dt: self.dt.map(NumberOrExpr::Expr),
            k: self.k,
            weight: self.weight,
            forcing: self.forcing,
            flux: self.flux,
            format: self.format,
            out: self.out,
            jobs: self.jobs,
        };
        RunSpec::from_raw(&base.merged(flags))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run(args) = cli.command;
    let spec = match args.spec() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("fracldg: invalid run spec: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match run_sweep(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fracldg: {e}");
            return ExitCode::from(1);
        }
    };
    for f in &result.failures {
        eprintln!("fracldg: row {} = {} failed: {}", spec.sweep.name(), f.value, f.error);
    }
    if let Err(e) = emit_table(&result.tables, spec.format, spec.out.as_deref()) {
        eprintln!("fracldg: {e}");
        return ExitCode::from(1);
    }
    if result.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
