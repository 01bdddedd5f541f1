use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ifem_cli::config::{read_file, Layer};
use ifem_cli::{build, help_text, run, RunError};

/// Interface elasticity with stabilized immersed Crouzeix-Raviart elements.
#[derive(Debug, Parser)]
#[command(name = "ifem", version)]
struct Args {
    /// Configuration file with `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in example: 1a 1b 2a 2b 3a 3b 4.
    #[arg(long, value_name = "ID")]
    example: Option<String>,
    #[arg(long, value_name = "N")]
    k_min: Option<u32>,
    #[arg(long, value_name = "N")]
    k_max: Option<u32>,
    /// Penalty parameter (default 10 * max mu).
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    tau: Option<f64>,
    /// Penalized edges: interior or all.
    #[arg(long, value_name = "SET")]
    edge_set: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,
    /// Linear solver: cg or dense.
    #[arg(long, value_name = "KIND")]
    solver: Option<String>,
    /// Relative residual tolerance of cg.
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Any configuration key, e.g. `--set r0=0.4` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// List configuration keys and exit.
    #[arg(long)]
    help_config: bool,
}

fn flag_layer(args: &Args) -> Result<Layer, RunError> {
    let mut l = Layer::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            l.push((k.to_string(), v));
        }
    };
    push("example", args.example.clone());
    push("k_min", args.k_min.map(|v| v.to_string()));
    push("k_max", args.k_max.map(|v| v.to_string()));
    push("tau", args.tau.map(|v| v.to_string()));
    push("edge_set", args.edge_set.clone());
    push("out", args.out.as_ref().map(|p| p.display().to_string()));
    push("solver", args.solver.clone());
    push("tol", args.tol.map(|v| v.to_string()));
    for s in &args.set {
        let Some((k, v)) = s.split_once('=') else {
            return Err(RunError::Config(ifem_cli::ConfigError(format!(
                "--set: expected KEY=VALUE, got `{s}`"
            ))));
        };
        l.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(l)
}

fn main_inner(args: &Args) -> Result<(), RunError> {
    let mut layers = Vec::new();
    if let Some(path) = &args.config {
        layers.push(read_file(path)?);
    }
    layers.push(flag_layer(args)?);
    let cfg = build(&layers)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build_global()
        .map_err(|e| RunError::Config(ifem_cli::ConfigError(format!("threads: {e}"))))?;
    let stdout = std::io::stdout();
    let summary = run(&cfg, &mut stdout.lock())?;
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.help_config {
        print!("{}", help_text());
        return ExitCode::SUCCESS;
    }
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
