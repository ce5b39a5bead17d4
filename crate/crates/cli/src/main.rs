use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use szego_core::harness::{run_experiment, ExperimentConfig, ExperimentKind};
use szego_core::InnerSpec;

#[derive(Parser)]
#[command(name = "szego", version, about = "Direct and inverse scattering for Jacobi matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check unitarity, symmetry and outerness of a scattering matrix
    Validate(Common),
    /// Scattering matrix of a finite perturbation of the free matrix
    Direct(Common),
    /// Reconstruct J[s+] and J[s-] from a scattering matrix
    Inverse(Common),
    /// Jacobi matrix -> scattering matrix -> both reconstructions
    Roundtrip(Common),
    /// Analytic scattering matrix built from an inner function delta
    Nonuniq(Common),
    /// Try inner functions Phi on an analytic scattering matrix
    RepairSearch(Common),
    /// Evaluate the kernel criterion v+ and v-
    Criterion(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON); flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output prefix: <out>.json plus <out>_<table>.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input file with a Jacobi matrix or a scattering matrix
    #[arg(long)]
    input: Option<PathBuf>,
    /// Inner function: `1`, `t`, `t^k`, optionally with real zeros as `t^k:0.5,-0.2`
    #[arg(long, value_parser = parse_inner)]
    delta: Option<InnerSpec>,
    /// Repair candidate, repeatable (same syntax as --delta)
    #[arg(long = "candidate", value_parser = parse_inner)]
    candidates: Vec<InnerSpec>,
    /// Hankel truncation order
    #[arg(long)]
    n: Option<usize>,
    /// Coefficients are reconstructed on [-m, m]
    #[arg(long)]
    m: Option<usize>,
    /// Sample count for grid checks
    #[arg(long)]
    grid: Option<usize>,
}

fn parse_inner(text: &str) -> Result<InnerSpec, String> {
    let (monomial, zeros) = match text.split_once(':') {
        Some((m, z)) => (m.trim(), Some(z)),
        None => (text.trim(), None),
    };
    let degree = match monomial {
        "1" => 0,
        "t" => 1,
        _ => monomial
            .strip_prefix("t^")
            .unwrap_or(monomial)
            .parse::<u32>()
            .map_err(|_| format!("cannot read `{monomial}` as 1, t or t^k"))?,
    };
    let zeros = match zeros {
        Some(z) => z
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("zero `{v}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    Ok(InnerSpec { degree, zeros })
}

fn build_config(kind: ExperimentKind, common: Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = ExperimentConfig::from_file(path).map_err(|e| e.to_string())?;
            if cfg.experiment != kind {
                return Err(format!(
                    "config is for `{}`, not `{}`",
                    cfg.experiment.name(),
                    kind.name()
                ));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(out) = common.out {
        cfg.output = out;
    }
    if let Some(input) = common.input {
        cfg.input = Some(input);
    }
    if let Some(delta) = common.delta {
        cfg.delta = Some(delta);
    }
    if !common.candidates.is_empty() {
        cfg.candidates = common.candidates;
    }
    if let Some(n) = common.n {
        cfg.numeric.n = n;
    }
    if let Some(m) = common.m {
        cfg.numeric.m = m;
    }
    if let Some(grid) = common.grid {
        cfg.numeric.grid = grid;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    // exit code 2 is reserved for inconclusive verdicts, so usage errors exit 1
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (kind, common) = match cli.command {
        Command::Validate(c) => (ExperimentKind::Validate, c),
        Command::Direct(c) => (ExperimentKind::Direct, c),
        Command::Inverse(c) => (ExperimentKind::Inverse, c),
        Command::Roundtrip(c) => (ExperimentKind::Roundtrip, c),
        Command::Nonuniq(c) => (ExperimentKind::Nonuniq, c),
        Command::RepairSearch(c) => (ExperimentKind::RepairSearch, c),
        Command::Criterion(c) => (ExperimentKind::Criterion, c),
    };
    let cfg = match build_config(kind, common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("szego: {e}");
            return ExitCode::from(1);
        }
    };
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("szego: {e}");
            return ExitCode::from(1);
        }
    };
    for stage in &report.stages {
        let mark = if stage.passed { "ok  " } else { "FAIL" };
        println!("{mark} {}: {}", stage.name, stage.detail);
    }
    if let Some(u) = report.result.get("uniqueness") {
        println!("verdict: {}", u["verdict"].as_str().unwrap_or("?"));
    } else if let Some(v) = report.result.get("verdict") {
        println!("verdict: {}", v.as_str().unwrap_or("?"));
    }
    println!("status: {:?}", report.status);
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    ExitCode::from(report.exit_code() as u8)
}
