use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rydres_cli::config::{self, RunConfig, ScenarioKind};
use rydres_cli::output::OutputDir;
use rydres_cli::{run, CliError};

/// Dissipative state preparation in Rydberg arrays.
#[derive(Debug, Parser)]
#[command(name = "rydres", version)]
struct Args {
    /// Scenario to run; may be omitted with --verify-table1.
    #[arg(value_enum)]
    scenario: Option<ScenarioKind>,

    /// TOML run configuration. Without it every setting takes its default.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory, overriding the configuration.
    #[arg(long, env = "RYDRES_OUT")]
    out: Option<PathBuf>,

    /// Seed for trajectories and the optimizer, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for parallel sections.
    #[arg(long)]
    threads: Option<usize>,

    /// Recompute the built-in fidelity table and report pass/fail per row.
    #[arg(long)]
    verify_table1: bool,
}

fn resolve(args: &Args) -> Result<(Option<ScenarioKind>, RunConfig), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            config::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let scenario = match (args.scenario, cfg.scenario) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Usage(format!(
                "scenario {} on the command line conflicts with {} in the configuration",
                a.name(),
                b.name()
            )))
        }
        (a, b) => a.or(b),
    };
    if scenario.is_none() && !args.verify_table1 {
        return Err(CliError::Usage("no scenario given".into()));
    }
    cfg.scenario = scenario;
    if let Some(seed) = args.seed {
        cfg.numerics.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.directory = Some(out.clone());
    }
    if cfg.output.directory.is_none() {
        cfg.output.directory = Some(PathBuf::from("rydres-out"));
    }
    Ok((scenario, cfg))
}

fn main_inner(args: &Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let (scenario, cfg) = resolve(args)?;
    let mut out = OutputDir::create(cfg.output.directory.as_deref().expect("resolved"))?;
    if args.verify_table1 {
        let record = run::verify_table1(&cfg, &mut out)?;
        print_table(&record);
    }
    if let Some(kind) = scenario {
        let record = run::run(kind, &cfg, &mut out)?;
        println!("{}", serde_json::to_string(&record["summary"]).unwrap_or_default());
    }
    for p in &out.written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn print_table(record: &serde_json::Value) {
    let rows = record["summary"]["rows"].as_array().cloned().unwrap_or_default();
    for r in rows {
        let status = if r["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
        let checks: Vec<String> = r["checks"]
            .as_array()
            .map(|cs| {
                cs.iter()
                    .map(|c| format!("{}={:.4}", c["quantity"].as_str().unwrap_or("?"), c["ours"].as_f64().unwrap_or(f64::NAN)))
                    .collect()
            })
            .unwrap_or_default();
        let err = r["error"].as_str().map(|e| format!(" error: {e}")).unwrap_or_default();
        println!("{status} {} {}{err}", r["label"].as_str().unwrap_or("?"), checks.join(" "));
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
