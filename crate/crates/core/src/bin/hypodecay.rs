//! `hypodecay run | list | batch` — see `docs/formats.md` for inputs and outputs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypodecay::experiment::{
    registry, resolve_out_dir, run, run_batch, BatchJob, RunConfig, RunError, EXIT_CONFIG, OUT_ENV,
};

#[derive(Parser)]
#[command(name = "hypodecay", version, about = "Decay experiments for partially dissipative hyperbolic systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configuration.
    Run {
        #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        /// Dotted-path override, e.g. `--set grid.N=2048`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Print the resolved config and exit without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// List registered scenarios.
    List,
    /// Run many configurations concurrently.
    Batch {
        /// Directory of `*.json` configs (sorted by file name).
        #[arg(long, conflicts_with = "registry", required_unless_present = "registry")]
        dir: Option<PathBuf>,
        /// Run every registered scenario with its defaults.
        #[arg(long)]
        registry: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Base output directory (overrides HYPODECAY_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Prints a line, ignoring a closed pipe (`hypodecay list | head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn env_base() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn load(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

fn resolve(config: Option<PathBuf>, scenario: Option<String>, sets: &[String]) -> Result<RunConfig, RunError> {
    let base = match (config, scenario) {
        (Some(p), _) => load(&p)?,
        (None, Some(id)) => registry::default_config(&id).ok_or_else(|| {
            RunError::Config(format!("unknown scenario `{id}`; known: {}", registry::ids().join(", ")))
        })?,
        (None, None) => return Err(RunError::Config("need --config or --scenario".into())),
    };
    base.with_overrides(sets)
}

fn cmd_run(config: Option<PathBuf>, scenario: Option<String>, sets: Vec<String>, dry_run: bool) -> i32 {
    let cfg = match resolve(config, scenario, &sets) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    if dry_run {
        out!("{}", cfg.to_json());
        return 0;
    }
    let base = env_base();
    let dir = resolve_out_dir(&cfg, base.as_deref(), &cfg.scenario);
    match run(&cfg, &dir) {
        Ok(r) => {
            for c in &r.certificates {
                out!("{:<4} {:<32} {}", if c.passed { "PASS" } else { "FAIL" }, c.claim, c.measured);
            }
            out!("report: {}", dir.join("report.json").display());
            r.exit_code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn cmd_batch(dir: Option<PathBuf>, use_registry: bool, jobs: usize, out: Option<PathBuf>) -> i32 {
    let base = out.or_else(env_base);
    let mut list = vec![];
    if use_registry {
        for id in registry::ids() {
            let cfg = registry::default_config(id).expect("registered");
            list.push((id.to_string(), cfg));
        }
    } else if let Some(d) = dir {
        let mut paths: Vec<PathBuf> = match std::fs::read_dir(&d) {
            Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect(),
            Err(e) => {
                eprintln!("config error: {}: {e}", d.display());
                return EXIT_CONFIG;
            }
        };
        paths.sort();
        for p in paths {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match load(&p) {
                Ok(c) => list.push((name, c)),
                Err(e) => {
                    eprintln!("{e}");
                    return e.exit_code();
                }
            }
        }
    }
    let jobs_v: Vec<BatchJob> = list
        .into_iter()
        .map(|(name, config)| {
            let out_dir = resolve_out_dir(&config, base.as_deref(), &name);
            BatchJob { name, config, out_dir }
        })
        .collect();
    let report = run_batch(&jobs_v, jobs);
    for r in &report.runs {
        let failed: Vec<&str> = r.claims.iter().filter(|c| !c.passed).map(|c| c.claim.as_str()).collect();
        out!(
            "{:<22} exit {}  {}/{} claims{}{}",
            r.name,
            r.exit_code,
            r.claims.len() - failed.len(),
            r.claims.len(),
            if failed.is_empty() { String::new() } else { format!("  failed: {}", failed.join("; ")) },
            r.error.as_deref().map(|e| format!("  {e}")).unwrap_or_default()
        );
    }
    if let Some(b) = &base {
        let body = serde_json::to_string_pretty(&report).expect("serializes") + "\n";
        if let Err(e) = std::fs::create_dir_all(b).and_then(|_| std::fs::write(b.join("batch.json"), body)) {
            eprintln!("i/o error: {e}");
            return report.exit_code.max(EXIT_CONFIG);
        }
    }
    report.exit_code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run { config, scenario, sets, dry_run } => cmd_run(config, scenario, sets, dry_run),
        Cmd::List => {
            for (id, desc) in registry::SCENARIOS {
                out!("{id:<22} {desc}");
            }
            0
        }
        Cmd::Batch { dir, registry, jobs, out } => cmd_batch(dir, registry, jobs, out),
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}
