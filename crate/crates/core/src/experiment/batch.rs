//! Share-nothing parallel execution of independent runs.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::Serialize;

use super::config::RunConfig;
use super::runner::run;

#[derive(Debug, Clone)]
pub struct BatchJob {
    pub name: String,
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimStatus {
    pub claim: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchEntry {
    pub name: String,
    pub dir: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub claims: Vec<ClaimStatus>,
}

/// Aggregate in job order, independent of scheduling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub runs: Vec<BatchEntry>,
    pub exit_code: i32,
}

fn execute(job: &BatchJob) -> BatchEntry {
    let mut entry = BatchEntry {
        name: job.name.clone(),
        dir: job.out_dir.display().to_string(),
        exit_code: 0,
        error: None,
        claims: vec![],
    };
    match run(&job.config, &job.out_dir) {
        Ok(r) => {
            entry.exit_code = r.exit_code;
            entry.claims =
                r.certificates.iter().map(|c| ClaimStatus { claim: c.claim.clone(), passed: c.passed }).collect();
        }
        Err(e) => {
            entry.exit_code = e.exit_code();
            entry.error = Some(e.to_string());
        }
    }
    entry
}

/// Runs `jobs` on up to `parallelism` worker threads; each run is single-threaded and owns
/// its output directory. The overall exit code is the maximum over runs.
pub fn run_batch(jobs: &[BatchJob], parallelism: usize) -> BatchReport {
    let workers = parallelism.clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                // a closed receiver only happens if the collector panicked
                let _ = tx.send((i, execute(job)));
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<BatchEntry>> = vec![None; jobs.len()];
    for (i, e) in rx {
        slots[i] = Some(e);
    }
    let runs: Vec<BatchEntry> = slots.into_iter().map(|e| e.expect("every job reports")).collect();
    let exit_code = runs.iter().map(|r| r.exit_code).max().unwrap_or(0);
    BatchReport { runs, exit_code }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::registry::default_config;

    fn job(name: &str, dir: &std::path::Path, sets: &[&str]) -> BatchJob {
        let sets: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        let config = default_config("thm1_linear").unwrap().with_overrides(&sets).unwrap();
        BatchJob { name: name.into(), config, out_dir: dir.join(name) }
    }

    #[test]
    fn exit_code_is_max_and_errors_are_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let ok = job("a", dir.path(), &["grid.N=256", "grid.L=30", "time.T=2", "analysis.fit_window=[0.5,2]"]);
        let mut bad = ok.clone();
        bad.name = "b".into();
        bad.out_dir = dir.path().join("b");
        bad.config.grid.n = 3;
        let r = run_batch(&[ok, bad], 2);
        assert_eq!(r.runs[1].exit_code, 2);
        assert!(r.runs[0].error.is_none());
        assert_eq!(r.exit_code, r.runs.iter().map(|e| e.exit_code).max().unwrap());
        assert!(!dir.path().join("b").exists());
    }

    #[test]
    fn parallelism_does_not_change_bytes() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let sets = ["grid.N=256", "grid.L=30", "time.T=2", "analysis.fit_window=[0.5,2]"];
        let jobs = |d: &std::path::Path| vec![job("x", d, &sets), job("y", d, &sets), job("z", d, &sets)];
        run_batch(&jobs(d1.path()), 1);
        run_batch(&jobs(d2.path()), 3);
        for n in ["x", "y", "z"] {
            for f in ["series.csv", "report.json"] {
                let a = std::fs::read(d1.path().join(n).join(f)).unwrap();
                let b = std::fs::read(d2.path().join(n).join(f)).unwrap();
                assert_eq!(a, b, "{n}/{f}");
            }
        }
    }
}
