use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gridfn::experiments::{self, format_number, Check, Report};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::Format;

pub struct Outcome {
    pub name: String,
    pub result: gridfn::Result<Report>,
}

/// Runs the selected experiments concurrently, keeping the requested order.
pub fn execute(rc: &RunConfig) -> Vec<Outcome> {
    rc.experiments
        .par_iter()
        .map(|name| Outcome { name: name.clone(), result: experiments::run(name, &rc.config) })
        .collect()
}

#[derive(Serialize)]
struct ReportFile<'a> {
    experiment: &'a str,
    passed: bool,
    config: &'a gridfn::experiments::Config,
    report: &'a Report,
}

#[derive(Serialize)]
struct Summary<'a> {
    passed: bool,
    experiments: Vec<ExperimentSummary<'a>>,
}

#[derive(Serialize)]
struct ExperimentSummary<'a> {
    name: &'a str,
    passed: bool,
    checks: usize,
    failed: Vec<&'a Check>,
    runtime_seconds: Option<f64>,
    error: Option<String>,
    files: Vec<PathBuf>,
}

/// Writes the output files and prints the summary; returns whether every
/// experiment ran and passed all of its checks.
pub fn emit(rc: &RunConfig, outcomes: &[Outcome], json: bool) -> Result<bool> {
    let mut summaries = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let files = match (&rc.out, &outcome.result) {
            (Some(dir), Ok(report)) => write_report(dir, rc, report)?,
            _ => Vec::new(),
        };
        let summary = match &outcome.result {
            Ok(report) => ExperimentSummary {
                name: &outcome.name,
                passed: report.passed(),
                checks: report.checks.len(),
                failed: report.failures().collect(),
                runtime_seconds: Some(report.runtime_seconds),
                error: None,
                files,
            },
            Err(e) => ExperimentSummary {
                name: &outcome.name,
                passed: false,
                checks: 0,
                failed: Vec::new(),
                runtime_seconds: None,
                error: Some(e.to_string()),
                files,
            },
        };
        if !json {
            print_human(&summary);
        }
        summaries.push(summary);
    }
    let passed = summaries.iter().all(|s| s.passed);
    if json {
        let summary = Summary { passed, experiments: summaries };
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(passed)
}

fn print_human(s: &ExperimentSummary<'_>) {
    let verdict = if s.passed { "PASS" } else { "FAIL" };
    match (&s.error, s.runtime_seconds) {
        (Some(e), _) => println!("{verdict} {}: error: {e}", s.name),
        (None, t) => println!(
            "{verdict} {} ({}/{} checks, {:.2} s)",
            s.name,
            s.checks - s.failed.len(),
            s.checks,
            t.unwrap_or(0.0)
        ),
    }
    for c in &s.failed {
        println!(
            "  failed: {}: observed {}, expected {}, tolerance {}",
            c.name,
            format_number(c.observed),
            format_number(c.expected),
            format_number(c.tolerance)
        );
    }
}

fn write_report(dir: &Path, rc: &RunConfig, report: &Report) -> Result<Vec<PathBuf>> {
    let dir = dir.join(&report.name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    if rc.format == Format::Csv {
        let mut used = Vec::new();
        for table in &report.tables {
            let mut stem = slug(&table.name);
            let base = stem.clone();
            let mut k = 2;
            while used.contains(&stem) {
                stem = format!("{base}-{k}");
                k += 1;
            }
            let path = dir.join(format!("{stem}.csv"));
            fs::write(&path, table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            used.push(stem);
            files.push(path);
        }
    }
    let path = dir.join("report.json");
    let body = ReportFile { experiment: &report.name, passed: report.passed(), config: &rc.config, report };
    let mut text = serde_json::to_string_pretty(&body)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(files)
}

/// Lowercase ASCII file stem: alphanumerics kept, everything else collapsed
/// to single dashes.
fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    let out = out.trim_end_matches('-').to_string();
    if out.is_empty() {
        "table".into()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::slug;

    #[test]
    fn slugs_are_ascii_and_collapsed() {
        assert_eq!(slug("max-error (dt ∝ ε)"), "max-error-dt");
        assert_eq!(slug("⟨h², Δh⟩"), "h-h");
        assert_eq!(slug("ε"), "table");
    }
}
