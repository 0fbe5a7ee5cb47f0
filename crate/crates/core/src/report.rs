//! Machine-readable solve reports.
//!
//! Reports are built from `serde_json::Value`, whose maps keep keys sorted,
//! so the same inputs always serialize to the same bytes.

use serde_json::{json, Value};

use crate::concepts::SolveReport;
use crate::economy::Economy;
use crate::framework::BlockWitness;
use crate::matching::{format_matching, DynamicMatching};

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// Output knobs that do not affect the solution set.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReportOptions {
    /// Rejected matchings listed with their witness; the rest are counted.
    pub max_witnesses: Option<usize>,
    /// Wall-clock time in milliseconds, included only when given.
    pub timing_ms: Option<u128>,
}

fn witness_json(econ: &Economy, m: &DynamicMatching, w: &BlockWitness) -> Value {
    let comparisons: Vec<Value> = w
        .comparisons
        .iter()
        .map(|c| {
            json!({
                "agent": econ.name(c.agent),
                "alternative": c.alternative.as_ref().map(|p| p.to_string()),
                "current": c.current.to_string(),
            })
        })
        .collect();
    json!({
        "matching": format_matching(econ, m),
        "kind": w.kind.as_str(),
        "period": w.period,
        "agents": w.agents.iter().map(|&k| econ.name(k)).collect::<Vec<_>>(),
        "comparisons": comparisons,
    })
}

/// The JSON document for one solve.
pub fn solve_report_json(econ: &Economy, digest: &str, report: &SolveReport, opts: ReportOptions) -> Value {
    let candidates: Vec<Value> = report
        .candidates
        .iter()
        .zip(&report.consistency)
        .map(|(m, v)| {
            let pairs = |xs: &[(usize, usize)]| -> Vec<Value> {
                xs.iter()
                    .map(|&(t, k)| json!({ "period": t, "agent": econ.name(k) }))
                    .collect()
            };
            json!({
                "matching": format_matching(econ, m),
                "consistent": v.pass,
                "checked": pairs(&v.checked),
                "failures": pairs(&v.failures),
            })
        })
        .collect();
    let shown = opts.max_witnesses.unwrap_or(usize::MAX).min(report.rejected.len());
    let witnesses: Vec<Value> = report.rejected[..shown]
        .iter()
        .map(|(m, w)| witness_json(econ, m, w))
        .collect();
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "economy_digest": digest,
        "concept": report.concept.name(),
        "settings": {
            "empty_conjectures": report.config.empty_conjectures.as_str(),
            "max_matchings": report.config.max_matchings,
            "threads": report.config.threads,
            "max_witnesses": opts.max_witnesses,
        },
        "solutions": report.solutions.iter().map(|m| format_matching(econ, m)).collect::<Vec<_>>(),
        "solution_count": report.solutions.len(),
        "candidates": candidates,
        "empty_continuations": report.empty_continuations,
        "enumerated": report.enumerated,
        "rejected_count": report.rejected.len(),
        "witnesses": witnesses,
        "definitions_agree": report.definitions_agree,
        "stats": {
            "states_solved": report.stats.states_solved,
            "lone_wolf_checks": report.stats.lone_wolf_checks,
            "lone_wolf_violations": report.stats.lone_wolf_violations,
        },
    });
    if let Some(ms) = opts.timing_ms {
        doc["timing_ms"] = json!(ms);
    }
    doc
}

/// Pretty JSON with a trailing newline.
pub fn render(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("json values serialize");
    s.push('\n');
    s
}
