//! The consolidated safety verification report.

use super::execute::{ExecutionReport, Outcome, Totals};
use super::pipeline::TableSummary;
use crate::model::Project;
use crate::testgen::{CoverageReport, Metric, TestSuite};
use crate::verifier::{CheckResult, Verdict};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementRow {
    pub id: String,
    pub text: String,
    /// `holds`, `violated`, `resource-exceeded` or `not-checked`.
    pub verdict: String,
    pub vacuous: bool,
    pub formula: Option<String>,
    /// Relative path of the counterexample file.
    pub counterexample: Option<String>,
    pub covering_tests: usize,
    /// Execution results of the tests covering this requirement.
    pub execution: Option<Totals>,
    /// Hazardous context rows tagged with this requirement, per table file.
    pub context_rows: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyVerificationReport {
    pub tool: String,
    pub version: String,
    pub project: String,
    pub seeds: BTreeMap<String, u64>,
    pub requirements: Vec<RequirementRow>,
    pub coverage: CoverageReport,
    pub traceability_percent: f64,
    pub context_tables: Vec<TableSummary>,
    pub sut: Option<String>,
    pub execution: Option<Totals>,
}

pub fn cex_file(requirement: &str) -> String {
    format!("verify/cex-{requirement}.txt")
}

/// Stage outputs the report is built from.
pub struct ReportInputs<'a> {
    pub project: &'a Project,
    pub project_name: &'a str,
    pub tables: &'a [TableSummary],
    /// Hazardous row counts per requirement id, then per table file.
    pub tagged_rows: &'a BTreeMap<String, BTreeMap<String, usize>>,
    pub verdicts: &'a [Verdict],
    pub suite: &'a TestSuite,
    pub coverage: &'a CoverageReport,
    pub execution: Option<&'a ExecutionReport>,
    pub seeds: BTreeMap<String, u64>,
}

/// Joins the stage outputs into one row per requirement.
pub fn build_report(inputs: ReportInputs<'_>) -> SafetyVerificationReport {
    let ReportInputs {
        project,
        project_name,
        tables,
        tagged_rows,
        verdicts,
        suite,
        coverage,
        execution,
        seeds,
    } = inputs;
    let requirements: Vec<RequirementRow> = project
        .requirements
        .iter()
        .map(|r| {
            let v = verdicts.iter().find(|v| v.requirement == r.id);
            let (verdict, vacuous) = match v.map(|v| &v.result) {
                Some(CheckResult::Holds { vacuous }) => ("holds", *vacuous),
                Some(CheckResult::Violated { .. }) => ("violated", false),
                Some(CheckResult::ResourceExceeded { .. }) => ("resource-exceeded", false),
                None => ("not-checked", false),
            };
            let covering: Vec<&str> = suite
                .cases
                .iter()
                .filter(|c| c.covered_ssrs.contains(&r.id))
                .map(|c| c.id.as_str())
                .collect();
            let execution = execution.map(|e| {
                let mut t = Totals::default();
                for res in e.results.iter().filter(|res| covering.contains(&res.test.as_str())) {
                    t.total += 1;
                    match res.outcome {
                        Outcome::Pass => t.pass += 1,
                        Outcome::Fail { .. } => t.fail += 1,
                        Outcome::Error { .. } => t.error += 1,
                    }
                }
                t
            });
            RequirementRow {
                id: r.id.clone(),
                text: r.text.clone(),
                verdict: verdict.to_string(),
                vacuous,
                formula: v.map(|v| v.formula.clone()),
                counterexample: v.and_then(|v| v.counterexample()).map(|_| cex_file(&r.id)),
                covering_tests: covering.len(),
                execution,
                context_rows: tagged_rows.get(&r.id).cloned().unwrap_or_default(),
            }
        })
        .collect();
    let traced = requirements.iter().filter(|r| r.covering_tests > 0).count();
    SafetyVerificationReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        project: project_name.to_string(),
        seeds,
        traceability_percent: if requirements.is_empty() {
            100.0
        } else {
            100.0 * traced as f64 / requirements.len() as f64
        },
        requirements,
        coverage: coverage.clone(),
        context_tables: tables.to_vec(),
        sut: execution.map(|e| e.sut.clone()),
        execution: execution.map(|e| e.totals),
    }
}

fn metric(name: &str, m: &Metric) -> String {
    let reach = m
        .reachable
        .map(|r| format!(" ({r} reachable, {:.1}%)", m.reachable_percent()))
        .unwrap_or_default();
    format!("| {name} | {}/{} | {:.1}%{reach} |\n", m.covered, m.total, m.percent())
}

/// Human-readable summary of the report.
pub fn render_markdown(r: &SafetyVerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Safety verification report: {}\n", r.project);
    let seeds: Vec<String> = r.seeds.iter().map(|(k, v)| format!("{k} {v}")).collect();
    let _ = writeln!(s, "{} {}; seeds: {}\n", r.tool, r.version, seeds.join(", "));
    s.push_str("## Requirements\n\n");
    s.push_str("| SSR | Verdict | Tests | Execution | Counterexample | Requirement |\n");
    s.push_str("|---|---|---|---|---|---|\n");
    for q in &r.requirements {
        let verdict = if q.vacuous {
            format!("{} (vacuous)", q.verdict)
        } else {
            q.verdict.clone()
        };
        let exec = q
            .execution
            .map(|t| format!("{}/{} pass", t.pass, t.total))
            .unwrap_or_else(|| "-".into());
        let cex = q
            .counterexample
            .as_ref()
            .map(|c| format!("[trace]({c})"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "| {} | {verdict} | {} | {exec} | {cex} | {} |",
            q.id, q.covering_tests, q.text
        );
    }
    s.push_str("\n## Formulas\n\n");
    for q in &r.requirements {
        if let Some(f) = &q.formula {
            let _ = writeln!(s, "- {}: `{f}`", q.id);
        }
    }
    s.push_str("\n## Coverage\n\n| Criterion | Covered | Percent |\n|---|---|---|\n");
    s += &metric("states", &r.coverage.states);
    s += &metric("transitions", &r.coverage.transitions);
    s += &metric("transition pairs", &r.coverage.transition_pairs);
    s += &metric("actions", &r.coverage.actions);
    let _ = writeln!(s, "\nRequirement traceability: {:.1}%", r.traceability_percent);
    s.push_str("\n## Context tables\n\n| Table | Rows | After rules | Hazardous | Undetermined |\n|---|---|---|---|---|\n");
    for t in &r.context_tables {
        let _ = writeln!(
            s,
            "| {} {} | {} | {} | {} | {} |",
            t.action, t.kind, t.rows_before_rules, t.rows_after_rules, t.hazardous, t.undetermined
        );
    }
    if let (Some(sut), Some(t)) = (&r.sut, &r.execution) {
        let _ = writeln!(
            s,
            "\n## Execution\n\n{sut}: {} passed, {} failed, {} errors of {}",
            t.pass, t.fail, t.error, t.total
        );
    }
    s
}
