//! Command-line stages. Each reads its inputs, writes artifacts under the
//! output root with fixed relative names and returns the exit code.
//!
//! Layout under `--out`:
//!
//! ```text
//! analyze/contexts-<action>-<kind>.csv   analyze/analysis.json
//! verify/verdicts.json   verify/verification.json   verify/cex-<ssr>.txt
//! testgen/suite.json   testgen/coverage.json   testgen/traceability.csv
//! testgen/testgen.json   testgen/scripts.json (with --concrete)
//! execute/report.json
//! report/report.json   report/report.md
//! ```

use super::pipeline::{self, Mode, TableSummary, TestgenOptions};
use super::report::{build_report, cex_file, render_markdown, ReportInputs};
use super::{exit, io_err, load_project, sut_by_name, ExecutionReport, HarnessError};
use crate::behavior::{Machine, DEFAULT_NODE_CAP};
use crate::context::{to_csv, HazardVerdict};
use crate::model::Project;
use crate::testgen::{replay_case, CoverageReport, Criterion, TestSuite};
use crate::verifier::{CheckResult, Counterexample, Verdict};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Options shared by every command.
#[derive(Debug, Clone)]
pub struct Common {
    pub project: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    write(path, &s)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => HarnessError::MissingArtifact(path.to_path_buf()),
        _ => HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load(common: &Common) -> Result<Project, HarnessError> {
    let (project, warnings) = load_project(&common.project)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(project)
}

fn project_name(common: &Common) -> String {
    common
        .project
        .file_stem()
        .map_or_else(|| common.project.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRecord {
    pub ssr: String,
    pub action: String,
    pub kind: String,
    pub constraint: String,
    pub rows: usize,
    pub sample_derived: bool,
}

/// `analyze/analysis.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub mode: String,
    pub seed: u64,
    pub tables: Vec<TableSummary>,
    pub refinements: Vec<RefinementRecord>,
    /// Hazardous kept rows per requirement id and table file.
    pub tagged_rows: BTreeMap<String, BTreeMap<String, usize>>,
}

pub fn cmd_analyze(common: &Common, mode: Mode) -> Result<i32, HarnessError> {
    let project = load(common)?;
    let analysis = pipeline::analyze(&project, mode, common.seed)?;
    let dir = common.out.join("analyze");
    let mut tagged: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for t in &analysis.tables {
        let csv = to_csv(&t.variables, &t.kept, &t.removed).map_err(|e| HarnessError::Malformed {
            path: dir.join(t.file_name()),
            message: e.to_string(),
        })?;
        write(&dir.join(t.file_name()), &csv)?;
        for row in &t.kept {
            if let HazardVerdict::Hazardous { ssrs, .. } = &row.verdict {
                for s in ssrs {
                    *tagged.entry(s.clone()).or_default().entry(t.file_name()).or_default() += 1;
                }
            }
        }
        let s = t.summary();
        println!(
            "{} {}: {} rows, {} after rules, {} hazardous",
            s.action, s.kind, s.rows_before_rules, s.rows_after_rules, s.hazardous
        );
        if s.undetermined > 0 {
            eprintln!("warning: {} {}: {} undetermined rows", s.action, s.kind, s.undetermined);
        }
    }
    let record = AnalysisRecord {
        mode: analysis.mode.clone(),
        seed: analysis.seed,
        tables: analysis.tables.iter().map(|t| t.summary()).collect(),
        refinements: analysis
            .refinements
            .iter()
            .map(|r| RefinementRecord {
                ssr: r.ssr.clone(),
                action: r.action.clone(),
                kind: r.kind.keyword().to_string(),
                constraint: r.constraint.to_string(),
                rows: r.rows,
                sample_derived: r.sample_derived,
            })
            .collect(),
        tagged_rows: tagged,
    };
    for r in &record.refinements {
        println!("{}: {}", r.ssr, r.constraint);
    }
    write_json(&dir.join("analysis.json"), &record)?;
    Ok(exit::OK)
}

/// A counterexample as text, one line per step.
pub fn render_counterexample(requirement: &str, formula: &str, cex: &Counterexample) -> String {
    let mut s = format!("requirement {requirement}\nformula {formula}\n");
    for (i, step) in cex.steps().enumerate() {
        if i == cex.cycle_start() {
            s.push_str("-- cycle --\n");
        }
        let vals: Vec<String> = step
            .configuration
            .valuation
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let _ = writeln!(
            s,
            "{i}: {} [{}] emitted={} --{}{}-->",
            step.configuration.state,
            vals.join(", "),
            step.emitted.as_deref().unwrap_or("none"),
            step.event,
            step.transition.as_ref().map(|t| format!(" ({t})")).unwrap_or_default(),
        );
    }
    s
}

pub fn cmd_verify(common: &Common, node_cap: usize) -> Result<i32, HarnessError> {
    let project = load(common)?;
    let v = pipeline::verify(&project, node_cap)?;
    let dir = common.out.join("verify");
    for c in &v.conflicts {
        eprintln!(
            "warning: {} and {} overlap on {} in {}; {} has priority",
            c.first, c.second, c.event, c.state, c.first
        );
    }
    for f in &v.formalizations {
        for w in &f.warnings {
            eprintln!("warning: {w}");
        }
    }
    for x in &v.violations {
        eprintln!(
            "warning: {} {} context row {:?} is reachable (transition {:?})",
            x.action, x.kind, x.row, x.transition
        );
    }
    for verdict in &v.verdicts {
        let status = match &verdict.result {
            CheckResult::Holds { vacuous: true } => "holds (vacuously)".to_string(),
            CheckResult::Holds { .. } => "holds".to_string(),
            CheckResult::Violated { counterexample } => {
                let file = cex_file(&verdict.requirement);
                write(
                    &common.out.join(&file),
                    &render_counterexample(&verdict.requirement, &verdict.formula, counterexample),
                )?;
                format!("VIOLATED, trace in {file}")
            }
            CheckResult::ResourceExceeded { limit } => format!("resource limit {limit} exceeded"),
        };
        println!("{}: {status}", verdict.requirement);
    }
    write_json(&dir.join("verdicts.json"), &v.verdicts)?;
    write_json(&dir.join("verification.json"), &v)?;
    Ok(if v.resource_exceeded() {
        exit::RESOURCE
    } else if v.all_hold() {
        exit::OK
    } else {
        exit::FAILURE
    })
}

pub fn parse_criteria(s: &str) -> Result<Vec<Criterion>, HarnessError> {
    s.split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(|k| {
            Criterion::from_keyword(k).ok_or_else(|| {
                HarnessError::Argument(format!(
                    "criterion `{k}`: expected states, transitions, pairs or actions"
                ))
            })
        })
        .collect()
}

/// `testgen/testgen.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestgenRecord {
    pub seed: u64,
    pub raw_cases: usize,
    pub cases: usize,
    pub shortfall: Vec<String>,
    pub traceability_percent: f64,
}

pub fn cmd_testgen(common: &Common, opts: &TestgenOptions, strict: bool) -> Result<i32, HarnessError> {
    let project = load(common)?;
    let opts = TestgenOptions {
        seed: common.seed,
        ..opts.clone()
    };
    let g = pipeline::testgen(&project, &opts)?;
    for u in &g.unformalized {
        eprintln!("warning: no counterexample search: {u}");
    }
    let dir = common.out.join("testgen");
    write_json(&dir.join("suite.json"), &g.suite)?;
    write_json(&dir.join("coverage.json"), &g.coverage)?;
    let csv = g.traceability.to_csv().map_err(|e| HarnessError::Malformed {
        path: dir.join("traceability.csv"),
        message: e.to_string(),
    })?;
    write(&dir.join("traceability.csv"), &csv)?;
    if opts.concrete {
        write_json(&dir.join("scripts.json"), &g.scripts)?;
    }
    write_json(
        &dir.join("testgen.json"),
        &TestgenRecord {
            seed: opts.seed,
            raw_cases: g.raw_cases,
            cases: g.suite.cases.len(),
            shortfall: g.suite.shortfall.clone(),
            traceability_percent: g.traceability.coverage_percent,
        },
    )?;
    let c = &g.coverage;
    println!(
        "{} tests ({} before dedup); states {}/{}, transitions {}/{}, pairs {}/{}, actions {}/{}; requirements {:.1}%",
        g.suite.cases.len(),
        g.raw_cases,
        c.states.covered,
        c.states.total,
        c.transitions.covered,
        c.transitions.total,
        c.transition_pairs.covered,
        c.transition_pairs.total,
        c.actions.covered,
        c.actions.total,
        g.traceability.coverage_percent
    );
    if strict {
        for s in &g.suite.shortfall {
            eprintln!("error: not covered: {s}");
        }
    } else if !g.suite.shortfall.is_empty() {
        let unreachable = g.suite.shortfall.iter().filter(|s| s.ends_with("unreachable")).count();
        eprintln!(
            "warning: {} obligations not covered ({unreachable} unreachable); listed in {}",
            g.suite.shortfall.len(),
            dir.join("testgen.json").display()
        );
    }
    for s in g.traceability.uncovered() {
        eprintln!("warning: no test exercises {s}");
    }
    Ok(if strict && !g.suite.shortfall.is_empty() {
        exit::FAILURE
    } else {
        exit::OK
    })
}

pub fn suite_path(out: &Path) -> PathBuf {
    out.join("testgen").join("suite.json")
}

pub fn cmd_execute(
    common: &Common,
    suite: Option<&Path>,
    sut: &str,
    boundary: bool,
) -> Result<i32, HarnessError> {
    let project = load(common)?;
    let default_suite = suite_path(&common.out);
    let suite_file = suite.unwrap_or(&default_suite);
    let suite: TestSuite = read_json(suite_file)?;
    let machine = Machine::compile(&project)?;
    for case in &suite.cases {
        replay_case(&machine, case)?;
    }
    let mut adapter = sut_by_name(sut).ok_or_else(|| HarnessError::UnknownSut(sut.to_string()))?;
    let report = super::execute_suite(adapter.as_mut(), &suite, &project.concretization, common.seed, boundary);
    for r in &report.results {
        if let super::Outcome::Fail {
            variant,
            step,
            expected,
            observed,
        } = &r.outcome
        {
            println!("FAIL {} ({variant}) step {step}: expected {expected}, observed {observed}", r.test);
        } else if let super::Outcome::Error { message } = &r.outcome {
            println!("ERROR {}: {message}", r.test);
        }
    }
    let t = report.totals;
    println!("{}: {} passed, {} failed, {} errors of {}", report.sut, t.pass, t.fail, t.error, t.total);
    write_json(&common.out.join("execute").join("report.json"), &report)?;
    Ok(if report.all_passed() { exit::OK } else { exit::FAILURE })
}

pub fn cmd_report(common: &Common) -> Result<i32, HarnessError> {
    let project = load(common)?;
    let out = &common.out;
    let analysis: AnalysisRecord = read_json(&out.join("analyze/analysis.json"))?;
    let verdicts: Vec<Verdict> = read_json(&out.join("verify/verdicts.json"))?;
    let suite: TestSuite = read_json(&suite_path(out))?;
    let coverage: CoverageReport = read_json(&out.join("testgen/coverage.json"))?;
    let exec_path = out.join("execute/report.json");
    let execution: Option<ExecutionReport> = if exec_path.exists() {
        Some(read_json(&exec_path)?)
    } else {
        None
    };
    let mut seeds = BTreeMap::from([
        ("analyze".to_string(), analysis.seed),
        ("testgen".to_string(), suite.seed),
    ]);
    if let Some(e) = &execution {
        seeds.insert("execute".into(), e.seed);
    }
    let name = project_name(common);
    let report = build_report(ReportInputs {
        project: &project,
        project_name: &name,
        tables: &analysis.tables,
        tagged_rows: &analysis.tagged_rows,
        verdicts: &verdicts,
        suite: &suite,
        coverage: &coverage,
        execution: execution.as_ref(),
        seeds,
    });
    let dir = out.join("report");
    write_json(&dir.join("report.json"), &report)?;
    let md = render_markdown(&report);
    write(&dir.join("report.md"), &md)?;
    print!("{md}");
    let failed = report.requirements.iter().any(|r| r.verdict != "holds")
        || report.execution.is_some_and(|t| t.pass != t.total);
    Ok(if failed { exit::FAILURE } else { exit::OK })
}

#[derive(Debug, Clone)]
pub struct RunAllOptions {
    pub mode: Mode,
    pub node_cap: usize,
    pub testgen: TestgenOptions,
    pub sut: String,
    pub boundary: bool,
}

impl Default for RunAllOptions {
    fn default() -> Self {
        RunAllOptions {
            mode: Mode::Strength(2),
            node_cap: DEFAULT_NODE_CAP,
            testgen: TestgenOptions::default(),
            sut: "acc-ref".into(),
            boundary: false,
        }
    }
}

/// Every stage in order. Failing properties or tests do not stop later
/// stages; the exit code is the most severe one seen.
pub fn cmd_run_all(common: &Common, opts: &RunAllOptions) -> Result<i32, HarnessError> {
    let mut code = cmd_analyze(common, opts.mode)?;
    let v = cmd_verify(common, opts.node_cap)?;
    if v == exit::RESOURCE {
        return Ok(v);
    }
    code = code.max(v);
    code = code.max(cmd_testgen(common, &opts.testgen, false)?);
    code = code.max(cmd_execute(common, None, &opts.sut, opts.boundary)?);
    code = code.max(cmd_report(common)?);
    Ok(code)
}
