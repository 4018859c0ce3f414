//! The pipeline stages over in-memory values.

use super::HarnessError;
use crate::behavior::{
    check_model_consistency, expand, Conflict, Kripke, Machine, Violation, DEFAULT_NODE_CAP,
};
use crate::context::{
    apply_domain_rules, enumerate_contexts, evaluate_hazards, full_tables, generate_covering_array_with,
    refine_all, row_at, ContextRow, CoveringArray, Refinement, RemovedRow,
};
use crate::model::{BoolExpr, ContextKind, GuideType, Project};
use crate::par::Exec;
use crate::testgen::{
    concretize, dedup, from_counterexample, generate_with, measure, traceability, ConcreteScript,
    CoverageReport, Criterion, GenerateOptions, Reachable, TestSuite, TraceabilityMatrix,
};
use crate::verifier::{
    check_ltl, formalize_requirement, CheckResult, Formalization, FormalizeError, Verdict,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// How context tables are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    /// Covering array of the given strength; `Strength(2)` is pairwise.
    Strength(usize),
}

impl FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Mode::Full),
            "pairwise" => Ok(Mode::Strength(2)),
            _ => s
                .strip_prefix("t=")
                .and_then(|n| n.parse().ok())
                .filter(|&n: &usize| n >= 1)
                .map(Mode::Strength)
                .ok_or_else(|| {
                    HarnessError::Argument(format!("mode `{s}`: expected full, pairwise or t=<n>"))
                }),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Full => f.write_str("full"),
            Mode::Strength(2) => f.write_str("pairwise"),
            Mode::Strength(n) => write!(f, "t={n}"),
        }
    }
}

/// The context table of one (action, kind) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextTable {
    pub action: String,
    pub kind: ContextKind,
    pub variables: Vec<String>,
    /// Present for sampled tables.
    pub array: Option<CoveringArray>,
    pub kept: Vec<ContextRow>,
    pub removed: Vec<RemovedRow>,
}

impl ContextTable {
    pub fn rows_before_rules(&self) -> usize {
        self.kept.len() + self.removed.len()
    }

    pub fn file_name(&self) -> String {
        format!("contexts-{}-{}.csv", self.action, self.kind.keyword())
    }

    pub fn summary(&self) -> TableSummary {
        TableSummary {
            action: self.action.clone(),
            kind: self.kind.keyword().to_string(),
            file: self.file_name(),
            rows_before_rules: self.rows_before_rules(),
            rows_after_rules: self.kept.len(),
            hazardous: self.kept.iter().filter(|r| r.verdict.is_hazardous()).count(),
            undetermined: self
                .kept
                .iter()
                .filter(|r| r.verdict.label() == "undetermined")
                .count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub action: String,
    pub kind: String,
    pub file: String,
    pub rows_before_rules: usize,
    pub rows_after_rules: usize,
    pub hazardous: usize,
    pub undetermined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub mode: String,
    pub seed: u64,
    pub tables: Vec<ContextTable>,
    pub refinements: Vec<Refinement>,
}

pub fn analyze(project: &Project, mode: Mode, seed: u64) -> Result<Analysis, HarnessError> {
    analyze_with(project, mode, seed, Exec::default())
}

/// Builds, filters and evaluates the context table of every analysed
/// (action, kind) pair, then refines the tagged requirements.
pub fn analyze_with(
    project: &Project,
    mode: Mode,
    seed: u64,
    exec: Exec,
) -> Result<Analysis, HarnessError> {
    let mut tables = Vec::new();
    for (action, kind) in project.analysed_contexts() {
        let a = project
            .action(&action)
            .ok_or_else(|| crate::context::ContextError::NoProcessModel(action.clone()))?;
        let vars = project.relevant_variables(&action);
        let (array, rows) = match mode {
            Mode::Full => (None, enumerate_contexts(a, kind, &vars)?),
            Mode::Strength(t) => {
                let domains: Vec<usize> = vars.iter().map(|v| v.domain.len()).collect();
                let array = generate_covering_array_with(&domains, t, seed, exec)?;
                let rows = array.rows.iter().map(|r| row_at(a, kind, &vars, r)).collect();
                (Some(array), rows)
            }
        };
        let (kept, removed) = apply_domain_rules(rows, &project.domain_rules);
        tables.push(ContextTable {
            action,
            kind,
            variables: vars.iter().map(|v| v.name.clone()).collect(),
            array,
            kept: evaluate_hazards(kept, &project.hazard_rules),
            removed,
        });
    }
    let rows: Vec<ContextRow> = tables.iter().flat_map(|t| t.kept.iter().cloned()).collect();
    let refinements = refine_all(project, &rows, mode != Mode::Full);
    Ok(Analysis {
        mode: mode.to_string(),
        seed,
        tables,
        refinements,
    })
}

/// The action and context kind a requirement constrains: from its refinement
/// if it has one, otherwise from its source UCA.
fn requirement_target(
    project: &Project,
    id: &str,
    refinements: &[Refinement],
) -> Option<(String, ContextKind)> {
    if let Some(r) = refinements.iter().find(|r| r.ssr == id) {
        return Some((r.action.clone(), r.kind));
    }
    let uca = project.uca(project.requirement(id)?.source_uca.as_deref()?)?;
    let kind = match uca.guide_type {
        GuideType::NotProvided => ContextKind::NotProviding,
        _ => ContextKind::Providing,
    };
    Some((uca.action.clone(), kind))
}

/// Formalizes each requirement on its own. Constraints are refined from the
/// full context tables; a constraint written in the project is kept when no
/// context row is tagged with the requirement.
pub fn formalize_each(
    project: &Project,
) -> Result<Vec<Result<Formalization, FormalizeError>>, HarnessError> {
    let refinements = refine_all(project, &full_tables(project)?, false);
    Ok(project
        .requirements
        .iter()
        .map(|req| {
            let mut req = req.clone();
            let refined: Vec<BoolExpr> = refinements
                .iter()
                .filter(|r| r.ssr == req.id)
                .map(|r| r.constraint.clone())
                .collect();
            if !refined.is_empty() {
                req.refined_constraint = Some(BoolExpr::any(refined));
            }
            let (action, kind) = requirement_target(project, &req.id, &refinements)
                .unwrap_or_else(|| (String::new(), ContextKind::Providing));
            formalize_requirement(&req, &action, kind)
        })
        .collect())
}

/// Formalizes every requirement; the first failure is an error.
pub fn formalize_all(project: &Project) -> Result<Vec<Formalization>, HarnessError> {
    formalize_each(project)?
        .into_iter()
        .map(|f| f.map_err(HarnessError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub formalizations: Vec<Formalization>,
    pub verdicts: Vec<Verdict>,
    /// Overlapping guards; resolved by declaration order.
    pub conflicts: Vec<Conflict>,
    /// Hazardous context rows the model can reach.
    pub violations: Vec<Violation>,
    pub kripke_nodes: usize,
    pub kripke_edges: usize,
}

impl Verification {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(Verdict::holds)
    }

    pub fn resource_exceeded(&self) -> bool {
        self.verdicts
            .iter()
            .any(|v| matches!(v.result, CheckResult::ResourceExceeded { .. }))
    }
}

/// Checks each formalization on `k`; requirements are independent, so the
/// verdicts are the same in either execution mode.
pub fn check_all(k: &Kripke, formalizations: &[Formalization], cap: usize, exec: Exec) -> Vec<Verdict> {
    exec.map(formalizations, |f| {
        check_ltl(k, &f.formula, cap).for_requirement(&f.requirement)
    })
}

/// Expands the machine and checks every requirement on it.
pub fn verify(project: &Project, node_cap: usize) -> Result<Verification, HarnessError> {
    let machine = Machine::compile(project)?;
    let k = expand(&machine, node_cap)?;
    verify_on(project, &k, node_cap)
}

pub fn verify_on(project: &Project, k: &Kripke, node_cap: usize) -> Result<Verification, HarnessError> {
    let formalizations = formalize_all(project)?;
    let cap = node_cap.saturating_mul(64);
    let verdicts = check_all(k, &formalizations, cap, Exec::default());
    let rows = full_tables(project)?;
    Ok(Verification {
        formalizations,
        verdicts,
        conflicts: k.machine.check_determinism(),
        violations: check_model_consistency(k, &rows),
        kripke_nodes: k.nodes.len(),
        kripke_edges: k.num_edges(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestgenOptions {
    pub criteria: Vec<Criterion>,
    pub seed: u64,
    pub budget: usize,
    pub boundary: bool,
    pub concrete: bool,
    pub node_cap: usize,
}

impl Default for TestgenOptions {
    fn default() -> Self {
        let g = GenerateOptions::default();
        TestgenOptions {
            criteria: g.criteria,
            seed: 0,
            budget: g.budget,
            boundary: false,
            concrete: false,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generated {
    /// Size of the suite before deduplication.
    pub raw_cases: usize,
    pub suite: TestSuite,
    pub coverage: CoverageReport,
    pub traceability: TraceabilityMatrix,
    pub scripts: Vec<ConcreteScript>,
    /// Requirements left out of the counterexample search, with the reason.
    pub unformalized: Vec<String>,
}

/// Traversal tests plus one directed test per counterexample, deduplicated.
/// Requirements that cannot be formalized contribute no directed test.
pub fn testgen(project: &Project, opts: &TestgenOptions) -> Result<Generated, HarnessError> {
    let machine = Machine::compile(project)?;
    let k = expand(&machine, opts.node_cap)?;
    let mut suite = generate_with(
        &machine,
        &GenerateOptions {
            criteria: opts.criteria.clone(),
            seed: opts.seed,
            budget: opts.budget,
            node_cap: opts.node_cap,
        },
    )?;
    let mut formalizations = Vec::new();
    let mut unformalized = Vec::new();
    for f in formalize_each(project)? {
        match f {
            Ok(f) => formalizations.push(f),
            Err(e) => unformalized.push(e.to_string()),
        }
    }
    for v in check_all(&k, &formalizations, opts.node_cap.saturating_mul(64), Exec::default()) {
        if let Some(cex) = v.counterexample() {
            suite.cases.push(from_counterexample(&machine, cex, &v.requirement)?);
        }
    }
    let raw_cases = suite.cases.len();
    let suite = dedup(&suite);
    let coverage = measure(&suite, &machine, Some(&Reachable::from_kripke(&k)))?;
    let traceability = traceability(&suite, &project.requirements);
    let mut scripts = Vec::new();
    if opts.concrete {
        for case in &suite.cases {
            scripts.extend(concretize(case, &project.concretization, opts.seed, opts.boundary)?);
        }
    }
    Ok(Generated {
        raw_cases,
        suite,
        coverage,
        traceability,
        scripts,
        unformalized,
    })
}
