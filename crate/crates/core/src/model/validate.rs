use super::{BoolExpr, Project};
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    /// Where the problem lives, e.g. `hazard-rule HR1`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Finding {
            location: location.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding {
            location: location.into(),
            message: message.into(),
        });
    }
}

struct Checker<'p> {
    project: &'p Project,
    domains: HashMap<&'p str, &'p [String]>,
    report: ValidationReport,
}

/// Checks every cross reference and structural invariant of a parsed project.
///
/// Never fails: problems become report entries. A project is analyzable iff
/// the returned report has no errors.
pub fn validate(project: &Project) -> ValidationReport {
    let mut c = Checker {
        project,
        domains: project
            .variables
            .iter()
            .map(|v| (v.name.as_str(), v.domain.as_slice()))
            .collect(),
        report: ValidationReport::default(),
    };
    c.check_ids();
    c.check_hazards();
    c.check_variables();
    c.check_actions();
    c.check_ucas();
    c.check_requirements();
    c.check_rules();
    c.check_efsm();
    c.check_concretization();
    c.check_unused();
    c.report
}

impl<'p> Checker<'p> {
    fn duplicates<'a>(&mut self, kind: &str, ids: impl Iterator<Item = &'a str>) {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                self.report
                    .error(format!("{kind} {id}"), format!("duplicate {kind} id `{id}`"));
            }
        }
    }

    fn check_ids(&mut self) {
        let p = self.project;
        self.duplicates("accident", p.accidents.iter().map(|a| a.id.as_str()));
        self.duplicates("hazard", p.hazards.iter().map(|a| a.id.as_str()));
        self.duplicates("controller", p.controllers.iter().map(|a| a.id.as_str()));
        self.duplicates("variable", p.variables.iter().map(|a| a.name.as_str()));
        self.duplicates("uca", p.ucas.iter().map(|a| a.id.as_str()));
        self.duplicates("ssr", p.requirements.iter().map(|a| a.id.as_str()));
        self.duplicates("rule", p.domain_rules.iter().map(|a| a.id.as_str()));
        self.duplicates("hazard-rule", p.hazard_rules.iter().map(|a| a.id.as_str()));
        let mut seen = HashSet::new();
        for a in &p.actions {
            if !seen.insert((a.controller.as_str(), a.name.as_str())) {
                self.report.error(
                    format!("action {}", a.name),
                    format!("duplicate action `{}` for controller `{}`", a.name, a.controller),
                );
            }
        }
        for a in &p.accidents {
            if a.description.trim().is_empty() {
                self.report
                    .error(format!("accident {}", a.id), "description is empty");
            }
        }
    }

    fn has_hazard(&self, id: &str) -> bool {
        self.project.hazards.iter().any(|h| h.id == id)
    }

    fn has_ssr(&self, id: &str) -> bool {
        self.project.requirements.iter().any(|r| r.id == id)
    }

    fn check_hazards(&mut self) {
        for h in &self.project.hazards {
            let loc = format!("hazard {}", h.id);
            if h.accidents.is_empty() {
                self.report.error(&loc, "no linked accidents");
            }
            for a in &h.accidents {
                if !self.project.accidents.iter().any(|x| &x.id == a) {
                    self.report.error(&loc, format!("unknown accident `{a}`"));
                }
            }
        }
    }

    fn check_variables(&mut self) {
        for v in &self.project.variables {
            let loc = format!("variable {}", v.name);
            if v.domain.len() < 2 {
                self.report.error(&loc, "domain size < 2");
            }
            let mut seen = HashSet::new();
            for l in &v.domain {
                if !seen.insert(l) {
                    self.report.error(&loc, format!("duplicate value label `{l}`"));
                }
            }
            if let Some((pv, pl)) = &v.parent {
                if pv == &v.name {
                    self.report.error(&loc, "variable cannot be its own parent");
                } else if !self.value_declared(pv, pl) {
                    self.report
                        .error(&loc, format!("parent `{pv} == {pl}` does not resolve"));
                }
            }
        }
    }

    fn value_declared(&self, var: &str, label: &str) -> bool {
        self.domains
            .get(var)
            .is_some_and(|d| d.iter().any(|l| l == label))
    }

    fn check_expr(&mut self, loc: &str, expr: &BoolExpr) {
        for (var, label) in expr.atoms() {
            match self.domains.get(var) {
                None => self.report.error(loc, format!("unknown variable `{var}`")),
                Some(d) if !d.iter().any(|l| l == label) => self
                    .report
                    .error(loc, format!("`{label}` is not a value of `{var}`")),
                _ => {}
            }
        }
    }

    fn check_actions(&mut self) {
        for a in &self.project.actions {
            let loc = format!("action {}", a.name);
            if !self.project.controllers.iter().any(|c| c.id == a.controller) {
                self.report
                    .error(&loc, format!("unknown controller `{}`", a.controller));
            }
            let mut seen = HashSet::new();
            for v in &a.relevant {
                if !self.domains.contains_key(v.as_str()) {
                    self.report.error(&loc, format!("unknown variable `{v}`"));
                }
                if !seen.insert(v) {
                    self.report
                        .error(&loc, format!("variable `{v}` listed twice as relevant"));
                }
            }
        }
    }

    fn check_ucas(&mut self) {
        for u in &self.project.ucas {
            let loc = format!("uca {}", u.id);
            if self.project.action(&u.action).is_none() {
                self.report.error(&loc, format!("unknown action `{}`", u.action));
            }
            if u.hazards.is_empty() {
                self.report.error(&loc, "no linked hazards");
            }
            for h in &u.hazards {
                if !self.has_hazard(h) {
                    self.report.error(&loc, format!("unknown hazard `{h}`"));
                }
            }
        }
    }

    fn check_requirements(&mut self) {
        for r in &self.project.requirements {
            let loc = format!("ssr {}", r.id);
            if let Some(u) = &r.source_uca {
                if self.project.uca(u).is_none() {
                    self.report.error(&loc, format!("unknown uca `{u}`"));
                }
            }
            if let Some(c) = &r.refined_constraint {
                self.check_expr(&loc, c);
            }
        }
    }

    fn check_rules(&mut self) {
        for r in &self.project.domain_rules {
            let loc = format!("rule {}", r.id);
            self.check_expr(&loc, &r.forbidden);
        }
        for r in &self.project.hazard_rules {
            let loc = format!("hazard-rule {}", r.id);
            match self.project.action(&r.action) {
                None => self.report.error(&loc, format!("unknown action `{}`", r.action)),
                Some(a) => {
                    for var in r.when.variables() {
                        if self.domains.contains_key(var) && !a.relevant.iter().any(|x| x == var) {
                            self.report.error(
                                &loc,
                                format!("variable `{var}` is not relevant to `{}`", r.action),
                            );
                        }
                    }
                }
            }
            self.check_expr(&loc, &r.when);
            if r.hazards.is_empty() {
                self.report.error(&loc, "no hazards listed");
            }
            for h in &r.hazards {
                if !self.has_hazard(h) {
                    self.report.error(&loc, format!("unknown hazard `{h}`"));
                }
            }
            for s in &r.ssrs {
                if !self.has_ssr(s) {
                    self.report.error(&loc, format!("unknown ssr `{s}`"));
                }
            }
        }
    }

    fn check_efsm(&mut self) {
        let Some(m) = &self.project.efsm else { return };
        let loc = format!("statemachine {}", m.name);
        self.duplicates("state", m.states.iter().map(String::as_str));
        self.duplicates("event", m.events.iter().map(String::as_str));
        self.duplicates("transition", m.transitions.iter().map(|t| t.id.as_str()));
        if !m.states.contains(&m.initial_state) {
            self.report
                .error(&loc, format!("initial state `{}` is not declared", m.initial_state));
        }
        let mut machine_vars = HashSet::new();
        for (var, label) in &m.initial {
            if !machine_vars.insert(var.as_str()) {
                self.report
                    .error(&loc, format!("variable `{var}` initialised twice"));
            }
            if !self.domains.contains_key(var.as_str()) {
                self.report.error(&loc, format!("unknown variable `{var}`"));
            } else if !self.value_declared(var, label) {
                self.report
                    .error(&loc, format!("`{label}` is not a value of `{var}`"));
            }
        }
        for t in &m.transitions {
            let tloc = format!("transition {}", t.id);
            for s in [&t.source, &t.target] {
                if !m.states.contains(s) {
                    self.report.error(&tloc, format!("unknown state `{s}`"));
                }
            }
            if !m.events.contains(&t.event) {
                self.report.error(&tloc, format!("unknown event `{}`", t.event));
            }
            if let Some(g) = &t.guard {
                self.check_expr(&tloc, g);
                for var in g.variables() {
                    if self.domains.contains_key(var) && !machine_vars.contains(var) {
                        self.report.error(
                            &tloc,
                            format!("guard reads `{var}` which the machine does not initialise"),
                        );
                    }
                }
            }
            let mut assigned = HashSet::new();
            for (var, label) in &t.assignments {
                if !assigned.insert(var.as_str()) {
                    self.report
                        .error(&tloc, format!("variable `{var}` assigned more than once"));
                }
                if !machine_vars.contains(var.as_str()) {
                    self.report
                        .error(&tloc, format!("assignment to `{var}` which the machine does not initialise"));
                } else if !self.value_declared(var, label) {
                    self.report
                        .error(&tloc, format!("`{label}` is not a value of `{var}`"));
                }
            }
            if let Some(a) = &t.emits {
                if self.project.action(a).is_none() {
                    self.report.error(&tloc, format!("unknown action `{a}`"));
                }
            }
            for s in &t.ssr_labels {
                if !self.has_ssr(s) {
                    self.report.error(&tloc, format!("unknown ssr label `{s}`"));
                }
            }
        }
        let unlabelled: Vec<&str> = m
            .transitions
            .iter()
            .filter(|t| t.ssr_labels.is_empty())
            .map(|t| t.id.as_str())
            .collect();
        if !unlabelled.is_empty() {
            self.report.warn(
                &loc,
                format!("transitions without ssr label: {}", unlabelled.join(", ")),
            );
        }
    }

    fn check_concretization(&mut self) {
        let maps = &self.project.concretization.mappings;
        for (i, m) in maps.iter().enumerate() {
            let loc = format!("concretize {}", m.variable);
            if !self.domains.contains_key(m.variable.as_str()) {
                self.report
                    .error(&loc, format!("unknown variable `{}`", m.variable));
            } else if !self.value_declared(&m.variable, &m.label) {
                self.report.error(
                    &loc,
                    format!("`{}` is not a value of `{}`", m.label, m.variable),
                );
            }
            if m.values.is_empty() {
                self.report
                    .error(&loc, format!("empty value set for `{}`", m.label));
            }
            for other in &maps[..i] {
                if other.variable == m.variable {
                    if other.label == m.label {
                        self.report
                            .error(&loc, format!("label `{}` mapped twice", m.label));
                    } else if other.values.overlaps(&m.values) {
                        self.report.error(
                            &loc,
                            format!("labels `{}` and `{}` overlap", other.label, m.label),
                        );
                    }
                }
            }
        }
    }

    fn check_unused(&mut self) {
        let p = self.project;
        let mut used: HashSet<&str> = HashSet::new();
        for a in &p.actions {
            used.extend(a.relevant.iter().map(String::as_str));
        }
        if let Some(m) = &p.efsm {
            used.extend(m.initial.iter().map(|(v, _)| v.as_str()));
        }
        for r in &p.domain_rules {
            used.extend(r.forbidden.variables());
        }
        for v in &p.variables {
            if let Some((pv, _)) = &v.parent {
                used.insert(pv.as_str());
            }
        }
        for v in &p.variables {
            if !used.contains(v.name.as_str()) {
                self.report
                    .warn(format!("variable {}", v.name), "variable is never used");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn base() -> Project {
        Project {
            accidents: vec![Accident { id: "A1".into(), description: "collision".into() }],
            hazards: vec![Hazard {
                id: "H1".into(),
                description: "too close".into(),
                accidents: vec!["A1".into()],
            }],
            controllers: vec![Controller { id: "C".into(), description: "ctl".into() }],
            variables: vec![ProcessVariable {
                name: "brake".into(),
                kind: VariableKind::InteractionInterface,
                domain: vec!["applied".into(), "notApplied".into()],
                parent: None,
            }],
            actions: vec![ControlAction {
                name: "acc".into(),
                controller: "C".into(),
                safety_critical: true,
                relevant: vec!["brake".into()],
            }],
            ..Default::default()
        }
    }

    #[test]
    fn clean_project_has_no_errors() {
        assert!(validate(&base()).is_ok());
    }

    #[test]
    fn dangling_hazard_in_uca() {
        let mut p = base();
        p.ucas.push(UnsafeControlAction {
            id: "U1".into(),
            action: "acc".into(),
            guide_type: GuideType::ProvidedUnsafe,
            description: "x".into(),
            hazards: vec!["H9".into()],
        });
        let r = validate(&p);
        assert_eq!(r.errors.len(), 1);
        assert!(r.errors[0].message.contains("H9"));
    }

    #[test]
    fn one_label_domain() {
        let mut p = base();
        p.variables[0].domain = vec!["applied".into()];
        let r = validate(&p);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].message, "domain size < 2");
    }

    #[test]
    fn overlapping_concretization_rejected() {
        let mut p = base();
        p.concretization.mappings = vec![
            LabelMapping {
                variable: "brake".into(),
                label: "applied".into(),
                values: ValueSet::Interval(0.0, 1.0),
            },
            LabelMapping {
                variable: "brake".into(),
                label: "notApplied".into(),
                values: ValueSet::Literals(vec![1.0]),
            },
        ];
        let r = validate(&p);
        assert!(r.errors.iter().any(|e| e.message.contains("overlap")));
    }

    #[test]
    fn unused_variable_is_a_warning() {
        let mut p = base();
        p.variables.push(ProcessVariable {
            name: "spare".into(),
            kind: VariableKind::Internal,
            domain: vec!["a".into(), "b".into()],
            parent: None,
        });
        let r = validate(&p);
        assert!(r.is_ok());
        assert_eq!(r.warnings.len(), 1);
    }
}
