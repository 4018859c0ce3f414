use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, SourceSpan};
use crate::model::*;
use crate::verifier::parse_ltl;
use std::collections::HashSet;

const TOP_LEVEL: &[&str] = &[
    "accident",
    "hazard",
    "controller",
    "variable",
    "action",
    "uca",
    "ssr",
    "rule",
    "hazard-rule",
    "statemachine",
    "concretize",
];

const MACHINE_KEYWORDS: &[&str] = &["states", "initial", "events", "transition"];

/// One `event [guard] / effects @labels` clause.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDecl {
    pub event: String,
    pub guard: Option<BoolExpr>,
    pub assignments: Vec<(String, String)>,
    pub emits: Option<String>,
    pub ssr_labels: Vec<String>,
}

pub fn parse_project(source: &str) -> Result<Project, Vec<ParseError>> {
    parse_project_file(source, "<input>")
}

/// Parses a whole project, reporting every block that fails rather than stopping at the first.
pub fn parse_project_file(source: &str, file: &str) -> Result<Project, Vec<ParseError>> {
    let tokens = tokenize(source, file).map_err(|e| vec![e])?;
    let mut p = Parser::new(tokens);
    let mut project = Project::default();
    let mut errors = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    while !p.at_eof() {
        let start = p.pos;
        match p.block(&mut project, &mut seen) {
            Ok(()) => {}
            Err(e) => {
                errors.push(e);
                p.recover(start);
            }
        }
    }
    if errors.is_empty() {
        Ok(project)
    } else {
        Err(errors)
    }
}

pub fn parse_guard(source: &str) -> Result<BoolExpr, ParseError> {
    let mut p = Parser::new(tokenize(source, "<guard>")?);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_transition(source: &str) -> Result<TransitionDecl, ParseError> {
    let mut p = Parser::new(tokenize(source, "<transition>")?);
    let t = p.transition_decl()?;
    p.expect_eof()?;
    Ok(t)
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    pub(crate) fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.span(), msg)
    }

    fn unexpected(&self, what: &str, expected: &[&str]) -> ParseError {
        self.error(format!("expected {what}, found {}", self.peek()))
            .expecting(expected)
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            let label = tok.to_string();
            Err(self.unexpected(&label, &[&label]))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {} after end of expression", self.peek())))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn is_top_level_start(&self) -> bool {
        let t = &self.tokens[self.pos];
        t.line_start && matches!(&t.tok, Tok::Ident(s) if TOP_LEVEL.contains(&s.as_str()))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`"), &[kw]))
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what, &["identifier"])),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what, &["string"])),
        }
    }

    pub(crate) fn value_label(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Number(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("value label", &["identifier", "number"])),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek().clone() {
            Tok::Number(s) => {
                let span = self.span();
                self.bump();
                s.parse()
                    .map_err(|_| ParseError::new(span, format!("invalid number `{s}`")))
            }
            _ => Err(self.unexpected("number", &["number"])),
        }
    }

    /// Skips to the next top-level keyword that begins a line, always making progress.
    fn recover(&mut self, start: usize) {
        if self.pos == start {
            self.bump();
        }
        while !self.at_eof() && !self.is_top_level_start() {
            self.bump();
        }
    }

    /// Identifiers up to a closing brace or a list-terminating keyword.
    fn id_list(&mut self, stop: &[&str]) -> Result<Vec<String>, ParseError> {
        let mut out = Vec::new();
        while let Tok::Ident(s) = self.peek() {
            if stop.contains(&s.as_str()) || self.is_top_level_start() {
                break;
            }
            out.push(s.clone());
            self.bump();
        }
        Ok(out)
    }

    fn close_brace(&mut self) -> Result<(), ParseError> {
        if self.eat(&Tok::RBrace) {
            Ok(())
        } else if self.at_eof() || self.is_top_level_start() {
            Err(self.error("unclosed block: expected `}`").expecting(&["}"]))
        } else {
            Err(self.unexpected("`}`", &["}"]))
        }
    }

    fn register(
        &self,
        seen: &mut HashSet<(String, String)>,
        kind: &str,
        id: &str,
        span: SourceSpan,
    ) -> Result<(), ParseError> {
        if seen.insert((kind.to_string(), id.to_string())) {
            Ok(())
        } else {
            Err(ParseError::new(span, format!("duplicate {kind} `{id}`")))
        }
    }

    fn block(
        &mut self,
        project: &mut Project,
        seen: &mut HashSet<(String, String)>,
    ) -> Result<(), ParseError> {
        let kw = match self.peek().clone() {
            Tok::Ident(s) if TOP_LEVEL.contains(&s.as_str()) => s,
            _ => return Err(self.unexpected("top-level block", TOP_LEVEL)),
        };
        self.bump();
        let id_span = self.span();
        let id = self.ident(&format!("{kw} identifier"))?;
        match kw.as_str() {
            "accident" => {
                let description = self.string("accident description")?;
                self.register(seen, &kw, &id, id_span)?;
                project.accidents.push(Accident { id, description });
            }
            "hazard" => {
                let description = self.string("hazard description")?;
                self.expect(Tok::LBrace)?;
                self.keyword("accidents")?;
                let accidents = self.id_list(&[])?;
                self.close_brace()?;
                self.register(seen, &kw, &id, id_span)?;
                project.hazards.push(Hazard { id, description, accidents });
            }
            "controller" => {
                let description = self.string("controller description")?;
                self.register(seen, &kw, &id, id_span)?;
                project.controllers.push(Controller { id, description });
            }
            "variable" => {
                let v = self.variable(id)?;
                self.register(seen, &kw, &v.name, id_span)?;
                project.variables.push(v);
            }
            "action" => {
                self.keyword("by")?;
                let controller = self.ident("controller identifier")?;
                let safety_critical = if self.is_keyword("critical") {
                    self.bump();
                    true
                } else {
                    false
                };
                self.expect(Tok::LBrace)?;
                let mut relevant = Vec::new();
                if self.is_keyword("relevant") {
                    self.bump();
                    relevant = self.id_list(&[])?;
                }
                self.close_brace()?;
                self.register(seen, &kw, &id, id_span)?;
                project.actions.push(ControlAction {
                    name: id,
                    controller,
                    safety_critical,
                    relevant,
                });
            }
            "uca" => {
                let action = self.ident("control action")?;
                let span = self.span();
                let g = self.ident("guide type")?;
                let guide_type = GuideType::from_keyword(&g).ok_or_else(|| {
                    ParseError::new(span, format!("unknown guide type `{g}`")).expecting(&[
                        "not_provided",
                        "provided_unsafe",
                        "wrong_timing",
                        "stopped_too_soon",
                    ])
                })?;
                let description = self.string("uca description")?;
                self.expect(Tok::LBrace)?;
                self.keyword("hazards")?;
                let hazards = self.id_list(&[])?;
                self.close_brace()?;
                self.register(seen, &kw, &id, id_span)?;
                project.ucas.push(UnsafeControlAction {
                    id,
                    action,
                    guide_type,
                    description,
                    hazards,
                });
            }
            "ssr" => {
                let r = self.ssr(id)?;
                self.register(seen, &kw, &r.id, id_span)?;
                project.requirements.push(r);
            }
            "rule" => {
                let description = self.string("rule description")?;
                self.expect(Tok::LBrace)?;
                self.keyword("forbid")?;
                let forbidden = self.expr()?;
                self.close_brace()?;
                self.register(seen, &kw, &id, id_span)?;
                project.domain_rules.push(DomainRule { id, description, forbidden });
            }
            "hazard-rule" => {
                let action = self.ident("control action")?;
                let span = self.span();
                let k = self.ident("context kind")?;
                let kind = ContextKind::from_keyword(&k).ok_or_else(|| {
                    ParseError::new(span, format!("unknown context kind `{k}`"))
                        .expecting(&["providing", "not_providing"])
                })?;
                self.expect(Tok::LBrace)?;
                self.keyword("when")?;
                let when = self.expr()?;
                self.keyword("hazards")?;
                let hazards = self.id_list(&["ssrs"])?;
                let mut ssrs = Vec::new();
                if self.is_keyword("ssrs") {
                    self.bump();
                    ssrs = self.id_list(&[])?;
                }
                self.close_brace()?;
                self.register(seen, &kw, &id, id_span)?;
                project.hazard_rules.push(HazardRule {
                    id,
                    action,
                    kind,
                    when,
                    hazards,
                    ssrs,
                });
            }
            "statemachine" => {
                let m = self.statemachine(id)?;
                if project.efsm.is_some() {
                    return Err(ParseError::new(id_span, "duplicate statemachine block"));
                }
                project.efsm = Some(m);
            }
            "concretize" => {
                let maps = self.concretize(&id)?;
                self.register(seen, &kw, &id, id_span)?;
                project.concretization.mappings.extend(maps);
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    fn variable(&mut self, name: String) -> Result<ProcessVariable, ParseError> {
        let span = self.span();
        let k = self.ident("variable kind")?;
        let kind = VariableKind::from_keyword(&k).ok_or_else(|| {
            ParseError::new(span, format!("unknown variable kind `{k}`"))
                .expecting(&["internal", "interaction", "environmental"])
        })?;
        let mut parent = None;
        if self.is_keyword("parent") {
            self.bump();
            let pv = self.ident("parent variable")?;
            self.expect(Tok::EqEq)?;
            let pl = self.value_label()?;
            parent = Some((pv, pl));
        }
        self.expect(Tok::LBrace)?;
        let mut domain = Vec::new();
        while matches!(self.peek(), Tok::Ident(_) | Tok::Number(_)) && !self.is_top_level_start() {
            domain.push(self.value_label()?);
        }
        self.close_brace()?;
        Ok(ProcessVariable { name, kind, domain, parent })
    }

    fn ssr(&mut self, id: String) -> Result<SafetyRequirement, ParseError> {
        let text = self.string("requirement text")?;
        let mut r = SafetyRequirement {
            id,
            text,
            source_uca: None,
            refined_constraint: None,
            ltl: None,
        };
        if !self.eat(&Tok::LBrace) {
            return Ok(r);
        }
        loop {
            match self.peek() {
                Tok::Ident(s) if s == "source" => {
                    self.bump();
                    r.source_uca = Some(self.ident("uca identifier")?);
                }
                Tok::Ident(s) if s == "constraint" => {
                    self.bump();
                    r.refined_constraint = Some(self.expr()?);
                }
                Tok::Ident(s) if s == "ltl" => {
                    self.bump();
                    let span = self.span();
                    let text = self.string("LTL formula string")?;
                    let f = parse_ltl(&text).map_err(|e| {
                        ParseError::new(span, format!("in LTL formula: {}", e.message))
                    })?;
                    r.ltl = Some(f);
                }
                _ => break,
            }
        }
        self.close_brace()?;
        Ok(r)
    }

    fn statemachine(&mut self, name: String) -> Result<Efsm, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut m = Efsm {
            name,
            states: Vec::new(),
            initial_state: String::new(),
            initial: Vec::new(),
            events: Vec::new(),
            transitions: Vec::new(),
        };
        let mut have_initial = false;
        loop {
            match self.peek().clone() {
                Tok::Ident(s) if s == "states" => {
                    self.bump();
                    m.states.extend(self.id_list(MACHINE_KEYWORDS)?);
                }
                Tok::Ident(s) if s == "events" => {
                    self.bump();
                    m.events.extend(self.id_list(MACHINE_KEYWORDS)?);
                }
                Tok::Ident(s) if s == "initial" => {
                    if have_initial {
                        return Err(self.error("duplicate `initial` declaration"));
                    }
                    self.bump();
                    have_initial = true;
                    m.initial_state = self.ident("initial state")?;
                    self.expect(Tok::LBrace)?;
                    if !matches!(self.peek(), Tok::RBrace) {
                        loop {
                            let var = self.ident("variable")?;
                            self.expect(Tok::Equals)?;
                            let val = self.value_label()?;
                            m.initial.push((var, val));
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.close_brace()?;
                }
                Tok::Ident(s) if s == "transition" => {
                    self.bump();
                    let id = self.ident("transition identifier")?;
                    let source = self.ident("source state")?;
                    self.expect(Tok::Arrow)?;
                    let target = self.ident("target state")?;
                    self.expect(Tok::Colon)?;
                    let d = self.transition_decl()?;
                    m.transitions.push(Transition {
                        id,
                        source,
                        target,
                        event: d.event,
                        guard: d.guard,
                        assignments: d.assignments,
                        emits: d.emits,
                        ssr_labels: d.ssr_labels,
                    });
                }
                _ => break,
            }
        }
        self.close_brace()?;
        if !have_initial {
            return Err(self.error("statemachine has no `initial` declaration"));
        }
        Ok(m)
    }

    fn concretize(&mut self, variable: &str) -> Result<Vec<LabelMapping>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while matches!(self.peek(), Tok::Ident(_) | Tok::Number(_)) && !self.is_top_level_start() {
            let label = self.value_label()?;
            let values = match self.peek() {
                Tok::LBracket => {
                    self.bump();
                    let lo = self.number()?;
                    self.expect(Tok::Comma)?;
                    let hi = self.number()?;
                    self.expect(Tok::RBracket)?;
                    ValueSet::Interval(lo, hi)
                }
                Tok::LBrace => {
                    self.bump();
                    let mut vs = vec![self.number()?];
                    while self.eat(&Tok::Comma) {
                        vs.push(self.number()?);
                    }
                    self.expect(Tok::RBrace)?;
                    ValueSet::Literals(vs)
                }
                _ => return Err(self.unexpected("`[lo, hi]` or `{v, ...}`", &["[", "{"])),
            };
            out.push(LabelMapping {
                variable: variable.to_string(),
                label,
                values,
            });
        }
        self.close_brace()?;
        Ok(out)
    }

    pub(crate) fn transition_decl(&mut self) -> Result<TransitionDecl, ParseError> {
        let event = self.ident("event name")?;
        let mut guard = None;
        if self.eat(&Tok::LBracket) {
            guard = Some(self.expr()?);
            self.expect(Tok::RBracket)?;
        }
        let mut assignments = Vec::new();
        let mut emits = None;
        if self.eat(&Tok::Slash) {
            let effect_start = |p: &Parser| match p.peek() {
                Tok::Ident(s) => {
                    !MACHINE_KEYWORDS.contains(&s.as_str()) && !p.is_top_level_start()
                }
                _ => false,
            };
            if effect_start(self) {
                loop {
                    let span = self.span();
                    let name = self.ident("assignment or control action")?;
                    if self.eat(&Tok::Assign) {
                        let value = self.value_label()?;
                        assignments.push((name, value));
                    } else if emits.is_some() {
                        return Err(ParseError::new(span, "a transition emits at most one control action"));
                    } else {
                        emits = Some(name);
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
        }
        let mut ssr_labels = Vec::new();
        while self.eat(&Tok::At) {
            ssr_labels.push(self.ident("ssr label")?);
        }
        Ok(TransitionDecl {
            event,
            guard,
            assignments,
            emits,
            ssr_labels,
        })
    }

    // ---- guard expressions ----

    fn is_alias(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    pub(crate) fn expr(&mut self) -> Result<BoolExpr, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while matches!(self.peek(), Tok::OrOr) || self.is_alias("OR") {
            self.bump();
            parts.push(self.conjunction()?);
        }
        Ok(BoolExpr::any(parts))
    }

    fn conjunction(&mut self) -> Result<BoolExpr, ParseError> {
        let mut parts = vec![self.unary()?];
        while matches!(self.peek(), Tok::AndAnd) || self.is_alias("AND") {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(BoolExpr::all(parts))
    }

    fn unary(&mut self) -> Result<BoolExpr, ParseError> {
        if matches!(self.peek(), Tok::Bang) || self.is_alias("NOT") {
            self.bump();
            return Ok(BoolExpr::not(self.unary()?));
        }
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(BoolExpr::Const(s == "true"))
            }
            Tok::Ident(var) => {
                // a lone keyword in operand position is a syntax error, not a variable
                if matches!(self.peek_at(1), Tok::EqEq | Tok::NotEq) {
                    self.bump();
                    let negated = matches!(self.bump().tok, Tok::NotEq);
                    let value = self.value_label()?;
                    Ok(if negated {
                        BoolExpr::Ne(var, value)
                    } else {
                        BoolExpr::Eq(var, value)
                    })
                } else {
                    self.bump();
                    Err(self.unexpected("`==` or `!=`", &["==", "!="]))
                }
            }
            _ => Err(self.unexpected("condition", &["identifier", "(", "!", "true", "false"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_conjunction() {
        let e = parse_guard("speed == greaterThanDesired && brake == notApplied").unwrap();
        assert_eq!(
            e,
            BoolExpr::And(vec![
                BoolExpr::eq("speed", "greaterThanDesired"),
                BoolExpr::eq("brake", "notApplied")
            ])
        );
    }

    #[test]
    fn guard_precedence() {
        let e = parse_guard("a == x || b == y && c == z").unwrap();
        assert_eq!(
            e,
            BoolExpr::Or(vec![
                BoolExpr::eq("a", "x"),
                BoolExpr::And(vec![BoolExpr::eq("b", "y"), BoolExpr::eq("c", "z")])
            ])
        );
    }

    #[test]
    fn word_aliases() {
        let a = parse_guard("NOT a == x AND (b == y OR c != z)").unwrap();
        let b = parse_guard("!a == x && (b == y || c != z)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_value_label() {
        let e = parse_guard("mode ==").unwrap_err();
        assert!(e.message.contains("expected value label"), "{}", e.message);
        assert_eq!(e.span.column, 8);
    }

    #[test]
    fn t6_declaration() {
        let d = parse_transition(
            "controlSpeed [speed == lessThanDesired && distance == greaterThanSafe && mode == cruise && brake == notApplied] / accelerateSpeed  @SSR1.3",
        )
        .unwrap();
        assert_eq!(d.event, "controlSpeed");
        assert_eq!(d.emits.as_deref(), Some("accelerateSpeed"));
        assert_eq!(d.ssr_labels, vec!["SSR1.3".to_string()]);
        match d.guard.unwrap() {
            BoolExpr::And(parts) => assert_eq!(parts.len(), 4),
            other => panic!("unexpected guard {other:?}"),
        }
        assert!(d.assignments.is_empty());
    }

    #[test]
    fn event_only_transition() {
        let d = parse_transition("tick / ").unwrap();
        assert_eq!(d.event, "tick");
        assert!(d.guard.is_none() && d.emits.is_none() && d.assignments.is_empty());
    }

    #[test]
    fn numeric_label_defers_to_validation() {
        let d = parse_transition("ev [x == 1] /").unwrap();
        assert_eq!(d.guard, Some(BoolExpr::eq("x", "1")));
    }

    #[test]
    fn assignments_and_action() {
        let d = parse_transition("distClose / distance := lessOrEqualSafe, mode := follow, brakeSignal @SSR1.2 @SSR1.3")
            .unwrap();
        assert_eq!(d.assignments.len(), 2);
        assert_eq!(d.emits.as_deref(), Some("brakeSignal"));
        assert_eq!(d.ssr_labels.len(), 2);
        assert!(parse_transition("e / a, b").is_err());
    }

    #[test]
    fn empty_input_is_empty_project() {
        assert_eq!(parse_project("").unwrap(), Project::default());
        assert_eq!(parse_project("# only a comment\n").unwrap(), Project::default());
    }

    #[test]
    fn unclosed_variable_block() {
        let errs = parse_project("variable distance interaction { lessOrEqualSafe greaterThanSafe").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("expected `}`"));
        assert_eq!(errs[0].span.line, 1);
    }

    #[test]
    fn recovery_reports_each_broken_block() {
        let src = "accident A1 \"a\"\nhazard H1 { accidents A1 }\nvariable v internal { a b\nrule R1 \"r\" { forbid v == }\naccident A2 \"b\"\n";
        let errs = parse_project(src).unwrap_err();
        assert_eq!(errs.len(), 3, "{errs:?}");
        assert_eq!(errs[0].span.line, 2);
        assert_eq!(errs[1].span.line, 4);
        assert_eq!(errs[2].span.line, 4);
    }

    #[test]
    fn duplicate_block_id() {
        let errs = parse_project("accident A1 \"a\"\naccident A1 \"b\"\n").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("duplicate accident"));
    }

    #[test]
    fn spans_lie_inside_source() {
        let src = "variable x internal { a b }\nssr S \"t\" { ltl \"G (\" }\n";
        let errs = parse_project(src).unwrap_err();
        let lines: Vec<&str> = src.lines().collect();
        for e in errs {
            assert!(e.span.line >= 1 && e.span.line <= lines.len());
            assert!(e.span.column >= 1 && e.span.column <= lines[e.span.line - 1].len() + 1);
        }
    }
}
