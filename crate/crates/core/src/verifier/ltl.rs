//! LTL syntax, parsing and negation normal form.

use crate::dsl::{tokenize, ParseError, Tok, Token};
use serde::{Deserialize, Serialize};
use std::fmt;

/// An atomic proposition over a Kripke node.
///
/// `Eq` compares a subject against a label. Besides process-model variables
/// two subjects are special: `state` is the control state and `emits` is the
/// control action issued on the step into the node (`none` if nothing).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prop {
    Named(String),
    Eq { subject: String, value: String },
}

impl Prop {
    pub fn eq(subject: impl Into<String>, value: impl Into<String>) -> Self {
        Prop::Eq {
            subject: subject.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::Named(n) => f.write_str(n),
            Prop::Eq { subject, value } => write!(f, "{subject} == {value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ltl {
    True,
    False,
    Prop(Prop),
    Not(Box<Ltl>),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Implies(Box<Ltl>, Box<Ltl>),
    Iff(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Globally(Box<Ltl>),
    Finally(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Release(Box<Ltl>, Box<Ltl>),
}

impl Ltl {
    pub fn prop(subject: &str, value: &str) -> Ltl {
        Ltl::Prop(Prop::eq(subject, value))
    }

    pub fn named(name: &str) -> Ltl {
        Ltl::Prop(Prop::Named(name.to_string()))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Ltl) -> Ltl {
        Ltl::Not(Box::new(f))
    }

    pub fn and(a: Ltl, b: Ltl) -> Ltl {
        Ltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Implies(Box::new(a), Box::new(b))
    }

    pub fn next(f: Ltl) -> Ltl {
        Ltl::Next(Box::new(f))
    }

    pub fn globally(f: Ltl) -> Ltl {
        Ltl::Globally(Box::new(f))
    }

    pub fn finally(f: Ltl) -> Ltl {
        Ltl::Finally(Box::new(f))
    }

    pub fn until(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Ltl, b: Ltl) -> Ltl {
        Ltl::Release(Box::new(a), Box::new(b))
    }

    /// Conjunction of a list; empty means `true`.
    pub fn all(parts: impl IntoIterator<Item = Ltl>) -> Ltl {
        parts
            .into_iter()
            .reduce(Ltl::and)
            .unwrap_or(Ltl::True)
    }

    /// Disjunction of a list; empty means `false`.
    pub fn any(parts: impl IntoIterator<Item = Ltl>) -> Ltl {
        parts.into_iter().reduce(Ltl::or).unwrap_or(Ltl::False)
    }

    /// True when no temporal operator occurs.
    pub fn is_propositional(&self) -> bool {
        match self {
            Ltl::True | Ltl::False | Ltl::Prop(_) => true,
            Ltl::Not(a) => a.is_propositional(),
            Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Implies(a, b) | Ltl::Iff(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            _ => false,
        }
    }

    /// Every proposition in the formula, in first-occurrence order.
    pub fn props(&self) -> Vec<Prop> {
        fn go(f: &Ltl, out: &mut Vec<Prop>) {
            match f {
                Ltl::True | Ltl::False => {}
                Ltl::Prop(p) => {
                    if !out.contains(p) {
                        out.push(p.clone())
                    }
                }
                Ltl::Not(a) | Ltl::Next(a) | Ltl::Globally(a) | Ltl::Finally(a) => go(a, out),
                Ltl::And(a, b)
                | Ltl::Or(a, b)
                | Ltl::Implies(a, b)
                | Ltl::Iff(a, b)
                | Ltl::Until(a, b)
                | Ltl::Release(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Evaluates a propositional formula against a proposition oracle.
    ///
    /// Panics on temporal operators; callers check [`Ltl::is_propositional`] first.
    pub fn eval_state(&self, holds: &dyn Fn(&Prop) -> bool) -> bool {
        match self {
            Ltl::True => true,
            Ltl::False => false,
            Ltl::Prop(p) => holds(p),
            Ltl::Not(a) => !a.eval_state(holds),
            Ltl::And(a, b) => a.eval_state(holds) && b.eval_state(holds),
            Ltl::Or(a, b) => a.eval_state(holds) || b.eval_state(holds),
            Ltl::Implies(a, b) => !a.eval_state(holds) || b.eval_state(holds),
            Ltl::Iff(a, b) => a.eval_state(holds) == b.eval_state(holds),
            _ => panic!("eval_state on temporal formula {self}"),
        }
    }

    /// Negation normal form over `true false p !p && || X U R`.
    pub fn nnf(&self) -> Ltl {
        self.nnf_signed(true)
    }

    fn nnf_signed(&self, positive: bool) -> Ltl {
        use Ltl::*;
        match (self, positive) {
            (True, true) | (False, false) => True,
            (True, false) | (False, true) => False,
            (Prop(p), true) => Prop(p.clone()),
            (Prop(p), false) => Ltl::not(Prop(p.clone())),
            (Not(a), s) => a.nnf_signed(!s),
            (And(a, b), true) => Ltl::and(a.nnf_signed(true), b.nnf_signed(true)),
            (And(a, b), false) => Ltl::or(a.nnf_signed(false), b.nnf_signed(false)),
            (Or(a, b), true) => Ltl::or(a.nnf_signed(true), b.nnf_signed(true)),
            (Or(a, b), false) => Ltl::and(a.nnf_signed(false), b.nnf_signed(false)),
            (Implies(a, b), s) => Ltl::or(Ltl::not((**a).clone()), (**b).clone()).nnf_signed(s),
            (Iff(a, b), s) => {
                let both = Ltl::and((**a).clone(), (**b).clone());
                let neither = Ltl::and(Ltl::not((**a).clone()), Ltl::not((**b).clone()));
                Ltl::or(both, neither).nnf_signed(s)
            }
            (Next(a), s) => Ltl::next(a.nnf_signed(s)),
            (Globally(a), true) => Ltl::release(False, a.nnf_signed(true)),
            (Globally(a), false) => Ltl::until(True, a.nnf_signed(false)),
            (Finally(a), true) => Ltl::until(True, a.nnf_signed(true)),
            (Finally(a), false) => Ltl::release(False, a.nnf_signed(false)),
            (Until(a, b), true) => Ltl::until(a.nnf_signed(true), b.nnf_signed(true)),
            (Until(a, b), false) => Ltl::release(a.nnf_signed(false), b.nnf_signed(false)),
            (Release(a, b), true) => Ltl::release(a.nnf_signed(true), b.nnf_signed(true)),
            (Release(a, b), false) => Ltl::until(a.nnf_signed(false), b.nnf_signed(false)),
        }
    }
}

impl fmt::Display for Ltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::True => f.write_str("true"),
            Ltl::False => f.write_str("false"),
            Ltl::Prop(p) => write!(f, "{p}"),
            Ltl::Not(a) => match &**a {
                Ltl::Prop(Prop::Eq { .. }) => write!(f, "!({a})"),
                _ => write!(f, "!{a}"),
            },
            Ltl::And(a, b) => write!(f, "({a} && {b})"),
            Ltl::Or(a, b) => write!(f, "({a} || {b})"),
            Ltl::Implies(a, b) => write!(f, "({a} -> {b})"),
            Ltl::Iff(a, b) => write!(f, "({a} <-> {b})"),
            Ltl::Next(a) => write!(f, "X {}", Unary(a)),
            Ltl::Globally(a) => write!(f, "G {}", Unary(a)),
            Ltl::Finally(a) => write!(f, "F {}", Unary(a)),
            Ltl::Until(a, b) => write!(f, "({a} U {b})"),
            Ltl::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

/// Operand of a prefix operator; `a == b` needs parentheses there to keep `!` readable.
struct Unary<'a>(&'a Ltl);

impl fmt::Display for Unary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Ltl::Prop(Prop::Eq { .. }) => write!(f, "({})", self.0),
            other => write!(f, "{other}"),
        }
    }
}

/// Parses a formula such as `G ((speed == low && mode == cruise) -> emits == accelerateSignal)`.
pub fn parse_ltl(source: &str) -> Result<Ltl, ParseError> {
    let tokens = tokenize(source, "<ltl>")?;
    let mut p = LtlParser { tokens, pos: 0 };
    let f = p.iff()?;
    if !matches!(p.peek(), Tok::Eof) {
        return Err(p.error(format!("unexpected {} after end of formula", p.peek())));
    }
    Ok(f)
}

struct LtlParser {
    tokens: Vec<Token>,
    pos: usize,
}

impl LtlParser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.tokens[self.pos].span.clone(), msg)
    }

    /// An identifier used as an operator keyword, unless it is the subject of a comparison.
    fn word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
            && !matches!(self.peek2(), Tok::EqEq | Tok::NotEq)
    }

    fn iff(&mut self) -> Result<Ltl, ParseError> {
        let mut f = self.implies()?;
        while matches!(self.peek(), Tok::Iff) {
            self.bump();
            let r = self.implies()?;
            f = Ltl::Iff(Box::new(f), Box::new(r));
        }
        Ok(f)
    }

    fn implies(&mut self) -> Result<Ltl, ParseError> {
        let f = self.or()?;
        if matches!(self.peek(), Tok::Arrow) {
            self.bump();
            let r = self.implies()?;
            return Ok(Ltl::implies(f, r));
        }
        Ok(f)
    }

    fn or(&mut self) -> Result<Ltl, ParseError> {
        let mut f = self.and()?;
        while matches!(self.peek(), Tok::OrOr) || self.word("OR") {
            self.bump();
            f = Ltl::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Ltl, ParseError> {
        let mut f = self.binary_temporal()?;
        while matches!(self.peek(), Tok::AndAnd) || self.word("AND") {
            self.bump();
            f = Ltl::and(f, self.binary_temporal()?);
        }
        Ok(f)
    }

    fn binary_temporal(&mut self) -> Result<Ltl, ParseError> {
        let f = self.unary()?;
        if self.word("U") {
            self.bump();
            return Ok(Ltl::until(f, self.binary_temporal()?));
        }
        if self.word("R") {
            self.bump();
            return Ok(Ltl::release(f, self.binary_temporal()?));
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Ltl, ParseError> {
        if matches!(self.peek(), Tok::Bang) || self.word("NOT") {
            self.bump();
            return Ok(Ltl::not(self.unary()?));
        }
        for (w, ctor) in [
            ("X", Ltl::next as fn(Ltl) -> Ltl),
            ("G", Ltl::globally),
            ("F", Ltl::finally),
        ] {
            if self.word(w) {
                self.bump();
                return Ok(ctor(self.unary()?));
            }
        }
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.iff()?;
                if !matches!(self.peek(), Tok::RParen) {
                    return Err(self
                        .error(format!("expected `)`, found {}", self.peek()))
                        .expecting(&[")"]));
                }
                self.bump();
                Ok(f)
            }
            Tok::Ident(s) if (s == "true" || s == "false") && !matches!(self.peek2(), Tok::EqEq | Tok::NotEq) => {
                self.bump();
                Ok(if s == "true" { Ltl::True } else { Ltl::False })
            }
            Tok::Ident(s) => {
                self.bump();
                let negated = match self.peek() {
                    Tok::EqEq => false,
                    Tok::NotEq => true,
                    _ => return Ok(Ltl::named(&s)),
                };
                self.bump();
                let value = match self.peek().clone() {
                    Tok::Ident(v) | Tok::Number(v) => v,
                    other => {
                        return Err(self
                            .error(format!("expected value label, found {other}"))
                            .expecting(&["identifier", "number"]))
                    }
                };
                self.bump();
                let atom = Ltl::prop(&s, &value);
                Ok(if negated { Ltl::not(atom) } else { atom })
            }
            other => Err(self
                .error(format!("expected formula, found {other}"))
                .expecting(&["identifier", "(", "!", "X", "G", "F"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let f = parse_ltl("G a -> F b U c && d").unwrap();
        let expected = Ltl::implies(
            Ltl::globally(Ltl::named("a")),
            Ltl::and(
                Ltl::until(Ltl::finally(Ltl::named("b")), Ltl::named("c")),
                Ltl::named("d"),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn right_associative() {
        assert_eq!(
            parse_ltl("a U b U c").unwrap(),
            Ltl::until(Ltl::named("a"), Ltl::until(Ltl::named("b"), Ltl::named("c")))
        );
        assert_eq!(
            parse_ltl("a -> b -> c").unwrap(),
            Ltl::implies(Ltl::named("a"), Ltl::implies(Ltl::named("b"), Ltl::named("c")))
        );
    }

    #[test]
    fn comparisons() {
        let f = parse_ltl("G (speed != high -> emits == accelerateSignal)").unwrap();
        assert_eq!(
            f,
            Ltl::globally(Ltl::implies(
                Ltl::not(Ltl::prop("speed", "high")),
                Ltl::prop("emits", "accelerateSignal")
            ))
        );
        // operator letters are ordinary subjects when compared
        assert_eq!(parse_ltl("F == x").unwrap(), Ltl::prop("F", "x"));
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "G ((a == x && b == y) -> emits == act)",
            "!(a == x) U (X b R !c)",
            "(p <-> q) || F G !(s == t)",
            "true && !false",
        ] {
            let f = parse_ltl(src).unwrap();
            assert_eq!(parse_ltl(&f.to_string()).unwrap(), f, "{src} -> {f}");
        }
    }

    #[test]
    fn nnf_has_negations_on_props_only() {
        fn ok(f: &Ltl) -> bool {
            match f {
                Ltl::Not(a) => matches!(**a, Ltl::Prop(_)),
                Ltl::True | Ltl::False | Ltl::Prop(_) => true,
                Ltl::And(a, b) | Ltl::Or(a, b) | Ltl::Until(a, b) | Ltl::Release(a, b) => {
                    ok(a) && ok(b)
                }
                Ltl::Next(a) => ok(a),
                _ => false,
            }
        }
        let f = parse_ltl("!(G (a -> F b) <-> X !(c U d))").unwrap();
        assert!(ok(&f.nnf()));
    }

    #[test]
    fn errors() {
        assert!(parse_ltl("G (a").is_err());
        assert!(parse_ltl("a ==").unwrap_err().message.contains("value label"));
        assert!(parse_ltl("a b").is_err());
    }
}
