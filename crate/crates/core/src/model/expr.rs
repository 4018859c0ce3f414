//! Boolean constraints over symbolic process-variable values.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

/// Expression tree over `var == value` / `var != value` atoms.
///
/// `And` and `Or` are n-ary and always hold at least two operands when built
/// by the parser; a nested operand of the same connective only appears when the
/// source text parenthesised it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoolExpr {
    Const(bool),
    Eq(String, String),
    Ne(String, String),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound in the valuation")]
    Unbound(String),
}

/// Read access to a total assignment of variables to value labels.
pub trait Valuation {
    fn value_of(&self, var: &str) -> Option<&str>;
}

impl Valuation for BTreeMap<String, String> {
    fn value_of(&self, var: &str) -> Option<&str> {
        self.get(var).map(String::as_str)
    }
}

impl Valuation for HashMap<String, String> {
    fn value_of(&self, var: &str) -> Option<&str> {
        self.get(var).map(String::as_str)
    }
}

impl Valuation for [(String, String)] {
    fn value_of(&self, var: &str) -> Option<&str> {
        self.iter().find(|(k, _)| k == var).map(|(_, v)| v.as_str())
    }
}

impl Valuation for Vec<(String, String)> {
    fn value_of(&self, var: &str) -> Option<&str> {
        self.as_slice().value_of(var)
    }
}

impl BoolExpr {
    pub fn eq(var: impl Into<String>, value: impl Into<String>) -> Self {
        BoolExpr::Eq(var.into(), value.into())
    }

    pub fn ne(var: impl Into<String>, value: impl Into<String>) -> Self {
        BoolExpr::Ne(var.into(), value.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(inner))
    }

    /// Conjunction that collapses the degenerate cases (empty → true, single operand).
    pub fn all(mut parts: Vec<BoolExpr>) -> Self {
        match parts.len() {
            0 => BoolExpr::Const(true),
            1 => parts.pop().unwrap(),
            _ => BoolExpr::And(parts),
        }
    }

    /// Disjunction that collapses the degenerate cases (empty → false, single operand).
    pub fn any(mut parts: Vec<BoolExpr>) -> Self {
        match parts.len() {
            0 => BoolExpr::Const(false),
            1 => parts.pop().unwrap(),
            _ => BoolExpr::Or(parts),
        }
    }

    pub fn eval<V: Valuation + ?Sized>(&self, valuation: &V) -> Result<bool, EvalError> {
        Ok(match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Eq(var, value) => lookup(valuation, var)? == value,
            BoolExpr::Ne(var, value) => lookup(valuation, var)? != value,
            BoolExpr::Not(inner) => !inner.eval(valuation)?,
            BoolExpr::And(parts) => {
                // evaluate every operand so unbound variables surface regardless of order
                let mut acc = true;
                for p in parts {
                    acc &= p.eval(valuation)?;
                }
                acc
            }
            BoolExpr::Or(parts) => {
                let mut acc = false;
                for p in parts {
                    acc |= p.eval(valuation)?;
                }
                acc
            }
        })
    }

    /// Every `(variable, value)` pair mentioned by an atom, in first-occurrence order.
    pub fn atoms(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Eq(v, l) | BoolExpr::Ne(v, l) => {
                if !out.iter().any(|(a, b)| *a == v && *b == l) {
                    out.push((v, l));
                }
            }
            BoolExpr::Not(inner) => inner.collect_atoms(out),
            BoolExpr::And(parts) | BoolExpr::Or(parts) => {
                parts.iter().for_each(|p| p.collect_atoms(out))
            }
        }
    }

    /// Variables referenced by the expression, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        let mut vars: Vec<&str> = Vec::new();
        for (v, _) in self.atoms() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        vars
    }

    fn precedence(&self) -> u8 {
        match self {
            BoolExpr::Or(_) => 1,
            BoolExpr::And(_) => 2,
            _ => 3,
        }
    }
}

fn lookup<'v, V: Valuation + ?Sized>(valuation: &'v V, var: &str) -> Result<&'v str, EvalError> {
    valuation
        .value_of(var)
        .ok_or_else(|| EvalError::Unbound(var.to_string()))
}

/// Convenience wrapper mirroring the free-function form used across the pipeline.
pub fn eval_bool<V: Valuation + ?Sized>(expr: &BoolExpr, valuation: &V) -> Result<bool, EvalError> {
    expr.eval(valuation)
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::Const(true) => f.write_str("true"),
            BoolExpr::Const(false) => f.write_str("false"),
            BoolExpr::Eq(v, l) => write!(f, "{v} == {l}"),
            BoolExpr::Ne(v, l) => write!(f, "{v} != {l}"),
            BoolExpr::Not(inner) => {
                if inner.precedence() < 3 || matches!(**inner, BoolExpr::Eq(..) | BoolExpr::Ne(..)) {
                    write!(f, "!({inner})")
                } else {
                    write!(f, "!{inner}")
                }
            }
            BoolExpr::And(parts) => write_joined(f, parts, " && ", 2),
            BoolExpr::Or(parts) => write_joined(f, parts, " || ", 1),
        }
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, parts: &[BoolExpr], sep: &str, level: u8) -> fmt::Result {
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        // same-level operands are parenthesised so nesting survives a re-parse
        if p.precedence() <= level {
            write!(f, "({p})")?;
        } else {
            write!(f, "{p}")?;
        }
    }
    Ok(())
}
