//! A small expression language for problem files.
//!
//! ```
//! let e = peaks_expr::parse("y^2 - x1^2 + p*x1", &["x1", "y", "p"]).unwrap();
//! assert_eq!(e.eval(&[1.0, 0.5, 30.0]).unwrap(), 29.25);
//! ```
//!
//! Grammar: `+ -` < `* /` < unary `-` < `^` (right associative), calls
//! `exp ln abs min max floor sqrt`, and `piecewise(cond: e, ..., else: e)` where conditions
//! compare expressions and combine with `&&`, `||`. There is no implicit multiplication.

mod ast;
mod eval;
mod lexer;
mod parser;

use std::collections::HashMap;
use std::fmt;

pub use ast::{BinOp, CmpOp, Cond, Func, Node};
pub use eval::EvalError;
pub use parser::ParseError;

/// A parsed expression over an ordered list of declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    vars: Vec<String>,
    source: String,
}

/// Every variable in `declared` may appear; anything else is rejected.
pub fn parse(text: &str, declared: &[&str]) -> Result<Expression, ParseError> {
    let root = parser::parse(text, declared)?;
    Ok(Expression { root, vars: declared.iter().map(|s| s.to_string()).collect(), source: text.to_string() })
}

impl Expression {
    /// Builds an expression from a tree, e.g. one assembled programmatically.
    pub fn from_node(root: Node, vars: Vec<String>) -> Self {
        let source = ast::display_node(&root, &vars);
        Self { root, vars, source }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Declared variables that actually occur.
    pub fn free_vars(&self) -> Vec<&str> {
        let mut used = vec![false; self.vars.len()];
        self.root.visit_vars(&mut |i| used[i] = true);
        self.vars.iter().zip(used).filter(|(_, u)| *u).map(|(v, _)| v.as_str()).collect()
    }

    /// Values in declaration order.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        if values.len() < self.vars.len() {
            let missing = &self.vars[values.len()];
            return Err(EvalError::Unbound { name: missing.clone() });
        }
        eval::eval(&self.root, values)
    }

    /// Values by name. Only variables that occur need a binding.
    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let mut values = vec![f64::NAN; self.vars.len()];
        for v in self.free_vars() {
            let i = self.vars.iter().position(|n| n == v).expect("free vars are declared");
            values[i] = *bindings.get(v).ok_or_else(|| EvalError::Unbound { name: v.to_string() })?;
        }
        eval::eval(&self.root, &values)
    }
}

/// Fully parenthesized; parsing the output gives back the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&ast::display_node(&self.root, &self.vars))
    }
}
