use thiserror::Error;

use crate::ast::{BinOp, Cond, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ln of nonpositive value {value} at offset {offset}")]
    LnDomain { value: f64, offset: usize },
    #[error("division by zero at offset {offset}")]
    DivisionByZero { offset: usize },
    #[error("sqrt of negative value {value} at offset {offset}")]
    SqrtDomain { value: f64, offset: usize },
    #[error("{base}^{exponent} is undefined (offset {offset})")]
    PowDomain { base: f64, exponent: f64, offset: usize },
    #[error("no piecewise branch matched at offset {offset}")]
    NoBranch { offset: usize },
    #[error("variable '{name}' is unbound")]
    Unbound { name: String },
}

pub(crate) fn eval(node: &Node, vals: &[f64]) -> Result<f64, EvalError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Var(i) => vals[*i],
        Node::Neg { arg, .. } => -eval(arg, vals)?,
        Node::Bin { op, lhs, rhs, offset } => {
            let (a, b) = (eval(lhs, vals)?, eval(rhs, vals)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero { offset: *offset });
                    }
                    a / b
                }
                BinOp::Pow => {
                    let v = a.powf(b);
                    if v.is_nan() && !a.is_nan() && !b.is_nan() {
                        return Err(EvalError::PowDomain { base: a, exponent: b, offset: *offset });
                    }
                    v
                }
            }
        }
        Node::Call { func, args, offset } => {
            let first = eval(&args[0], vals)?;
            match func {
                Func::Exp => first.exp(),
                Func::Ln => {
                    if first.is_nan() || first <= 0.0 {
                        return Err(EvalError::LnDomain { value: first, offset: *offset });
                    }
                    first.ln()
                }
                Func::Abs => first.abs(),
                Func::Floor => first.floor(),
                Func::Sqrt => {
                    if first < 0.0 {
                        return Err(EvalError::SqrtDomain { value: first, offset: *offset });
                    }
                    first.sqrt()
                }
                Func::Min | Func::Max => {
                    let mut acc = first;
                    for a in &args[1..] {
                        let v = eval(a, vals)?;
                        acc = if *func == Func::Min { acc.min(v) } else { acc.max(v) };
                    }
                    acc
                }
            }
        }
        Node::Piecewise { branches, otherwise, offset } => {
            for (c, e) in branches {
                if holds(c, vals)? {
                    return eval(e, vals);
                }
            }
            match otherwise {
                Some(o) => eval(o, vals)?,
                None => return Err(EvalError::NoBranch { offset: *offset }),
            }
        }
    })
}

fn holds(c: &Cond, vals: &[f64]) -> Result<bool, EvalError> {
    Ok(match c {
        Cond::Cmp { op, lhs, rhs } => op.holds(eval(lhs, vals)?, eval(rhs, vals)?),
        Cond::And(a, b) => holds(a, vals)? && holds(b, vals)?,
        Cond::Or(a, b) => holds(a, vals)? || holds(b, vals)?,
    })
}
