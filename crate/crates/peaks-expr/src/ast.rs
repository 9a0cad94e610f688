use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Abs,
    Min,
    Max,
    Floor,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Floor => "floor",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "floor" => Func::Floor,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    /// min and max take one or more arguments, everything else exactly one.
    pub fn variadic(self) -> bool {
        matches!(self, Func::Min | Func::Max)
    }
}

/// Tree nodes. `offset` is the byte offset of the node's first token in the source.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg { arg: Box<Node>, offset: usize },
    Bin { op: BinOp, lhs: Box<Node>, rhs: Box<Node>, offset: usize },
    Call { func: Func, args: Vec<Node>, offset: usize },
    Piecewise { branches: Vec<(Cond, Node)>, otherwise: Option<Box<Node>>, offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp { op: CmpOp, lhs: Node, rhs: Node },
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

// Structural equality without offsets, which differ between a source and its printout.
impl Node {
    pub fn same_shape(&self, other: &Node) -> bool {
        match (self, other) {
            (Node::Num(a), Node::Num(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg { arg: a, .. }, Node::Neg { arg: b, .. }) => a.same_shape(b),
            (Node::Bin { op: o1, lhs: l1, rhs: r1, .. }, Node::Bin { op: o2, lhs: l2, rhs: r2, .. }) => {
                o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2)
            }
            (Node::Call { func: f1, args: a1, .. }, Node::Call { func: f2, args: a2, .. }) => {
                f1 == f2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.same_shape(y))
            }
            (
                Node::Piecewise { branches: b1, otherwise: o1, .. },
                Node::Piecewise { branches: b2, otherwise: o2, .. },
            ) => {
                b1.len() == b2.len()
                    && b1.iter().zip(b2).all(|((c1, e1), (c2, e2))| c1.same_shape(c2) && e1.same_shape(e2))
                    && match (o1, o2) {
                        (Some(x), Some(y)) => x.same_shape(y),
                        (None, None) => true,
                        _ => false,
                    }
            }
            _ => false,
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match self {
            Node::Num(_) | Node::Var(_) => None,
            Node::Neg { offset, .. }
            | Node::Bin { offset, .. }
            | Node::Call { offset, .. }
            | Node::Piecewise { offset, .. } => Some(*offset),
        }
    }

    pub(crate) fn visit_vars(&self, f: &mut dyn FnMut(usize)) {
        match self {
            Node::Num(_) => {}
            Node::Var(i) => f(*i),
            Node::Neg { arg, .. } => arg.visit_vars(f),
            Node::Bin { lhs, rhs, .. } => {
                lhs.visit_vars(f);
                rhs.visit_vars(f);
            }
            Node::Call { args, .. } => args.iter().for_each(|a| a.visit_vars(f)),
            Node::Piecewise { branches, otherwise, .. } => {
                for (c, e) in branches {
                    c.visit_vars(f);
                    e.visit_vars(f);
                }
                if let Some(o) = otherwise {
                    o.visit_vars(f);
                }
            }
        }
    }
}

impl Cond {
    pub fn same_shape(&self, other: &Cond) -> bool {
        match (self, other) {
            (Cond::Cmp { op: o1, lhs: l1, rhs: r1 }, Cond::Cmp { op: o2, lhs: l2, rhs: r2 }) => {
                o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2)
            }
            (Cond::And(a1, b1), Cond::And(a2, b2)) | (Cond::Or(a1, b1), Cond::Or(a2, b2)) => {
                a1.same_shape(a2) && b1.same_shape(b2)
            }
            _ => false,
        }
    }

    fn visit_vars(&self, f: &mut dyn FnMut(usize)) {
        match self {
            Cond::Cmp { lhs, rhs, .. } => {
                lhs.visit_vars(f);
                rhs.visit_vars(f);
            }
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }
}

pub(crate) fn display_node(node: &Node, vars: &[String]) -> String {
    let mut out = String::new();
    write_node(&mut out, node, vars);
    out
}

fn write_node(out: &mut String, node: &Node, vars: &[String]) {
    match node {
        // {:?} is the shortest text that reads back to the same f64.
        Node::Num(v) => write!(out, "{v:?}").unwrap(),
        Node::Var(i) => out.push_str(&vars[*i]),
        Node::Neg { arg, .. } => {
            out.push_str("(-");
            write_node(out, arg, vars);
            out.push(')');
        }
        Node::Bin { op, lhs, rhs, .. } => {
            out.push('(');
            write_node(out, lhs, vars);
            write!(out, " {} ", op.symbol()).unwrap();
            write_node(out, rhs, vars);
            out.push(')');
        }
        Node::Call { func, args, .. } => {
            out.push_str(func.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_node(out, a, vars);
            }
            out.push(')');
        }
        Node::Piecewise { branches, otherwise, .. } => {
            out.push_str("piecewise(");
            for (i, (c, e)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_cond(out, c, vars);
                out.push_str(": ");
                write_node(out, e, vars);
            }
            if let Some(o) = otherwise {
                out.push_str(", else: ");
                write_node(out, o, vars);
            }
            out.push(')');
        }
    }
}

fn write_cond(out: &mut String, cond: &Cond, vars: &[String]) {
    match cond {
        Cond::Cmp { op, lhs, rhs } => {
            write_node(out, lhs, vars);
            write!(out, " {} ", op.symbol()).unwrap();
            write_node(out, rhs, vars);
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            let sym = if matches!(cond, Cond::And(..)) { "&&" } else { "||" };
            out.push('(');
            write_cond(out, a, vars);
            write!(out, " {sym} ").unwrap();
            write_cond(out, b, vars);
            out.push(')');
        }
    }
}
