use thiserror::Error;

use crate::ast::{BinOp, CmpOp, Cond, Func, Node};
use crate::lexer::{lex, Tok, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("undeclared variable '{name}' at offset {offset}")]
    Undeclared { name: String, offset: usize },
    #[error("unknown function '{name}' at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("'{name}' at offset {offset} takes {expected}")]
    Arity { name: String, offset: usize, expected: &'static str },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::Undeclared { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. } => *offset,
        }
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

type PResult<T> = Result<T, ParseError>;

pub(crate) fn parse(text: &str, vars: &[&str]) -> PResult<Node> {
    let mut p = Parser { toks: lex(text)?, pos: 0, vars };
    let node = p.expr()?;
    match p.peek() {
        Tok::End => Ok(node),
        _ => Err(p.unexpected("end of input")),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Op(o) => format!("'{o}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Colon => "':'".into(),
        Tok::End => "end of input".into(),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {wanted}, found {}", describe(self.peek())),
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Tok::Op(o) if *o == op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expr(&mut self) -> PResult<Node> {
        let mut lhs = self.term()?;
        loop {
            let offset = self.offset();
            let op = if self.eat_op("+") {
                BinOp::Add
            } else if self.eat_op("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), offset };
        }
    }

    fn term(&mut self) -> PResult<Node> {
        let mut lhs = self.unary()?;
        loop {
            let offset = self.offset();
            let op = if self.eat_op("*") {
                BinOp::Mul
            } else if self.eat_op("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), offset };
        }
    }

    fn unary(&mut self) -> PResult<Node> {
        let offset = self.offset();
        if self.eat_op("-") {
            let arg = self.unary()?;
            return Ok(Node::Neg { arg: Box::new(arg), offset });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Node> {
        let base = self.primary()?;
        let offset = self.offset();
        if self.eat_op("^") {
            let exp = self.unary()?;
            return Ok(Node::Bin { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp), offset });
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Node> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    if name == "piecewise" {
                        return self.piecewise(offset);
                    }
                    return self.call(&name, offset);
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Node::Var(i)),
                    None => Err(ParseError::Undeclared { name, offset }),
                }
            }
            _ => Err(self.unexpected("a number, variable, call or '('")),
        }
    }

    fn call(&mut self, name: &str, offset: usize) -> PResult<Node> {
        let func = Func::lookup(name).ok_or_else(|| ParseError::UnknownFunction { name: name.to_string(), offset })?;
        let mut args = vec![];
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "',' or ')'")?;
        let ok = if func.variadic() { !args.is_empty() } else { args.len() == 1 };
        if !ok {
            let expected = if func.variadic() { "one or more arguments" } else { "exactly one argument" };
            return Err(ParseError::Arity { name: name.to_string(), offset, expected });
        }
        Ok(Node::Call { func, args, offset })
    }

    fn piecewise(&mut self, offset: usize) -> PResult<Node> {
        let mut branches = vec![];
        let mut otherwise = None;
        loop {
            if matches!(self.peek(), Tok::Ident(s) if s == "else") {
                self.bump();
                self.expect(Tok::Colon, "':' after else")?;
                otherwise = Some(Box::new(self.expr()?));
                self.expect(Tok::RParen, "')' after the else branch")?;
                break;
            }
            let c = self.cond()?;
            self.expect(Tok::Colon, "':' after a condition")?;
            let e = self.expr()?;
            branches.push((c, e));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    break;
                }
                _ => return Err(self.unexpected("',' or ')'")),
            }
        }
        if branches.is_empty() && otherwise.is_none() {
            return Err(ParseError::Syntax { offset, message: "piecewise needs at least one branch".into() });
        }
        Ok(Node::Piecewise { branches, otherwise, offset })
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_and()?;
        while self.eat_op("||") {
            let rhs = self.cond_and()?;
            lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_atom()?;
        while self.eat_op("&&") {
            let rhs = self.cond_atom()?;
            lhs = Cond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // A '(' may open a grouped condition or an expression on the left of a comparison.
    fn cond_atom(&mut self) -> PResult<Cond> {
        if *self.peek() == Tok::LParen {
            let save = self.pos;
            self.bump();
            if let Ok(c) = self.cond() {
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(c);
                }
            }
            self.pos = save;
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            _ => return Err(self.unexpected("a comparison")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cond::Cmp { op, lhs, rhs })
    }
}
