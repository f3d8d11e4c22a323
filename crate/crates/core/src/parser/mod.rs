//! Text syntax for symbols and operator expressions.
//!
//! ```text
//! expr    := ['+'|'-'] product (('+'|'-') product)*
//! product := power (('*'|'/') power)*
//! power   := atom ['^' k]
//! atom    := rational | '(' expr ')' | ('int'|'qint') '[' [vars] ']' '(' expr ')'
//!          | phi(v) | pi(v) | name(v) | D(name, k)(v)
//!          | delta(v - w [; k]) | delta(v [; k]) | delta0(k) | deltasq | vol
//!          | h | i | m
//! ```
//!
//! Multi-indices are written `k` in one dimension and `(k1,...,kn)` otherwise.
//! Inside `qint` the written order of `Phi`/`Pi` (or `phi`/`pi`) factors is
//! operator order.

mod format;
mod json;
mod lexer;

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::quantum::{OpTerm, OperatorExpression};
use crate::scalar::Rational;
use crate::term::{
    free_index, DivergentConstant, Factor, Field, Formal, MultiIndex, Symbol, Term, Var,
};
use lexer::{tokenize, Tok, Token};

pub use format::{format_operator, format_scalar, format_symbol, format_term};
pub use json::{operator_json, symbol_json, JsonFactor, JsonTerm};

pub const DEFAULT_FUNCTIONS: [&str; 3] = ["f", "g", "j"];

/// Session settings: spatial dimension and declared coefficient functions.
#[derive(Clone, Debug)]
pub struct Context {
    pub dim: usize,
    functions: BTreeSet<String>,
}

impl Default for Context {
    fn default() -> Self {
        Context::new(1, &DEFAULT_FUNCTIONS)
    }
}

impl Context {
    pub fn new(dim: usize, functions: &[&str]) -> Self {
        Context {
            dim,
            functions: functions.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn declare(&mut self, name: &str) {
        self.functions.insert(name.to_string());
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.functions.contains(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &str> {
        self.functions.iter().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Parsed {
    Symbol(Symbol),
    Operator(OperatorExpression),
}

/// Parses either syntax; `qint` anywhere makes the result an operator expression.
pub fn parse(src: &str, ctx: &Context) -> Result<Parsed> {
    let mut p = Parser::new(src, ctx)?;
    let raw = p.expr()?;
    p.expect_end()?;
    if p.quantum {
        Ok(Parsed::Operator(to_operator(raw)))
    } else {
        Ok(Parsed::Symbol(to_symbol(raw)))
    }
}

pub fn parse_symbol(src: &str, ctx: &Context) -> Result<Symbol> {
    match parse(src, ctx)? {
        Parsed::Symbol(s) => Ok(s),
        Parsed::Operator(_) => Err(Error::WrongMode {
            expected: "classical (int)",
        }),
    }
}

/// Parses an operator expression; classical `int` input is read in written order.
pub fn parse_operator(src: &str, ctx: &Context) -> Result<OperatorExpression> {
    let mut p = Parser::new(src, ctx)?;
    let raw = p.expr()?;
    p.expect_end()?;
    Ok(to_operator(raw))
}

/// Term under construction; bound variables carry parser-global ids.
#[derive(Clone, Debug)]
struct Raw {
    coeff: Rational,
    formal: Formal,
    bound: Vec<u16>,
    factors: Vec<Factor>,
}

impl Raw {
    fn scalar(c: Rational) -> Raw {
        Raw {
            coeff: c,
            formal: Formal::default(),
            bound: Vec::new(),
            factors: Vec::new(),
        }
    }

    fn factor(f: Factor) -> Raw {
        Raw {
            factors: vec![f],
            ..Raw::scalar(Rational::one())
        }
    }

    fn formal(f: Formal) -> Raw {
        Raw {
            formal: f,
            ..Raw::scalar(Rational::one())
        }
    }

    fn is_constant(&self) -> bool {
        self.bound.is_empty() && self.factors.is_empty() && self.formal.is_trivial()
    }

    /// Renumbers bound ids to `0..n` in order of binding.
    fn finish(self) -> (Rational, Formal, u16, Vec<Factor>) {
        let map = |v: Var| match v {
            Var::Dummy(uid) => {
                Var::Dummy(self.bound.iter().position(|&b| b == uid).expect("bound id") as u16)
            }
            v => v,
        };
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let mut g = f.clone();
                g.map_vars(map);
                g
            })
            .collect();
        (self.coeff, self.formal, self.bound.len() as u16, factors)
    }
}

fn to_symbol(raw: Vec<Raw>) -> Symbol {
    let terms = raw
        .into_iter()
        .map(|r| {
            let (coeff, formal, dummies, factors) = r.finish();
            Term {
                coeff,
                formal,
                dummies,
                factors,
            }
        })
        .collect();
    Symbol::from_terms(terms).tidy()
}

fn to_operator(raw: Vec<Raw>) -> OperatorExpression {
    let terms = raw
        .into_iter()
        .map(|r| {
            let (coeff, formal, dummies, factors) = r.finish();
            OpTerm::from_ordered(coeff, formal, dummies, factors)
        })
        .collect();
    OperatorExpression::from_terms(terms).tidy()
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    ctx: &'a Context,
    scopes: Vec<(String, u16)>,
    next_uid: u16,
    quantum: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &str, ctx: &'a Context) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            ctx,
            scopes: Vec::new(),
            next_uid: 0,
            quantum: false,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}", what))
        }
    }

    fn expect_end(&self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.error("unexpected trailing input")
        }
    }

    fn fresh_uid(&mut self) -> u16 {
        let u = self.next_uid;
        self.next_uid += 1;
        u
    }

    fn expr(&mut self) -> Result<Vec<Raw>> {
        let mut negate = false;
        match self.peek() {
            Tok::Minus => {
                self.bump();
                negate = true;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        let mut acc = self.product()?;
        if negate {
            negate_all(&mut acc);
        }
        loop {
            let neg = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => break,
            };
            self.bump();
            let mut rhs = self.product()?;
            if neg {
                negate_all(&mut rhs);
            }
            acc.extend(rhs);
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Vec<Raw>> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.power()?;
                    acc = self.mul(&acc, &rhs);
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.power()?;
                    let c = constant_value(&rhs);
                    match c {
                        Some(c) if !c.is_zero() => {
                            for r in &mut acc {
                                r.coeff = &r.coeff / &c;
                            }
                        }
                        Some(_) => return self.error("division by zero"),
                        None => return self.error("divisor must be a nonzero rational constant"),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    /// Distributive product; bound ids of the right factor are refreshed if shared.
    fn mul(&mut self, a: &[Raw], b: &[Raw]) -> Vec<Raw> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                let mut y = y.clone();
                if y.bound.iter().any(|u| x.bound.contains(u)) {
                    let old = y.bound.clone();
                    let new: Vec<u16> = old.iter().map(|_| self.fresh_uid()).collect();
                    for f in &mut y.factors {
                        f.map_vars(|v| match v {
                            Var::Dummy(u) => match old.iter().position(|&o| o == u) {
                                Some(k) => Var::Dummy(new[k]),
                                None => v,
                            },
                            v => v,
                        });
                    }
                    y.bound = new;
                }
                let (formal, flip) = x.formal.mul(&y.formal);
                let mut coeff = &x.coeff * &y.coeff;
                if flip {
                    coeff = -coeff;
                }
                let mut bound = x.bound.clone();
                bound.extend(y.bound.iter().copied());
                let mut factors = x.factors.clone();
                factors.extend(y.factors.iter().cloned());
                out.push(Raw {
                    coeff,
                    formal,
                    bound,
                    factors,
                });
            }
        }
        out
    }

    fn power(&mut self) -> Result<Vec<Raw>> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let n = match self.bump() {
            Tok::Num(n) => n,
            _ => return self.error("expected a non-negative integer exponent"),
        };
        let n: u32 = match u32::try_from(n) {
            Ok(n) if n <= 64 => n,
            _ => return self.error("exponent too large"),
        };
        let mut acc = vec![Raw::scalar(Rational::one())];
        for _ in 0..n {
            acc = self.mul(&acc, &base);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Vec<Raw>> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(vec![Raw::scalar(Rational::from_integer(n))])
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.named_atom(&name),
            Tok::End => self.error("unexpected end of input"),
            _ => self.error("expected a term"),
        }
    }

    fn named_atom(&mut self, name: &str) -> Result<Vec<Raw>> {
        let (line, column) = self.here();
        match name {
            "int" | "qint" => {
                self.bump();
                if name == "qint" {
                    self.quantum = true;
                }
                self.integral()
            }
            "h" | "i" | "m" | "deltasq" | "vol" if *self.peek_at(1) != Tok::LParen => {
                self.bump();
                let mut f = Formal::default();
                match name {
                    "h" => f.h = 1,
                    "i" => f.i = true,
                    "m" => f.mass = 1,
                    "deltasq" => f.divergent.push(DivergentConstant::DeltaSquared),
                    _ => f.divergent.push(DivergentConstant::Volume),
                }
                Ok(vec![Raw::formal(f)])
            }
            "delta0" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let k = self.multi_index()?;
                self.expect(Tok::RParen, "`)`")?;
                let f = Formal {
                    divergent: vec![DivergentConstant::DeltaAtZero(k)],
                    ..Formal::default()
                };
                Ok(vec![Raw::formal(f)])
            }
            "delta" => {
                self.bump();
                self.delta()
            }
            "D" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let (line, column) = self.here();
                let target = match self.bump() {
                    Tok::Ident(n) => n,
                    _ => return self.error("expected a field or function name"),
                };
                self.expect(Tok::Comma, "`,`")?;
                let k = self.multi_index()?;
                self.expect(Tok::RParen, "`)`")?;
                self.applied(&target, k, line, column)
            }
            _ if *self.peek_at(1) == Tok::LParen => {
                self.bump();
                let zero = MultiIndex::zero(self.ctx.dim);
                self.applied(name, zero, line, column)
            }
            _ => self.error(format!("unexpected identifier `{}`", name)),
        }
    }

    /// `name(v)` with derivative `k` already parsed.
    fn applied(
        &mut self,
        name: &str,
        k: MultiIndex,
        line: usize,
        column: usize,
    ) -> Result<Vec<Raw>> {
        let field = match name {
            "phi" | "Phi" => Some(Field::Phi),
            "pi" | "Pi" => Some(Field::Pi),
            _ => None,
        };
        if field.is_none() && !self.ctx.is_declared(name) {
            return Err(Error::UndeclaredFunction {
                name: name.to_string(),
                line,
                column,
            });
        }
        self.expect(Tok::LParen, "`(`")?;
        let v = self.var()?;
        self.expect(Tok::RParen, "`)`")?;
        let f = match field {
            Some(field) => Factor::field(field, k, v),
            None => Factor::func(name, k, v),
        };
        Ok(vec![Raw::factor(f)])
    }

    fn delta(&mut self) -> Result<Vec<Raw>> {
        self.expect(Tok::LParen, "`(`")?;
        let left = self.var()?;
        let right = if *self.peek() == Tok::Minus {
            self.bump();
            self.var()?
        } else {
            Var::Origin
        };
        let k = if *self.peek() == Tok::Semi {
            self.bump();
            self.multi_index()?
        } else {
            MultiIndex::zero(self.ctx.dim)
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(vec![Raw::factor(Factor::delta(k, left, right))])
    }

    fn integral(&mut self) -> Result<Vec<Raw>> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut names = Vec::new();
        if *self.peek() == Tok::RBracket {
            self.bump();
        } else {
            loop {
                match self.bump() {
                    Tok::Ident(n) => names.push(n),
                    _ => return self.error("expected an integration variable"),
                }
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RBracket => break,
                    _ => return self.error("expected `,` or `]`"),
                }
            }
        }
        let depth = self.scopes.len();
        let mut uids = Vec::with_capacity(names.len());
        for n in names {
            let u = self.fresh_uid();
            uids.push(u);
            self.scopes.push((n, u));
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut body = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        self.scopes.truncate(depth);
        for r in &mut body {
            r.bound.extend(uids.iter().copied());
        }
        Ok(body)
    }

    fn var(&mut self) -> Result<Var> {
        match self.peek().clone() {
            Tok::Num(n) if n.is_zero() => {
                self.bump();
                Ok(Var::Origin)
            }
            Tok::Ident(name) => {
                if let Some((_, u)) = self.scopes.iter().rev().find(|(n, _)| *n == name) {
                    let u = *u;
                    self.bump();
                    return Ok(Var::Dummy(u));
                }
                match free_index(&name) {
                    Some(i) => {
                        self.bump();
                        Ok(Var::Free(i))
                    }
                    None => self.error(format!("unknown variable `{}`", name)),
                }
            }
            _ => self.error("expected a variable"),
        }
    }

    fn small_int(&mut self) -> Result<u8> {
        match self.bump() {
            Tok::Num(n) => match u8::try_from(n) {
                Ok(k) => Ok(k),
                Err(_) => self.error("derivative order too large"),
            },
            _ => self.error("expected a derivative order"),
        }
    }

    fn multi_index(&mut self) -> Result<MultiIndex> {
        let (line, column) = self.here();
        let entries = if *self.peek() == Tok::LParen {
            self.bump();
            let mut e = vec![self.small_int()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                e.push(self.small_int()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            e
        } else {
            vec![self.small_int()?]
        };
        if entries.len() != self.ctx.dim {
            return Err(Error::DimensionMismatch {
                expected: self.ctx.dim,
                found: entries.len(),
                line,
                column,
            });
        }
        Ok(MultiIndex::from_slice(&entries))
    }
}

fn negate_all(rs: &mut [Raw]) {
    for r in rs {
        r.coeff = -r.coeff.clone();
    }
}

fn constant_value(rs: &[Raw]) -> Option<Rational> {
    let mut acc = Rational::zero();
    for r in rs {
        if !r.is_constant() {
            return None;
        }
        acc += &r.coeff;
    }
    Some(acc)
}

#[cfg(test)]
mod tests;
