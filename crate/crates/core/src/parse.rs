//! Text grammar for coefficient functions.
//!
//! ```text
//! expr     := ['+'|'-'] term (('+'|'-') term)*
//! term     := factor ('*' factor)*
//! factor   := primary ('^' uint)*
//! primary  := rational | var | '(' expr ')'
//! rational := uint ('/' uint)?
//! var      := 'xi' uint | 'x' uint
//! ```
//!
//! Whitespace is ignored everywhere and variables are 1-indexed.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::series::{ChartSpec, FiberSeries, Rational, Var};

/// Result of parsing, with a flag recording whether any term above the
/// chart's truncation order was dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parsed {
    pub series: FiberSeries,
    pub truncated: bool,
}

/// Parse `text` into a series with `valid_order = chart.trunc_order`.
pub fn parse_series(text: &str, chart: ChartSpec) -> Result<FiberSeries> {
    parse_series_flagged(text, chart).map(|p| p.series)
}

pub fn parse_series_flagged(text: &str, chart: ChartSpec) -> Result<Parsed> {
    let chars: Vec<(usize, char)> = text.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
    let mut p = Parser { chars: &chars, pos: 0, end: text.len(), chart };
    let ast = p.expr()?;
    if p.pos < chars.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    let n = chart.trunc_order;
    let bound = ast.fiber_bound();
    let eval_order = bound.clamp(n as u64, n as u64 + 32) as u32;
    let wide = chart.with_order(eval_order);
    let value = ast.eval(wide);
    let dropped_here = value.max_fiber_degree().is_some_and(|d| d > n);
    let truncated = dropped_here || bound > eval_order as u64;
    let series = FiberSeries::from_terms(chart, chart.order(), value.terms().clone());
    Ok(Parsed { series, truncated })
}

enum Ast {
    Num(Rational),
    Var(Var),
    Neg(Box<Ast>),
    Sum(Vec<(bool, Ast)>),
    Prod(Vec<Ast>),
    Pow(Box<Ast>, u32),
}

impl Ast {
    /// Upper bound on the fiber degree this expression can produce.
    fn fiber_bound(&self) -> u64 {
        match self {
            Ast::Num(_) => 0,
            Ast::Var(Var::Base(_)) => 0,
            Ast::Var(Var::Fiber(_)) => 1,
            Ast::Neg(a) => a.fiber_bound(),
            Ast::Sum(ts) => ts.iter().map(|(_, t)| t.fiber_bound()).max().unwrap_or(0),
            Ast::Prod(fs) => fs.iter().map(|f| f.fiber_bound()).fold(0u64, u64::saturating_add),
            Ast::Pow(a, e) => a.fiber_bound().saturating_mul(*e as u64),
        }
    }

    fn eval(&self, chart: ChartSpec) -> FiberSeries {
        match self {
            Ast::Num(c) => FiberSeries::constant(chart, c.clone()),
            Ast::Var(v) => FiberSeries::var(chart, *v),
            Ast::Neg(a) => -a.eval(chart),
            Ast::Sum(ts) => {
                let mut acc = FiberSeries::zero(chart);
                for (neg, t) in ts {
                    let v = t.eval(chart);
                    acc = if *neg { &acc - &v } else { &acc + &v };
                }
                acc
            }
            Ast::Prod(fs) => {
                let mut acc = FiberSeries::one(chart);
                for f in fs {
                    acc = &acc * &f.eval(chart);
                }
                acc
            }
            Ast::Pow(a, e) => a.eval(chart).pow(*e),
        }
    }
}

struct Parser<'a> {
    chars: &'a [(usize, char)],
    pos: usize,
    end: usize,
    chart: ChartSpec,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map(|&(o, _)| o).unwrap_or(self.end)
    }

    fn syntax(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.offset(), msg: msg.to_string() }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut terms = Vec::new();
        let mut neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        loop {
            terms.push((neg, self.term()?));
            if self.eat('+') {
                neg = false;
            } else if self.eat('-') {
                neg = true;
            } else {
                break;
            }
        }
        Ok(Ast::Sum(terms))
    }

    fn term(&mut self) -> Result<Ast> {
        let mut factors = vec![self.factor()?];
        while self.eat('*') {
            factors.push(self.factor()?);
        }
        Ok(Ast::Prod(factors))
    }

    fn factor(&mut self) -> Result<Ast> {
        let mut base = self.primary()?;
        while self.eat('^') {
            let e = self.uint()?;
            let e = e.to_u32().filter(|&e| e <= 10_000).ok_or_else(|| self.syntax("exponent too large"))?;
            base = Ast::Pow(Box::new(base), e);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some('-') => {
                self.pos += 1;
                Ok(Ast::Neg(Box::new(self.factor()?)))
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.uint()?;
                let den = if self.eat('/') { self.uint()? } else { BigInt::from(1) };
                if den.is_zero() {
                    return Err(self.syntax("zero denominator"));
                }
                Ok(Ast::Num(Rational::new(num, den)))
            }
            Some(c) if c.is_alphabetic() => self.var(),
            Some(_) => Err(self.syntax("expected a number, variable or `(`")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn uint(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected an unsigned integer"));
        }
        let s: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        Ok(s.parse().expect("digits parse as integer"))
    }

    fn var(&mut self) -> Result<Ast> {
        let at = self.offset();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_alphabetic()) {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        let dstart = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[dstart..self.pos].iter().map(|&(_, c)| c).collect();
        let full = format!("{name}{digits}");
        let unknown = || Error::UnknownVariable { pos: at, name: full.clone() };
        let k: usize = digits.parse().map_err(|_| unknown())?;
        if k == 0 {
            return Err(unknown());
        }
        match name.as_str() {
            "xi" if k <= self.chart.base_dim => Ok(Ast::Var(Var::Base(k - 1))),
            "x" if k <= self.chart.fiber_dim => Ok(Ast::Var(Var::Fiber(k - 1))),
            _ => Err(unknown()),
        }
    }
}
