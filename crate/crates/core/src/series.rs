//! Exact truncated series on a trivializing chart.
//!
//! A [`FiberSeries`] is a polynomial in the base coordinates `xi1..xi2k` and a
//! power series in the fiber coordinates `x1..xr`, truncated at a recorded
//! fiber degree. Base variables are never truncated. Every series carries its
//! own `valid_order`: all terms of fiber degree at most that order are exact,
//! nothing above it is stored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Shorthand for the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Dimensions of the working chart `(xi, x)` and the fiber truncation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChartSpec {
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub trunc_order: u32,
}

impl ChartSpec {
    pub fn new(base_dim: usize, fiber_dim: usize, trunc_order: u32) -> Result<Self> {
        if !base_dim.is_multiple_of(2) {
            return Err(Error::InvalidChart(format!("base dimension must be even, got {base_dim}")));
        }
        if base_dim + fiber_dim == 0 {
            return Err(Error::InvalidChart("chart has no coordinates".into()));
        }
        if base_dim + fiber_dim > u16::MAX as usize {
            return Err(Error::InvalidChart("too many coordinates".into()));
        }
        Ok(Self { base_dim, fiber_dim, trunc_order })
    }

    /// Total number of coordinates, base first.
    pub fn dim(&self) -> usize {
        self.base_dim + self.fiber_dim
    }

    pub fn order(&self) -> i32 {
        self.trunc_order as i32
    }

    /// Same chart with a different truncation order.
    pub fn with_order(&self, trunc_order: u32) -> Self {
        Self { trunc_order, ..*self }
    }

    pub fn is_base(&self, idx: usize) -> bool {
        idx < self.base_dim
    }

    pub fn fiber_index(&self, sigma: usize) -> usize {
        self.base_dim + sigma
    }

    /// Human name of a global coordinate index (`xi1`, `x2`, ...).
    pub fn var_name(&self, idx: usize) -> String {
        if idx < self.base_dim {
            format!("xi{}", idx + 1)
        } else {
            format!("x{}", idx - self.base_dim + 1)
        }
    }
}

/// A coordinate on the chart, zero-based within its block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Base(usize),
    Fiber(usize),
}

impl Var {
    /// Position in the global base-then-fiber ordering.
    pub fn index(self, chart: &ChartSpec) -> usize {
        match self {
            Var::Base(i) => i,
            Var::Fiber(s) => chart.base_dim + s,
        }
    }

    pub fn from_index(idx: usize, chart: &ChartSpec) -> Var {
        if idx < chart.base_dim {
            Var::Base(idx)
        } else {
            Var::Fiber(idx - chart.base_dim)
        }
    }
}

/// Exponent vector over `(xi, x)`.
///
/// Ordered graded-lexicographically: lower total degree first, then the
/// monomial with the larger leading exponent (xi before x) first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    pub fn var(dim: usize, idx: usize) -> Self {
        let mut e = vec![0; dim];
        e[idx] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exps: Vec<u16>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn fiber_degree(&self, base_dim: usize) -> u32 {
        self.0[base_dim..].iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact-rational coefficient function on a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberSeries {
    chart: ChartSpec,
    order: i32,
    terms: BTreeMap<Monomial, Rational>,
}

impl FiberSeries {
    pub fn zero(chart: ChartSpec) -> Self {
        Self { chart, order: chart.order(), terms: BTreeMap::new() }
    }

    pub fn zero_with_order(chart: ChartSpec, order: i32) -> Self {
        Self { chart, order: order.min(chart.order()), terms: BTreeMap::new() }
    }

    pub fn constant(chart: ChartSpec, c: Rational) -> Self {
        let mut s = Self::zero(chart);
        if !c.is_zero() {
            s.terms.insert(Monomial::one(chart.dim()), c);
        }
        s
    }

    pub fn one(chart: ChartSpec) -> Self {
        Self::constant(chart, Rational::one())
    }

    pub fn var(chart: ChartSpec, v: Var) -> Self {
        let idx = v.index(&chart);
        assert!(idx < chart.dim(), "variable outside chart");
        let mut s = Self::zero(chart);
        if chart.is_base(idx) || chart.order() >= 1 {
            s.terms.insert(Monomial::var(chart.dim(), idx), Rational::one());
        }
        s
    }

    /// Build from raw terms; zero coefficients are dropped and terms above
    /// `order` are discarded.
    pub fn from_terms<I>(chart: ChartSpec, order: i32, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let order = order.min(chart.order());
        let mut s = Self { chart, order, terms: BTreeMap::new() };
        for (m, c) in terms {
            debug_assert_eq!(m.0.len(), chart.dim());
            if (m.fiber_degree(chart.base_dim) as i32) <= order {
                s.add_term(m, c);
            }
        }
        s
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }

    /// Highest fiber degree certified exact; `-1` (or below) means nothing
    /// is certified.
    pub fn valid_order(&self) -> i32 {
        self.order
    }

    pub fn is_certified(&self) -> bool {
        self.order >= 0
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Lower the valid order, dropping the terms that no longer fit.
    pub fn truncate(&self, order: i32) -> Self {
        if order >= self.order {
            return self.clone();
        }
        let base = self.chart.base_dim;
        Self {
            chart: self.chart,
            order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| (m.fiber_degree(base) as i32) <= order)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    fn check_chart(&self, other: &Self) -> Result<()> {
        if self.chart.base_dim != other.chart.base_dim || self.chart.fiber_dim != other.chart.fiber_dim {
            Err(Error::ChartMismatch)
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_chart(other)?;
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        let base = self.chart.base_dim;
        for (m, c) in &other.terms {
            if (m.fiber_degree(base) as i32) <= order {
                out.add_term(m.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_chart(other)?;
        let order = self.order.min(other.order);
        let base = self.chart.base_dim;
        let mut out = Self { chart: self.chart, order, terms: BTreeMap::new() };
        if order < 0 {
            return Ok(out);
        }
        for (ma, ca) in &self.terms {
            let da = ma.fiber_degree(base) as i32;
            if da > order {
                continue;
            }
            for (mb, cb) in &other.terms {
                if da + mb.fiber_degree(base) as i32 > order {
                    continue;
                }
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero_with_order(self.chart, self.order);
        }
        Self {
            chart: self.chart,
            order: self.order,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.chart).truncate(self.order);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Exact partial derivative. Differentiating in a fiber variable lowers
    /// the certified order by one.
    pub fn diff(&self, v: Var) -> Self {
        let idx = v.index(&self.chart);
        let order = match v {
            Var::Base(_) => self.order,
            Var::Fiber(_) => self.order - 1,
        };
        let base = self.chart.base_dim;
        let mut out = Self { chart: self.chart, order, terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut nm = m.clone();
            nm.0[idx] -= 1;
            if (nm.fiber_degree(base) as i32) <= order {
                out.add_term(nm, c * int(e as i64));
            }
        }
        out
    }

    /// Derivative along the coordinate with global index `idx`.
    pub fn diff_index(&self, idx: usize) -> Self {
        self.diff(Var::from_index(idx, &self.chart))
    }

    /// Only the terms of fiber degree exactly `deg`.
    pub fn fiber_part(&self, deg: u32) -> Self {
        self.fiber_range(deg, deg)
    }

    /// Terms with fiber degree in `lo..=hi`; the valid order is unchanged.
    pub fn fiber_range(&self, lo: u32, hi: u32) -> Self {
        let base = self.chart.base_dim;
        Self {
            chart: self.chart,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| {
                    let d = m.fiber_degree(base);
                    d >= lo && d <= hi
                })
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn min_fiber_degree(&self) -> Option<u32> {
        let base = self.chart.base_dim;
        self.terms.keys().map(|m| m.fiber_degree(base)).min()
    }

    pub fn max_fiber_degree(&self) -> Option<u32> {
        let base = self.chart.base_dim;
        self.terms.keys().map(|m| m.fiber_degree(base)).max()
    }

    pub fn is_fiber_independent(&self) -> bool {
        self.max_fiber_degree().is_none_or(|d| d == 0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn constant_term(&self) -> Rational {
        self.terms.get(&Monomial::one(self.chart.dim())).cloned().unwrap_or_else(Rational::zero)
    }

    /// The xi-polynomial multiplying the fiber monomial `x^fiber_exps`.
    pub fn fiber_coefficient(&self, fiber_exps: &[u16]) -> Self {
        let base = self.chart.base_dim;
        let mut out = Self::zero(self.chart);
        for (m, c) in &self.terms {
            if &m.0[base..] == fiber_exps {
                let mut nm = m.clone();
                for e in &mut nm.0[base..] {
                    *e = 0;
                }
                out.add_term(nm, c.clone());
            }
        }
        out
    }

    /// Coefficient of the single fiber variable `x^sigma`.
    pub fn linear_coefficient(&self, sigma: usize) -> Self {
        let mut e = vec![0u16; self.chart.fiber_dim];
        e[sigma] = 1;
        self.fiber_coefficient(&e)
    }

    /// Substitute each fiber variable `x^sigma` by `images[sigma]`.
    ///
    /// The images must have no fiber-degree-0 part, otherwise the discarded
    /// tail of `self` would feed low orders.
    pub fn substitute_fiber(&self, images: &[FiberSeries]) -> Result<Self> {
        let chart = self.chart;
        if images.len() != chart.fiber_dim {
            return Err(Error::Dimension("fiber substitution arity".into()));
        }
        let mut order = self.order;
        for im in images {
            self.check_chart(im)?;
            if im.min_fiber_degree() == Some(0) {
                return Err(Error::Precondition("fiber substitution image has a fiber-degree-0 part".into()));
            }
            order = order.min(im.order);
        }
        let base = chart.base_dim;
        let mut powers: Vec<Vec<FiberSeries>> =
            images.iter().map(|im| vec![Self::one(chart).truncate(order), im.truncate(order)]).collect();
        let mut out = Self::zero_with_order(chart, order);
        for (m, c) in &self.terms {
            let mut bm = m.clone();
            for e in &mut bm.0[base..] {
                *e = 0;
            }
            let mut term = Self::from_terms(chart, order, [(bm, c.clone())]);
            for (s, pw) in powers.iter_mut().enumerate() {
                let e = m.0[base + s] as usize;
                while pw.len() <= e {
                    let next = &pw[pw.len() - 1] * &pw[1];
                    pw.push(next);
                }
                if e > 0 {
                    term = &term * &pw[e];
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Substitute rational values for all base variables.
    pub fn eval_base(&self, point: &[Rational]) -> Self {
        assert_eq!(point.len(), self.chart.base_dim);
        let base = self.chart.base_dim;
        let mut out = Self::zero_with_order(self.chart, self.order);
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (i, p) in point.iter().enumerate() {
                let e = m.0[i];
                if e > 0 {
                    v *= num_traits::pow(p.clone(), e as usize);
                }
            }
            let mut nm = m.clone();
            for e in &mut nm.0[..base] {
                *e = 0;
            }
            out.add_term(nm, v);
        }
        out
    }

    /// Floating-point evaluation at a full `(xi, x)` point.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.to_float().eval(point)
    }

    pub fn to_float(&self) -> FloatPoly {
        FloatPoly { terms: self.terms.iter().map(|(m, c)| (c.to_f64().unwrap_or(f64::NAN), m.0.clone())).collect() }
    }

    /// Canonical text in the input grammar.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl Add for &FiberSeries {
    type Output = FiberSeries;
    fn add(self, rhs: &FiberSeries) -> FiberSeries {
        self.try_add(rhs).expect("chart mismatch in series addition")
    }
}

impl Sub for &FiberSeries {
    type Output = FiberSeries;
    fn sub(self, rhs: &FiberSeries) -> FiberSeries {
        self.try_sub(rhs).expect("chart mismatch in series subtraction")
    }
}

impl Mul for &FiberSeries {
    type Output = FiberSeries;
    fn mul(self, rhs: &FiberSeries) -> FiberSeries {
        self.try_mul(rhs).expect("chart mismatch in series product")
    }
}

impl Neg for &FiberSeries {
    type Output = FiberSeries;
    fn neg(self) -> FiberSeries {
        FiberSeries {
            chart: self.chart,
            order: self.order,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Add for FiberSeries {
    type Output = FiberSeries;
    fn add(self, rhs: FiberSeries) -> FiberSeries {
        &self + &rhs
    }
}

impl Sub for FiberSeries {
    type Output = FiberSeries;
    fn sub(self, rhs: FiberSeries) -> FiberSeries {
        &self - &rhs
    }
}

impl Mul for FiberSeries {
    type Output = FiberSeries;
    fn mul(self, rhs: FiberSeries) -> FiberSeries {
        &self * &rhs
    }
}

impl Neg for FiberSeries {
    type Output = FiberSeries;
    fn neg(self) -> FiberSeries {
        -&self
    }
}

/// Exact sum of two series on the same chart.
pub fn series_add(a: &FiberSeries, b: &FiberSeries) -> Result<FiberSeries> {
    a.try_add(b)
}

pub fn series_mul(a: &FiberSeries, b: &FiberSeries) -> Result<FiberSeries> {
    a.try_mul(b)
}

pub fn series_scale(a: &FiberSeries, c: &Rational) -> FiberSeries {
    a.scale(c)
}

pub fn series_diff(a: &FiberSeries, v: Var) -> FiberSeries {
    a.diff(v)
}

fn fmt_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for FiberSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors = Vec::new();
            if !mag.is_one() || m.is_one() {
                factors.push(fmt_rational(&mag));
            }
            for (idx, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = self.chart.var_name(idx);
                if e == 1 {
                    factors.push(name);
                } else {
                    factors.push(format!("{name}^{e}"));
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Floating-point image of a series, for numeric integration.
#[derive(Clone, Debug, Default)]
pub struct FloatPoly {
    terms: Vec<(f64, Vec<u16>)>,
}

impl FloatPoly {
    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, exps) in &self.terms {
            let mut v = *c;
            for (p, &e) in point.iter().zip(exps) {
                if e > 0 {
                    v *= p.powi(e as i32);
                }
            }
            acc += v;
        }
        acc
    }
}
