//! Multivector fields and function-valued base forms, with the
//! Schouten–Nijenhuis bracket.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::series::{ChartSpec, FiberSeries, Rational};

/// Sort `idx` in place and return the sign of the sorting permutation, or
/// `None` if an index repeats.
pub fn canonicalize(idx: &mut [usize]) -> Option<i32> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in idx.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some(sign)
}

fn signed(s: FiberSeries, sign: i32) -> FiberSeries {
    if sign < 0 {
        -s
    } else {
        s
    }
}

/// Antisymmetric tensor with components on strictly increasing index tuples
/// over all chart directions (base first, then fiber).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multivector {
    chart: ChartSpec,
    degree: usize,
    order: i32,
    comps: BTreeMap<Vec<usize>, FiberSeries>,
}

impl Multivector {
    pub fn zero(chart: ChartSpec, degree: usize) -> Self {
        Self { chart, degree, order: chart.order(), comps: BTreeMap::new() }
    }

    pub fn zero_with_order(chart: ChartSpec, degree: usize, order: i32) -> Self {
        Self { chart, degree, order: order.min(chart.order()), comps: BTreeMap::new() }
    }

    pub fn function(f: FiberSeries) -> Self {
        let chart = *f.chart();
        let mut m = Self::zero_with_order(chart, 0, f.valid_order());
        m.add_component(&[], f);
        m
    }

    /// Vector field from its components `X^a` over all directions.
    pub fn vector(chart: ChartSpec, comps: &[FiberSeries]) -> Result<Self> {
        if comps.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "vector field needs {} components, got {}",
                chart.dim(),
                comps.len()
            )));
        }
        let order = comps.iter().map(|c| c.valid_order()).min().unwrap_or(chart.order());
        let mut m = Self::zero_with_order(chart, 1, order);
        for (a, c) in comps.iter().enumerate() {
            m.add_component(&[a], c.clone());
        }
        Ok(m)
    }

    /// The coordinate field `∂_a`.
    pub fn coordinate_field(chart: ChartSpec, a: usize) -> Self {
        let mut m = Self::zero(chart, 1);
        m.add_component(&[a], FiberSeries::one(chart));
        m
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn valid_order(&self) -> i32 {
        self.order
    }

    pub fn components(&self) -> &BTreeMap<Vec<usize>, FiberSeries> {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Component on an arbitrary index tuple (antisymmetry applied).
    pub fn get(&self, idx: &[usize]) -> FiberSeries {
        let mut k = idx.to_vec();
        match canonicalize(&mut k) {
            None => FiberSeries::zero_with_order(self.chart, self.order),
            Some(sign) => match self.comps.get(&k) {
                Some(c) => signed(c.clone(), sign),
                None => FiberSeries::zero_with_order(self.chart, self.order),
            },
        }
    }

    /// Scalar value of a degree-0 multivector.
    pub fn as_function(&self) -> FiberSeries {
        self.get(&[])
    }

    /// Add `value` to the component on `idx` (any order; antisymmetry applied).
    pub fn add_component(&mut self, idx: &[usize], value: FiberSeries) {
        assert_eq!(idx.len(), self.degree, "component tuple has wrong length");
        assert!(idx.iter().all(|&a| a < self.chart.dim()), "index outside chart");
        let mut k = idx.to_vec();
        let Some(sign) = canonicalize(&mut k) else { return };
        let v = signed(value, sign).truncate(self.order);
        self.order = self.order.min(v.valid_order());
        let merged = match self.comps.remove(&k) {
            Some(old) => &old + &v,
            None => v,
        };
        if !merged.is_zero() {
            self.comps.insert(k, merged);
        }
        if self.comps.values().any(|c| c.valid_order() > self.order) {
            self.retruncate();
        }
    }

    fn retruncate(&mut self) {
        let o = self.order;
        self.comps = std::mem::take(&mut self.comps)
            .into_iter()
            .map(|(k, c)| (k, c.truncate(o)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
    }

    pub fn truncate(&self, order: i32) -> Self {
        let mut m = self.clone();
        if order < m.order {
            m.order = order;
            m.retruncate();
        }
        m
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.truncate(other.order);
        for (k, c) in &other.comps {
            out.add_component(k, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.chart.base_dim != other.chart.base_dim || self.chart.fiber_dim != other.chart.fiber_dim {
            return Err(Error::ChartMismatch);
        }
        if self.degree != other.degree {
            return Err(Error::WrongDegree { expected: self.degree, found: other.degree });
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        self.map(|c| c.scale(r))
    }

    /// Multiply every component by a function.
    pub fn mul_function(&self, f: &FiberSeries) -> Self {
        let mut out = Self::zero_with_order(self.chart, self.degree, self.order.min(f.valid_order()));
        for (k, c) in &self.comps {
            out.add_component(k, c * f);
        }
        out
    }

    fn map(&self, f: impl Fn(&FiberSeries) -> FiberSeries) -> Self {
        let mut out = Self::zero_with_order(self.chart, self.degree, self.order);
        for (k, c) in &self.comps {
            out.add_component(k, f(c));
        }
        out
    }

    /// True when no component involves a base direction.
    pub fn is_vertical(&self) -> bool {
        let b = self.chart.base_dim;
        self.comps.keys().all(|k| k.iter().all(|&a| a >= b))
    }

    /// Part with every index in a fiber direction.
    pub fn vertical_part(&self) -> Self {
        let b = self.chart.base_dim;
        let mut out = Self::zero_with_order(self.chart, self.degree, self.order);
        for (k, c) in &self.comps {
            if k.iter().all(|&a| a >= b) {
                out.add_component(k, c.clone());
            }
        }
        out
    }

    /// Componentwise partial derivative along the global direction `a`.
    pub fn diff(&self, a: usize) -> Self {
        let mut out = Self::zero_with_order(self.chart, self.degree, self.order);
        if !self.chart.is_base(a) {
            out.order -= 1;
        }
        for (k, c) in &self.comps {
            out.add_component(k, c.diff_index(a));
        }
        out
    }

    /// Right derivative with respect to the odd variable of direction `a`.
    fn right_deriv(&self, a: usize) -> Option<Self> {
        if self.degree == 0 {
            return None;
        }
        let p = self.degree;
        let mut out = Self::zero_with_order(self.chart, p - 1, self.order);
        for (k, c) in &self.comps {
            if let Some(pos) = k.iter().position(|&b| b == a) {
                let mut rest = k.clone();
                rest.remove(pos);
                let sign = if (p - 1 - pos).is_multiple_of(2) { 1 } else { -1 };
                out.add_component(&rest, signed(c.clone(), sign));
            }
        }
        Some(out)
    }

    /// Canonical rendering: `(coef)*d_xi1^d_x2 + ...` in index order.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.comps {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if k.is_empty() {
                write!(f, "({c})")?;
            } else {
                let names: Vec<String> = k.iter().map(|&a| format!("d_{}", self.chart.var_name(a))).collect();
                write!(f, "({c})*{}", names.join("^"))?;
            }
        }
        Ok(())
    }
}

/// Exterior product.
pub fn wedge(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    if a.chart.base_dim != b.chart.base_dim || a.chart.fiber_dim != b.chart.fiber_dim {
        return Err(Error::ChartMismatch);
    }
    let deg = a.degree + b.degree;
    let mut out = Multivector::zero_with_order(a.chart, deg, a.order.min(b.order));
    if deg > a.chart.dim() {
        return Ok(out);
    }
    for (ka, ca) in &a.comps {
        for (kb, cb) in &b.comps {
            if ka.iter().any(|x| kb.contains(x)) {
                continue;
            }
            let mut idx: Vec<usize> = ka.iter().chain(kb).copied().collect();
            let sign = canonicalize(&mut idx).expect("disjoint tuples");
            out.add_component(&idx, signed(ca * cb, sign));
        }
    }
    Ok(out)
}

/// Contraction `alpha ⌋ T` on the first slot; `alpha` lists the components
/// of a 1-form over all directions.
pub fn interior(alpha: &[FiberSeries], t: &Multivector) -> Result<Multivector> {
    if t.degree == 0 {
        return Err(Error::WrongDegree { expected: 1, found: 0 });
    }
    if alpha.len() != t.chart.dim() {
        return Err(Error::Dimension("1-form arity".into()));
    }
    let order = alpha.iter().map(|c| c.valid_order()).min().unwrap_or(t.order).min(t.order);
    let mut out = Multivector::zero_with_order(t.chart, t.degree - 1, order);
    for (k, c) in &t.comps {
        for (pos, &a) in k.iter().enumerate() {
            if alpha[a].is_zero() {
                continue;
            }
            let mut rest = k.clone();
            rest.remove(pos);
            let v = &alpha[a] * c;
            out.add_component(&rest, signed(v, if pos % 2 == 0 { 1 } else { -1 }));
        }
    }
    Ok(out)
}

/// Schouten–Nijenhuis bracket, normalized by `[[X,f]] = X(f)` and
/// `[[X,Y]] = XY - YX`.
///
/// The result is certified to one fiber degree less than the inputs.
pub fn schouten(a: &Multivector, b: &Multivector) -> Result<Multivector> {
    if a.chart.base_dim != b.chart.base_dim || a.chart.fiber_dim != b.chart.fiber_dim {
        return Err(Error::ChartMismatch);
    }
    let (p, q) = (a.degree, b.degree);
    let order = a.order.min(b.order) - 1;
    if p + q == 0 {
        return Ok(Multivector::zero_with_order(a.chart, 0, order));
    }
    let deg = p + q - 1;
    let mut out = Multivector::zero_with_order(a.chart, deg, order);
    let sign = if ((p as i64 - 1) * (q as i64 - 1)).rem_euclid(2) == 0 { -1 } else { 1 };
    for i in 0..a.chart.dim() {
        if let Some(ra) = a.right_deriv(i) {
            if !ra.is_zero() {
                let db = b.diff(i);
                if !db.is_zero() {
                    out = out.try_add(&wedge(&ra, &db)?.truncate(order))?;
                }
            }
        }
        if let Some(rb) = b.right_deriv(i) {
            if !rb.is_zero() {
                let da = a.diff(i);
                if !da.is_zero() {
                    let term = wedge(&rb, &da)?.truncate(order);
                    out = out.try_add(&if sign < 0 { term.neg() } else { term })?;
                }
            }
        }
    }
    Ok(out.truncate(order))
}

/// `[[P, P]]`; vanishes exactly when `P` is Poisson to the certified order.
pub fn jacobiator(p: &Multivector) -> Result<Multivector> {
    if p.degree != 2 {
        return Err(Error::WrongDegree { expected: 2, found: p.degree });
    }
    schouten(p, p)
}

/// `L_X T = [[X, T]]`.
pub fn lie_derivative(x: &Multivector, t: &Multivector) -> Result<Multivector> {
    if x.degree != 1 {
        return Err(Error::WrongDegree { expected: 1, found: x.degree });
    }
    schouten(x, t)
}

/// Apply a vector field to a function as a derivation.
pub fn apply_vector(x: &Multivector, f: &FiberSeries) -> Result<FiberSeries> {
    if x.degree != 1 {
        return Err(Error::WrongDegree { expected: 1, found: x.degree });
    }
    let mut acc = FiberSeries::zero_with_order(x.chart, x.order.min(f.valid_order()));
    for (k, c) in &x.comps {
        acc = acc.try_add(&c.try_mul(&f.diff_index(k[0]))?)?;
    }
    Ok(acc)
}

/// A `k`-form on the base with function values: components on strictly
/// increasing tuples of base indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HForm {
    chart: ChartSpec,
    degree: usize,
    order: i32,
    values: BTreeMap<Vec<usize>, FiberSeries>,
}

impl HForm {
    pub fn zero(chart: ChartSpec, degree: usize) -> Self {
        Self { chart, degree, order: chart.order(), values: BTreeMap::new() }
    }

    pub fn zero_with_order(chart: ChartSpec, degree: usize, order: i32) -> Self {
        Self { chart, degree, order: order.min(chart.order()), values: BTreeMap::new() }
    }

    /// A 1-form from its base components.
    pub fn one_form(chart: ChartSpec, comps: &[FiberSeries]) -> Result<Self> {
        if comps.len() != chart.base_dim {
            return Err(Error::Dimension("1-form needs one entry per base direction".into()));
        }
        let mut f = Self::zero(chart, 1);
        for (i, c) in comps.iter().enumerate() {
            f.add(&[i], c.clone());
        }
        Ok(f)
    }

    /// A 2-form from a full antisymmetric matrix; the strict upper triangle is read.
    pub fn two_form(chart: ChartSpec, m: &[Vec<FiberSeries>]) -> Result<Self> {
        let n = chart.base_dim;
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("2-form matrix shape".into()));
        }
        let mut f = Self::zero(chart, 2);
        for i in 0..n {
            for j in i + 1..n {
                f.add(&[i, j], m[i][j].clone());
            }
        }
        Ok(f)
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn valid_order(&self) -> i32 {
        self.order
    }

    pub fn values(&self) -> &BTreeMap<Vec<usize>, FiberSeries> {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: &[usize]) -> FiberSeries {
        let mut k = idx.to_vec();
        match canonicalize(&mut k) {
            None => FiberSeries::zero_with_order(self.chart, self.order),
            Some(sign) => match self.values.get(&k) {
                Some(c) => signed(c.clone(), sign),
                None => FiberSeries::zero_with_order(self.chart, self.order),
            },
        }
    }

    /// Full antisymmetric matrix of a 2-form.
    pub fn matrix(&self) -> Vec<Vec<FiberSeries>> {
        let n = self.chart.base_dim;
        (0..n).map(|i| (0..n).map(|j| self.get(&[i, j])).collect()).collect()
    }

    pub fn add(&mut self, idx: &[usize], value: FiberSeries) {
        assert_eq!(idx.len(), self.degree, "form tuple has wrong length");
        assert!(idx.iter().all(|&a| a < self.chart.base_dim), "form index must be a base direction");
        let mut k = idx.to_vec();
        let Some(sign) = canonicalize(&mut k) else { return };
        let v = signed(value, sign).truncate(self.order);
        if v.valid_order() < self.order {
            self.order = v.valid_order();
            let o = self.order;
            self.values = std::mem::take(&mut self.values)
                .into_iter()
                .map(|(k, c)| (k, c.truncate(o)))
                .filter(|(_, c)| !c.is_zero())
                .collect();
        }
        let merged = match self.values.remove(&k) {
            Some(old) => &old + &v,
            None => v,
        };
        if !merged.is_zero() {
            self.values.insert(k, merged);
        }
    }

    pub fn truncate(&self, order: i32) -> Self {
        let mut out = Self::zero_with_order(self.chart, self.degree, order.min(self.order));
        for (k, c) in &self.values {
            out.add(k, c.clone());
        }
        out
    }

    pub fn map(&self, f: impl Fn(&FiberSeries) -> FiberSeries) -> Self {
        let mut out = Self::zero_with_order(self.chart, self.degree, self.order);
        let mut vals = Vec::new();
        for (k, c) in &self.values {
            vals.push((k.clone(), f(c)));
        }
        if let Some(o) = vals.iter().map(|(_, v)| v.valid_order()).min() {
            out.order = out.order.min(o);
        }
        for (k, v) in vals {
            out.add(&k, v);
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.chart.base_dim != other.chart.base_dim || self.chart.fiber_dim != other.chart.fiber_dim {
            return Err(Error::ChartMismatch);
        }
        if self.degree != other.degree {
            return Err(Error::WrongDegree { expected: self.degree, found: other.degree });
        }
        let mut out = self.truncate(other.order);
        for (k, c) in &other.values {
            out.add(k, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        self.map(|c| c.scale(r))
    }
}

impl fmt::Display for HForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.values {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let names: Vec<String> = k.iter().map(|&a| format!("dxi{}", a + 1)).collect();
            if names.is_empty() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*{}", names.join("^"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_series;

    fn chart(b: usize, r: usize, n: u32) -> ChartSpec {
        ChartSpec::new(b, r, n).unwrap()
    }

    fn p(s: &str, c: ChartSpec) -> FiberSeries {
        parse_series(s, c).unwrap()
    }

    fn vf(c: ChartSpec, comps: &[&str]) -> Multivector {
        let v: Vec<FiberSeries> = comps.iter().map(|s| p(s, c)).collect();
        Multivector::vector(c, &v).unwrap()
    }

    fn so3(c: ChartSpec) -> Multivector {
        let b = c.base_dim;
        let mut v = Multivector::zero(c, 2);
        v.add_component(&[b, b + 1], p("x3", c));
        v.add_component(&[b + 1, b + 2], p("x1", c));
        v.add_component(&[b + 2, b], p("x2", c));
        v
    }

    #[test]
    fn wedge_examples() {
        let c = chart(2, 1, 3);
        let d1 = Multivector::coordinate_field(c, 0);
        let d2 = Multivector::coordinate_field(c, 1);
        let w = wedge(&d1, &d2).unwrap();
        assert_eq!(w.get(&[0, 1]), FiberSeries::one(c));
        assert_eq!(w.get(&[1, 0]), -FiberSeries::one(c));
        assert!(wedge(&d1, &d1).unwrap().is_zero());
        let a = d1.mul_function(&p("x1", c));
        let b = d2.mul_function(&p("xi1", c));
        assert_eq!(wedge(&a, &b).unwrap().get(&[0, 1]).to_string(), "xi1*x1");
        let big = wedge(&w, &wedge(&w, &d1).unwrap()).unwrap();
        assert_eq!(big.degree(), 5);
        assert!(big.is_zero());
    }

    #[test]
    fn interior_examples() {
        let c = chart(2, 1, 3);
        let w = wedge(&Multivector::coordinate_field(c, 0), &Multivector::coordinate_field(c, 1)).unwrap();
        let form = |a: usize| -> Vec<FiberSeries> {
            (0..3).map(|b| if a == b { FiberSeries::one(c) } else { FiberSeries::zero(c) }).collect()
        };
        assert_eq!(interior(&form(0), &w).unwrap(), Multivector::coordinate_field(c, 1));
        assert!(interior(&form(2), &w).unwrap().is_zero());
        assert_eq!(interior(&form(1), &w).unwrap(), Multivector::coordinate_field(c, 0).neg());
        let f = Multivector::function(p("1", c));
        assert!(interior(&form(0), &f).is_err());
    }

    #[test]
    fn schouten_normalizations() {
        let c = chart(2, 1, 3);
        let d1 = Multivector::coordinate_field(c, 0);
        let xi1 = Multivector::function(p("xi1", c));
        let r = schouten(&d1, &xi1).unwrap();
        assert_eq!(r.as_function().to_string(), "1");
        assert_eq!(r.valid_order(), 2);

        let c0 = ChartSpec::new(0, 2, 3).unwrap();
        let x = vf(c0, &["0", "x1"]);
        let y = vf(c0, &["x2", "0"]);
        let br = schouten(&x, &y).unwrap();
        // XY - YX = x1*d_x1 - x2*d_x2
        assert_eq!(br.get(&[0]).to_string(), "x1");
        assert_eq!(br.get(&[1]).to_string(), "-x2");

        let f = Multivector::function(p("x1", c));
        let g = Multivector::function(p("xi2*x1", c));
        assert!(schouten(&f, &g).unwrap().is_zero());
    }

    #[test]
    fn so3_and_constant_are_poisson() {
        let c = chart(0, 3, 3);
        let v = so3(c);
        assert!(jacobiator(&v).unwrap().is_zero());
        let cb = chart(2, 1, 4);
        let w = wedge(&Multivector::coordinate_field(cb, 0), &Multivector::coordinate_field(cb, 1)).unwrap();
        assert!(jacobiator(&w).unwrap().is_zero());
        let h = w.mul_function(&p("1 + x1 + x1^2 + x1^3 + x1^4", cb));
        let j = jacobiator(&h).unwrap();
        assert!(j.is_zero());
        assert_eq!(j.valid_order(), 3);
    }

    #[test]
    fn broken_lie_poisson_is_detected() {
        let c = chart(0, 3, 3);
        let mut v = so3(c);
        v.add_component(&[0, 1], p("x1", c));
        assert!(!jacobiator(&v).unwrap().is_zero());
        assert!(jacobiator(&vf(c, &["1", "0", "0"])).is_err());
        assert!(lie_derivative(&v, &v).is_err());
    }

    #[test]
    fn graded_antisymmetry() {
        let c = chart(2, 1, 3);
        let x = vf(c, &["xi2*x1", "x1^2", "xi1"]);
        let mut q = Multivector::zero(c, 2);
        q.add_component(&[0, 2], p("x1*xi1", c));
        q.add_component(&[1, 2], p("1 + x1", c));
        let ab = schouten(&x, &q).unwrap();
        let ba = schouten(&q, &x).unwrap();
        // (p-1)(q-1) = 0 here, so [[X,Q]] = -[[Q,X]]
        assert_eq!(ab, ba.neg());
    }

    #[test]
    fn hform_basics() {
        let c = chart(4, 1, 2);
        let mut f = HForm::zero(c, 2);
        f.add(&[1, 0], p("x1", c));
        assert_eq!(f.get(&[0, 1]).to_string(), "-x1");
        assert_eq!(f.matrix()[1][0].to_string(), "x1");
        let g = f.try_add(&f.neg()).unwrap();
        assert!(g.is_zero());
        assert!(f.to_string().contains("dxi1^dxi2"));
    }
}
