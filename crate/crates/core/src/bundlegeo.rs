//! Ehresmann connections on the chart: horizontal lifts, the covariant
//! exterior derivative and curvature.

use crate::error::{Error, Result};
use crate::multivec::{schouten, HForm, Multivector};
use crate::series::{ChartSpec, FiberSeries, Var};

/// Connection coefficients `Γ_i^σ`; `hor(∂_i) = ∂_i − Σ_σ Γ_i^σ ∂_σ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    chart: ChartSpec,
    gamma: Vec<Vec<FiberSeries>>,
}

impl Connection {
    pub fn new(chart: ChartSpec, gamma: Vec<Vec<FiberSeries>>) -> Result<Self> {
        if gamma.len() != chart.base_dim || gamma.iter().any(|r| r.len() != chart.fiber_dim) {
            return Err(Error::Dimension(format!(
                "connection needs {}x{} coefficients",
                chart.base_dim, chart.fiber_dim
            )));
        }
        if gamma.iter().flatten().any(|g| g.chart().dim() != chart.dim()) {
            return Err(Error::ChartMismatch);
        }
        Ok(Self { chart, gamma })
    }

    pub fn zero(chart: ChartSpec) -> Self {
        Self { chart, gamma: vec![vec![FiberSeries::zero(chart); chart.fiber_dim]; chart.base_dim] }
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.chart
    }

    pub fn gamma(&self, i: usize, sigma: usize) -> &FiberSeries {
        &self.gamma[i][sigma]
    }

    pub fn coefficients(&self) -> &[Vec<FiberSeries>] {
        &self.gamma
    }

    pub fn valid_order(&self) -> i32 {
        self.gamma.iter().flatten().map(|g| g.valid_order()).min().unwrap_or(self.chart.order())
    }

    /// Every coefficient is fiber-linear with polynomial base dependence.
    pub fn is_homogeneous(&self) -> bool {
        self.gamma
            .iter()
            .flatten()
            .all(|g| g.min_fiber_degree().is_none_or(|d| d == 1) && g.max_fiber_degree().is_none_or(|d| d == 1))
    }

    pub fn map(&self, f: impl Fn(&FiberSeries) -> FiberSeries) -> Self {
        Self { chart: self.chart, gamma: self.gamma.iter().map(|r| r.iter().map(&f).collect()).collect() }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let gamma = self
            .gamma
            .iter()
            .zip(&other.gamma)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.try_add(y)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { chart: self.chart, gamma })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.map(|g| -g))
    }

    pub fn truncate(&self, order: i32) -> Self {
        self.map(|g| g.truncate(order))
    }
}

/// `hor(∂_i)` as a vector field.
pub fn hor_lift(c: &Connection, i: usize) -> Result<Multivector> {
    let chart = c.chart;
    if i >= chart.base_dim {
        return Err(Error::IndexOutOfRange(format!("base index {} outside 1..={}", i + 1, chart.base_dim)));
    }
    let mut comps = vec![FiberSeries::zero(chart); chart.dim()];
    comps[i] = FiberSeries::one(chart);
    for s in 0..chart.fiber_dim {
        comps[chart.base_dim + s] = -&c.gamma[i][s];
    }
    Multivector::vector(chart, &comps)
}

/// `hor(∂_i)` applied to a function.
pub fn hor_apply(c: &Connection, i: usize, f: &FiberSeries) -> FiberSeries {
    let mut out = f.diff(Var::Base(i));
    for s in 0..c.chart.fiber_dim {
        let g = &c.gamma[i][s];
        if !g.is_zero() {
            out = &out - &(g * &f.diff(Var::Fiber(s)));
        }
    }
    out
}

/// `(∂_Γ F)_{i0..ik} = Σ_j (−1)^j hor(∂_{ij}) F_{i0..îj..ik}`.
pub fn cov_ext_deriv(c: &Connection, f: &HForm) -> Result<HForm> {
    let chart = c.chart;
    if f.chart().dim() != chart.dim() {
        return Err(Error::ChartMismatch);
    }
    let k = f.degree();
    let order = f.valid_order().min(c.valid_order()) - if chart.fiber_dim > 0 { 1 } else { 0 };
    let mut out = HForm::zero_with_order(chart, k + 1, order);
    if k + 1 > chart.base_dim {
        return Ok(out);
    }
    for tuple in increasing_tuples(chart.base_dim, k + 1) {
        let mut acc = FiberSeries::zero_with_order(chart, order);
        for j in 0..=k {
            let mut rest = tuple.clone();
            let ij = rest.remove(j);
            let v = hor_apply(c, ij, &f.get(&rest));
            acc = if j % 2 == 0 { &acc + &v } else { &acc - &v };
        }
        out.add(&tuple, acc.truncate(order));
    }
    Ok(out)
}

/// Function-valued interior product `(ι_u F)_J = F_{uJ}` on base forms.
pub fn base_interior(u: usize, f: &HForm) -> Result<HForm> {
    if f.degree() == 0 {
        return Err(Error::WrongDegree { expected: 1, found: 0 });
    }
    let chart = *f.chart();
    let mut out = HForm::zero_with_order(chart, f.degree() - 1, f.valid_order());
    for tuple in increasing_tuples(chart.base_dim, f.degree() - 1) {
        let mut idx = vec![u];
        idx.extend(&tuple);
        out.add(&tuple, f.get(&idx));
    }
    Ok(out)
}

/// `Curv_ij = −[hor(∂_i), hor(∂_j)]` for `i < j`, keyed by `(i, j)`.
pub fn curvature(c: &Connection) -> Result<Vec<((usize, usize), Multivector)>> {
    let n = c.chart.base_dim;
    let lifts: Vec<Multivector> = (0..n).map(|i| hor_lift(c, i)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let curv = schouten(&lifts[i], &lifts[j])?.neg();
            if !curv.is_vertical() {
                return Err(Error::Invariant(format!(
                    "curvature component ({}, {}) has a base direction",
                    i + 1,
                    j + 1
                )));
            }
            out.push(((i, j), curv));
        }
    }
    Ok(out)
}

/// All strictly increasing `len`-tuples from `0..n`.
pub fn increasing_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for a in start..n {
            cur.push(a);
            rec(n, len, a + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if len <= n {
        rec(n, len, 0, &mut Vec::new(), &mut out);
    }
    out
}
