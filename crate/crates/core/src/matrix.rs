//! Square matrices of series and their inversion by Neumann expansion.

use crate::error::{Error, Result};
use crate::linalg::{self, RatMatrix};
use crate::series::{ChartSpec, FiberSeries, Rational};

pub type SeriesMatrix = Vec<Vec<FiberSeries>>;

pub fn zeros(chart: ChartSpec, rows: usize, cols: usize) -> SeriesMatrix {
    vec![vec![FiberSeries::zero(chart); cols]; rows]
}

pub fn identity(chart: ChartSpec, n: usize) -> SeriesMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { FiberSeries::one(chart) } else { FiberSeries::zero(chart) }).collect())
        .collect()
}

pub fn from_rational(chart: ChartSpec, m: &RatMatrix) -> SeriesMatrix {
    m.iter().map(|row| row.iter().map(|c| FiberSeries::constant(chart, c.clone())).collect()).collect()
}

pub fn mat_mul(a: &SeriesMatrix, b: &SeriesMatrix) -> Result<SeriesMatrix> {
    let inner = b.len();
    if a.iter().any(|r| r.len() != inner) {
        return Err(Error::Dimension("matrix product shapes".into()));
    }
    let cols = b.first().map_or(0, |r| r.len());
    let mut out = Vec::with_capacity(a.len());
    for row in a {
        let mut orow = Vec::with_capacity(cols);
        for j in 0..cols {
            let chart = *row.first().map(|s| s.chart()).or(b[0].first().map(|s| s.chart())).unwrap();
            let mut acc = FiberSeries::zero(chart);
            for (k, x) in row.iter().enumerate() {
                acc = acc.try_add(&x.try_mul(&b[k][j])?)?;
            }
            orow.push(acc);
        }
        out.push(orow);
    }
    Ok(out)
}

pub fn mat_add(a: &SeriesMatrix, b: &SeriesMatrix) -> Result<SeriesMatrix> {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.try_add(y)).collect()).collect()
}

pub fn mat_neg(a: &SeriesMatrix) -> SeriesMatrix {
    a.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
}

pub fn transpose(a: &SeriesMatrix) -> SeriesMatrix {
    let cols = a.first().map_or(0, |r| r.len());
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn truncate_all(a: &SeriesMatrix, order: i32) -> SeriesMatrix {
    a.iter().map(|r| r.iter().map(|x| x.truncate(order)).collect()).collect()
}

pub fn min_order(a: &SeriesMatrix) -> i32 {
    a.iter().flatten().map(|x| x.valid_order()).min().unwrap_or(i32::MAX)
}

/// Fiber-degree-0 block.
pub fn degree0(a: &SeriesMatrix) -> SeriesMatrix {
    a.iter().map(|r| r.iter().map(|x| x.fiber_part(0)).collect()).collect()
}

/// Whether `a` is the identity at the given order.
pub fn is_identity(a: &SeriesMatrix, order: i32) -> bool {
    a.iter().enumerate().all(|(i, r)| {
        r.iter().enumerate().all(|(j, x)| {
            let x = x.truncate(order);
            if i == j {
                x.len() == 1 && x.is_constant() && x.constant_term() == Rational::from_integer(1.into())
            } else {
                x.is_zero()
            }
        })
    })
}

/// Constant rational matrix if every entry is a pure constant.
pub fn as_constant(a: &SeriesMatrix) -> Option<RatMatrix> {
    a.iter().map(|r| r.iter().map(|x| x.is_constant().then(|| x.constant_term())).collect()).collect()
}

/// Inverse of `m` given an exact inverse `m0_inv` of its fiber-degree-0 block.
///
/// `G = sum_m (-m0_inv * dM)^m * m0_inv` with `dM = m - m0`. The series stops
/// after `order` terms because `dM` has fiber degree at least one.
pub fn matrix_invert(m: &SeriesMatrix, m0_inv: &SeriesMatrix) -> Result<SeriesMatrix> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) || m0_inv.len() != n || m0_inv.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("matrix_invert expects square matrices of equal size".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let order = min_order(m);
    let m0 = degree0(m);
    let seed = degree0(m0_inv);
    if seed != *m0_inv {
        return Err(Error::BadInverseSeed);
    }
    let check_order = order.max(0);
    let left = mat_mul(&truncate_all(&seed, check_order), &truncate_all(&m0, check_order))?;
    let right = mat_mul(&truncate_all(&m0, check_order), &truncate_all(&seed, check_order))?;
    if !is_identity(&left, check_order) || !is_identity(&right, check_order) {
        return Err(Error::BadInverseSeed);
    }
    let dm: SeriesMatrix = m.iter().map(|r| r.iter().map(|x| x.fiber_range(1, u32::MAX)).collect()).collect();
    let step = mat_neg(&mat_mul(&seed, &dm)?);
    let mut power = truncate_all(&seed, order);
    let mut total = power.clone();
    for _ in 0..order.max(0) {
        power = mat_mul(&step, &power)?;
        if power.iter().flatten().all(|x| x.is_zero()) {
            break;
        }
        total = mat_add(&total, &power)?;
    }
    Ok(truncate_all(&total, order))
}

/// Exact inverse of a matrix whose entries are rational constants.
pub fn invert_constant(chart: ChartSpec, m: &SeriesMatrix) -> Result<SeriesMatrix> {
    let c = as_constant(m).ok_or_else(|| Error::Precondition("matrix is not constant".into()))?;
    let inv = linalg::invert(&c).ok_or_else(|| Error::Singular("constant block".into()))?;
    Ok(from_rational(chart, &inv))
}

/// Inverse using the supplied seed if any, otherwise the constant inverse of
/// the degree-0 block (which must then be xi-independent).
pub fn invert_with_optional_seed(m: &SeriesMatrix, seed: Option<&SeriesMatrix>) -> Result<SeriesMatrix> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let chart = *m[0][0].chart();
    match seed {
        Some(s) => matrix_invert(m, s),
        None => {
            let m0 = degree0(m);
            if as_constant(&m0).is_none() {
                return Err(Error::Precondition(
                    "degree-0 block depends on the base; an inverse seed is required".into(),
                ));
            }
            let s = invert_constant(chart, &m0)?;
            matrix_invert(m, &s)
        }
    }
}

pub fn is_zero_matrix(a: &SeriesMatrix) -> bool {
    a.iter().flatten().all(|x| x.is_zero())
}

pub fn scale(a: &SeriesMatrix, c: &Rational) -> SeriesMatrix {
    a.iter().map(|r| r.iter().map(|x| x.scale(c)).collect()).collect()
}
