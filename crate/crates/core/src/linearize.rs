//! First approximations of coupling data at the zero-section leaf.

use crate::algebroid::{check_admissible, AlgebroidData};
use crate::coupling::{assemble, GeometricData};
use crate::error::{Error, Result};
use crate::matrix;
use crate::multivec::{HForm, Multivector};
use crate::report::{CheckReport, Residual};

/// The zero section must be a symplectic leaf: `V` and `Γ` vanish there.
fn check_leaf(data: &GeometricData) -> Result<()> {
    if data.vertical.components().values().any(|c| !c.fiber_part(0).is_zero()) {
        return Err(Error::Precondition("vertical bivector does not vanish on the zero section".into()));
    }
    if data.connection.coefficients().iter().flatten().any(|g| !g.fiber_part(0).is_zero()) {
        return Err(Error::Precondition("connection is not tangent to the zero section".into()));
    }
    Ok(())
}

/// Keep the fiber-linear parts of `Γ` and `V` and the fiber-affine part of `𝔽`.
pub fn linearize_data(data: &GeometricData) -> Result<GeometricData> {
    check_leaf(data)?;
    let chart = *data.chart();
    let conn = data.connection.map(|g| g.fiber_part(1));
    let mut v = Multivector::zero_with_order(chart, 2, data.vertical.valid_order());
    for (k, c) in data.vertical.components() {
        v.add_component(k, c.fiber_part(1));
    }
    let mut f = HForm::zero_with_order(chart, 2, data.fform.valid_order());
    for (k, c) in data.fform.values() {
        f.add(k, c.fiber_range(0, 1));
    }
    GeometricData::new(conn, v, f, Some(data.fform_inv_seed.clone()))
}

/// Read off the transitive algebroid of the leaf from the linear model.
pub fn extract_algebroid(data: &GeometricData) -> Result<AlgebroidData> {
    check_leaf(data)?;
    let chart = *data.chart();
    let (n, r) = (chart.base_dim, chart.fiber_dim);
    let fm = data.fform.matrix();
    let omega: matrix::SeriesMatrix = fm.iter().map(|row| row.iter().map(|c| c.fiber_part(0)).collect()).collect();
    let mut a = AlgebroidData::zeroed(chart, omega, data.fform_inv_seed.clone());
    for al in 0..r {
        for be in al + 1..r {
            let v = data.vertical.get(&[n + al, n + be]);
            for nu in 0..r {
                a.set_lambda(al, be, nu, v.linear_coefficient(nu));
            }
        }
    }
    for i in 0..n {
        for s in 0..r {
            for nu in 0..r {
                a.set_theta(i, s, nu, data.connection.gamma(i, s).linear_coefficient(nu));
            }
        }
        for j in i + 1..n {
            for s in 0..r {
                a.set_r(i, j, s, -fm[i][j].linear_coefficient(s));
            }
        }
    }
    a.validate()?;
    let rep = check_admissible(&a)?;
    if !rep.passed() {
        return Err(Error::Invariant(format!("linear model of valid data is not admissible:\n{rep}")));
    }
    Ok(a)
}

/// `Π(full) − Π(approx)` must have no terms of fiber degree below 2.
pub fn first_approx_check(full: &GeometricData, approx: &GeometricData) -> Result<CheckReport> {
    check_leaf(full)?;
    check_leaf(approx)?;
    let a = assemble(full)?;
    let b = assemble(approx)?;
    let diff = a.pi.try_sub(&b.pi)?;
    let mut rep = CheckReport::new("first approximation");
    for deg in 0..2u32 {
        let mut low = Multivector::zero_with_order(*full.chart(), 2, diff.valid_order());
        for (k, c) in diff.components() {
            low.add_component(k, c.fiber_part(deg));
        }
        rep.exact(&format!("fiber-degree-{deg}"), "Pi(full) - Pi(approx) = O(2)", Residual::multivector(&low));
    }
    Ok(rep)
}
