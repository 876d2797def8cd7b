//! Fixtures shared by the benchmarks.

use coupling_core::linalg::standard_symplectic;
use coupling_core::matrix::SeriesMatrix;
use coupling_core::{parse_series, AlgebroidData, ChartSpec, FiberSeries, GeometricData};

fn s(text: &str, c: ChartSpec) -> FiberSeries {
    parse_series(text, c).expect("fixture expression")
}

/// Abelian line bundle with `R = dξ1∧dξ2`.
pub fn e1(order: u32) -> AlgebroidData {
    let c = ChartSpec::new(2, 1, order).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(1)).unwrap();
    a.set_r(0, 1, 0, s("1", c));
    a
}

/// so(3) isotropy over the plane, flat.
pub fn so3(order: u32) -> AlgebroidData {
    let c = ChartSpec::new(2, 3, order).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(1)).unwrap();
    a.set_lambda(0, 1, 2, s("1", c));
    a.set_lambda(1, 2, 0, s("1", c));
    a.set_lambda(2, 0, 1, s("1", c));
    a
}

/// Heisenberg isotropy over a 4-dimensional base with central curvature.
pub fn heisenberg(order: u32) -> AlgebroidData {
    let c = ChartSpec::new(4, 3, order).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(2)).unwrap();
    a.set_lambda(0, 1, 2, s("1", c));
    a.set_r(2, 3, 2, s("xi3", c));
    a.set_r(0, 1, 2, s("1", c));
    a
}

/// The base block of `𝔽` for `data`, for inversion benchmarks.
pub fn fform_block(data: &GeometricData) -> (SeriesMatrix, SeriesMatrix) {
    let m = data.fform.matrix();
    (m, data.fform_inv_seed.clone())
}
