//! Exact construction and verification of coupling Poisson tensors on a
//! fiber-bundle chart.

#![allow(clippy::needless_range_loop)]

pub mod algebroid;
pub mod bundlegeo;
pub mod coupling;
pub mod error;
pub mod holonomy;
pub mod linalg;
pub mod linearize;
pub mod matrix;
pub mod moser;
pub mod multivec;
pub mod parse;
pub mod report;
pub mod series;

pub use algebroid::{
    build_coupling, build_geometric_data, change_connection, check_admissible, coisotropy_check, relative_cocycle,
    verify_connection_equivalence, AlgebroidData, ConnectionChange,
};
pub use bundlegeo::{cov_ext_deriv, curvature, hor_lift, Connection};
pub use coupling::{assemble, decompose, theorem21_equivalence_test, verify_theorem21, CouplingTensor, GeometricData};
pub use error::{Error, Result};
pub use holonomy::{holonomy_compare, holonomy_run, parallel_transport, BasePath, HolonomyRun};
pub use linearize::{extract_algebroid, first_approx_check, linearize_data};
pub use moser::{
    build_family, data_equivalence_check, numeric_pullback_check, phi_bracket, solve_homological, verify_lemma31,
    FiberLinearMap, HomotopyFamily, PhiForm,
};
pub use multivec::{apply_vector, interior, jacobiator, lie_derivative, schouten, wedge, HForm, Multivector};
pub use parse::{parse_series, parse_series_flagged, Parsed};
pub use report::{CheckEntry, CheckReport};
pub use series::{int, rat, ChartSpec, FiberSeries, Monomial, Rational, Var};
