//! Geometric data `(Γ, V, 𝔽)` and coupling tensors: assembly,
//! decomposition and the compatibility conditions.

use crate::bundlegeo::{cov_ext_deriv, curvature, hor_apply, hor_lift, Connection};
use crate::error::{Error, Result};
use crate::matrix::{self, SeriesMatrix};
use crate::multivec::{jacobiator, schouten, wedge, HForm, Multivector};
use crate::report::{CheckReport, Residual};
use crate::series::{ChartSpec, FiberSeries, Var};

/// A connection, a vertical bivector and a function-valued base 2-form,
/// together with an exact inverse of the form's fiber-degree-0 block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricData {
    pub connection: Connection,
    pub vertical: Multivector,
    pub fform: HForm,
    pub fform_inv_seed: SeriesMatrix,
}

impl GeometricData {
    /// Validate and bundle. Without a seed, the degree-0 block of `𝔽` must be
    /// constant so that its inverse can be computed exactly.
    pub fn new(
        connection: Connection,
        vertical: Multivector,
        fform: HForm,
        seed: Option<SeriesMatrix>,
    ) -> Result<Self> {
        let chart = *connection.chart();
        if vertical.degree() != 2 {
            return Err(Error::WrongDegree { expected: 2, found: vertical.degree() });
        }
        if fform.degree() != 2 {
            return Err(Error::WrongDegree { expected: 2, found: fform.degree() });
        }
        if vertical.chart().dim() != chart.dim() || fform.chart().dim() != chart.dim() {
            return Err(Error::ChartMismatch);
        }
        if !vertical.is_vertical() {
            return Err(Error::Precondition("vertical bivector has a base direction".into()));
        }
        let f0 = matrix::degree0(&fform.matrix());
        let seed = match seed {
            Some(s) => s,
            None => matrix::invert_constant(chart, &f0).map_err(|e| match e {
                Error::Precondition(_) => Error::Precondition(
                    "fiber-degree-0 part of the 2-form depends on the base; supply an inverse seed".into(),
                ),
                other => other,
            })?,
        };
        matrix::matrix_invert(&f0, &seed)?;
        Ok(Self { connection, vertical, fform, fform_inv_seed: seed })
    }

    pub fn chart(&self) -> &ChartSpec {
        self.connection.chart()
    }

    pub fn valid_order(&self) -> i32 {
        self.connection.valid_order().min(self.vertical.valid_order()).min(self.fform.valid_order())
    }

    pub fn truncate(&self, order: i32) -> Self {
        Self {
            connection: self.connection.truncate(order),
            vertical: self.vertical.truncate(order),
            fform: self.fform.truncate(order),
            fform_inv_seed: self.fform_inv_seed.clone(),
        }
    }

    /// `H = −𝔽⁻¹`, so that `Σ_s H^{is} F_{sj} = −δ^i_j`.
    pub fn h_matrix(&self) -> Result<SeriesMatrix> {
        let g = matrix::matrix_invert(&self.fform.matrix(), &self.fform_inv_seed)?;
        Ok(matrix::mat_neg(&g))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingTensor {
    pub pi: Multivector,
    pub data: GeometricData,
    pub certified_order: i32,
}

/// `Σ_{i<j} H^{ij} hor(∂_i)∧hor(∂_j)`.
pub fn horizontal_bivector(connection: &Connection, h: &SeriesMatrix) -> Result<Multivector> {
    let chart = *connection.chart();
    let n = chart.base_dim;
    let lifts: Vec<Multivector> = (0..n).map(|i| hor_lift(connection, i)).collect::<Result<_>>()?;
    let mut out = Multivector::zero(chart, 2);
    for i in 0..n {
        for j in i + 1..n {
            if h[i][j].is_zero() {
                continue;
            }
            let w = wedge(&lifts[i], &lifts[j])?.mul_function(&h[i][j]);
            out = out.try_add(&w)?;
        }
    }
    Ok(out.truncate(matrix::min_order(h)))
}

pub fn assemble(data: &GeometricData) -> Result<CouplingTensor> {
    let h = data.h_matrix()?;
    let pi = horizontal_bivector(&data.connection, &h)?.try_add(&data.vertical)?;
    let certified_order = pi.valid_order();
    Ok(CouplingTensor { pi, data: data.clone(), certified_order })
}

/// Base block `Π^{ij}`.
pub fn base_block(pi: &Multivector) -> SeriesMatrix {
    let n = pi.chart().base_dim;
    (0..n).map(|i| (0..n).map(|j| pi.get(&[i, j])).collect()).collect()
}

/// Split a horizontally nondegenerate bivector into geometric data.
///
/// `seed`, if given, must be an exact inverse of the fiber-degree-0 base
/// block of `pi`; otherwise that block must be constant.
pub fn decompose(pi: &Multivector, seed: Option<&SeriesMatrix>) -> Result<GeometricData> {
    if pi.degree() != 2 {
        return Err(Error::WrongDegree { expected: 2, found: pi.degree() });
    }
    let chart = *pi.chart();
    let (n, r) = (chart.base_dim, chart.fiber_dim);
    let p = base_block(pi);
    let p0 = matrix::degree0(&p);
    let pinv = matrix::invert_with_optional_seed(&p, seed).map_err(|e| match e {
        Error::Singular(_) => Error::Singular("base block of the bivector (not horizontally nondegenerate)".into()),
        other => other,
    })?;
    let mut gamma = vec![vec![FiberSeries::zero(chart); r]; n];
    for (j, row) in gamma.iter_mut().enumerate() {
        for (s, g) in row.iter_mut().enumerate() {
            let mut acc = FiberSeries::zero_with_order(chart, pi.valid_order());
            for (a, pa) in pinv[j].iter().enumerate() {
                acc = &acc - &(pa * &pi.get(&[a, n + s]));
            }
            *g = acc;
        }
    }
    let connection = Connection::new(chart, gamma)?;
    let fmat = matrix::mat_neg(&pinv);
    let fform = HForm::two_form(chart, &fmat)?;
    let horizontal = horizontal_bivector(&connection, &p)?;
    let vertical = pi.try_sub(&horizontal)?;
    if !vertical.is_vertical() {
        return Err(Error::Invariant("decomposition left a non-vertical remainder".into()));
    }
    let seed_out = matrix::mat_neg(&p0);
    GeometricData::new(connection, vertical, fform, Some(seed_out))
}

/// `V^#(df)`, the vertical field with components `Σ_ν ∂_ν f · V^{νσ}`.
pub fn vertical_hamiltonian(v: &Multivector, f: &FiberSeries) -> Result<Multivector> {
    let chart = *v.chart();
    let b = chart.base_dim;
    let mut comps = vec![FiberSeries::zero_with_order(chart, v.valid_order().min(f.valid_order() - 1)); chart.dim()];
    let df: Vec<FiberSeries> = (0..chart.fiber_dim).map(|nu| f.diff(Var::Fiber(nu))).collect();
    for s in 0..chart.fiber_dim {
        let mut acc = comps[b + s].clone();
        for (nu, d) in df.iter().enumerate() {
            if nu != s {
                acc = acc.try_add(&d.try_mul(&v.get(&[b + nu, b + s]))?)?;
            }
        }
        comps[b + s] = acc;
    }
    Multivector::vector(chart, &comps)
}

/// Conditions of the correspondence on geometric data, each as an exact
/// residual.
pub fn verify_theorem21(data: &GeometricData) -> Result<CheckReport> {
    let mut rep = CheckReport::new("geometric data conditions");
    let chart = *data.chart();
    let n = chart.base_dim;
    let v = &data.vertical;
    let gamma = &data.connection;

    rep.exact("vertical-jacobi", "[[V,V]] = 0", Residual::multivector(&jacobiator(v)?));

    let mut parts = Vec::new();
    for i in 0..n {
        parts.push(Residual::multivector(&schouten(&hor_lift(gamma, i)?, v)?));
    }
    rep.exact("poisson-connection", "L_hor(d_i) V = 0", Residual::all(parts));

    let dgf = cov_ext_deriv(gamma, &data.fform)?;
    rep.exact("bianchi-F", "d_Gamma F = 0", Residual::form(&dgf));

    let mut parts = Vec::new();
    for ((i, j), curv) in curvature(gamma)? {
        let ham = vertical_hamiltonian(v, &data.fform.get(&[i, j]))?;
        parts.push(Residual::multivector(&curv.try_sub(&ham)?));
    }
    rep.exact("curvature-identity", "Curv_ij = V#(dF_ij)", Residual::all(parts));

    let mut parts = Vec::new();
    for val in dgf.values().values() {
        parts.push(Residual::multivector(&vertical_hamiltonian(v, val)?));
    }
    if parts.is_empty() {
        parts.push(Residual::multivector(&Multivector::zero_with_order(chart, 1, dgf.valid_order() - 1)));
    }
    rep.informational("casimir-valued-bianchi", "V#(d (d_Gamma F)) = 0", Residual::all(parts));
    Ok(rep)
}

/// Checks that the conditions hold exactly when the assembled tensor is
/// Poisson, comparing both at their common certified order.
pub fn theorem21_equivalence_test(data: &GeometricData) -> Result<CheckReport> {
    let conditions = verify_theorem21(data)?;
    let tensor = assemble(data)?;
    let jac = jacobiator(&tensor.pi)?;
    let order = conditions
        .entries
        .iter()
        .filter(|e| e.gating)
        .filter_map(|e| e.certified_order)
        .chain([jac.valid_order()])
        .min()
        .unwrap();
    let cond_ok = conditions_pass_at(data, order)?;
    let jac_t = jac.truncate(order);
    let mut rep = CheckReport::new("conditions versus Jacobi identity");
    rep.informational("conditions", "geometric data conditions", residual_of(cond_ok, order, &conditions));
    rep.informational("jacobiator", "[[Pi,Pi]] = 0", Residual::multivector(&jac_t));
    rep.boolean(
        "biconditional",
        "conditions hold <=> [[Pi,Pi]] = 0",
        cond_ok == jac_t.is_zero(),
        format!("conditions={} jacobi={} at order {}", cond_ok, jac_t.is_zero(), order),
    );
    Ok(rep)
}

fn residual_of(ok: bool, order: i32, rep: &CheckReport) -> Residual {
    let summary = if ok {
        "0".to_string()
    } else {
        rep.entries
            .iter()
            .filter(|e| e.gating && !e.passed)
            .map(|e| format!("{}: {}", e.name, e.residual))
            .collect::<Vec<_>>()
            .join("; ")
    };
    Residual { zero: ok, order, summary }
}

/// Whether all gating conditions vanish through fiber degree `order`.
fn conditions_pass_at(data: &GeometricData, order: i32) -> Result<bool> {
    let chart = *data.chart();
    let n = chart.base_dim;
    let v = &data.vertical;
    let gamma = &data.connection;
    if !jacobiator(v)?.truncate(order).is_zero() {
        return Ok(false);
    }
    for i in 0..n {
        if !schouten(&hor_lift(gamma, i)?, v)?.truncate(order).is_zero() {
            return Ok(false);
        }
    }
    if !cov_ext_deriv(gamma, &data.fform)?.truncate(order).is_zero() {
        return Ok(false);
    }
    for ((i, j), curv) in curvature(gamma)? {
        let ham = vertical_hamiltonian(v, &data.fform.get(&[i, j]))?;
        if !curv.try_sub(&ham)?.truncate(order).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Residual of horizontality: each assembled horizontal term annihilates the
/// vertical coframe `dx^σ + Σ_i Γ_i^σ dξ^i`.
pub fn horizontality_residual(data: &GeometricData) -> Result<Vec<Multivector>> {
    let chart = *data.chart();
    let (n, r) = (chart.base_dim, chart.fiber_dim);
    let h = data.h_matrix()?;
    let horiz = horizontal_bivector(&data.connection, &h)?;
    let mut out = Vec::new();
    for s in 0..r {
        let mut alpha = vec![FiberSeries::zero(chart); chart.dim()];
        for (i, a) in alpha.iter_mut().enumerate().take(n) {
            *a = data.connection.gamma(i, s).clone();
        }
        alpha[n + s] = FiberSeries::one(chart);
        out.push(crate::multivec::interior(&alpha, &horiz)?);
    }
    Ok(out)
}

/// Apply `hor(∂_i)` of `data` to a function.
pub fn hor_derivative(data: &GeometricData, i: usize, f: &FiberSeries) -> FiberSeries {
    hor_apply(&data.connection, i, f)
}
