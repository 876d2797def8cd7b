//! Homotopy families of geometric data, the homological equation and the
//! verification of the infinitesimal Moser identity.

use nalgebra::{DMatrix, DVector};

use crate::bundlegeo::{cov_ext_deriv, hor_lift, Connection};
use crate::coupling::{horizontal_bivector, verify_theorem21, vertical_hamiltonian, GeometricData};
use crate::error::{Error, Result};
use crate::matrix::{self, SeriesMatrix};
use crate::multivec::{schouten, wedge, HForm, Multivector};
use crate::report::{CheckReport, Residual};
use crate::series::{int, rat, ChartSpec, FiberSeries, FloatPoly, Rational, Var};

/// Base 1-form with function values vanishing on the zero section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiForm {
    pub phi: Vec<FiberSeries>,
}

impl PhiForm {
    pub fn new(phi: Vec<FiberSeries>) -> Result<Self> {
        if phi.iter().any(|f| !f.fiber_part(0).is_zero()) {
            return Err(Error::Precondition("phi must vanish on the zero section".into()));
        }
        Ok(Self { phi })
    }

    pub fn zero(chart: ChartSpec) -> Self {
        Self { phi: vec![FiberSeries::zero(chart); chart.base_dim] }
    }

    pub fn as_form(&self) -> Result<HForm> {
        let chart = *self.phi[0].chart();
        HForm::one_form(chart, &self.phi)
    }
}

/// `V(α, β) = Σ V^{στ} α_σ β_τ` for the fiber differentials of two functions.
fn v_pair(v: &Multivector, f: &FiberSeries, g: &FiberSeries) -> Result<FiberSeries> {
    let chart = *v.chart();
    let b = chart.base_dim;
    let mut acc =
        FiberSeries::zero_with_order(chart, v.valid_order().min(f.valid_order() - 1).min(g.valid_order() - 1));
    for (key, c) in v.components() {
        let (s, t) = (key[0] - b, key[1] - b);
        let fs = f.diff(Var::Fiber(s));
        let ft = f.diff(Var::Fiber(t));
        let gs = g.diff(Var::Fiber(s));
        let gt = g.diff(Var::Fiber(t));
        let term = fs.try_mul(&gt)?.try_sub(&ft.try_mul(&gs)?)?;
        acc = acc.try_add(&c.try_mul(&term)?)?;
    }
    Ok(acc)
}

/// `{φ₁∧φ₂}_ij = V(dφ₁_i, dφ₂_j) − V(dφ₁_j, dφ₂_i)`, so that
/// `½{φ∧φ}_ij = V(dφ_i, dφ_j)`.
pub fn phi_bracket(phi1: &PhiForm, phi2: &PhiForm, v: &Multivector) -> Result<HForm> {
    if !v.is_vertical() || v.degree() != 2 {
        return Err(Error::Precondition("phi_bracket needs a vertical bivector".into()));
    }
    let chart = *v.chart();
    let n = chart.base_dim;
    if phi1.phi.len() != n || phi2.phi.len() != n {
        return Err(Error::Dimension("phi arity".into()));
    }
    let mut out = HForm::zero(chart, 2);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let a = v_pair(v, &phi1.phi[i], &phi2.phi[j])?;
            let b = v_pair(v, &phi1.phi[j], &phi2.phi[i])?;
            entries.push(((i, j), a.try_sub(&b)?));
        }
    }
    let order = entries.iter().map(|(_, e)| e.valid_order()).min().unwrap_or(chart.order()).min(v.valid_order() - 1);
    out = out.truncate(order);
    for ((i, j), e) in entries {
        out.add(&[i, j], e);
    }
    Ok(out)
}

/// `(Γ_t, V, 𝔽_t)` with `Γ_t = Γ − t V^#(dφ)` and
/// `𝔽_t = 𝔽 − t ∂_Γφ − (t²/2){φ∧φ}`.
#[derive(Clone, Debug)]
pub struct HomotopyFamily {
    pub base: GeometricData,
    pub phi: PhiForm,
    /// `Z_i = V^#(dφ_i)`.
    pub z: Vec<Multivector>,
    /// `∂_Γφ`.
    pub dphi: HForm,
    /// `{φ∧φ}`.
    pub bracket: HForm,
}

impl HomotopyFamily {
    pub fn chart(&self) -> &ChartSpec {
        self.base.chart()
    }

    pub fn connection_at(&self, t: &Rational) -> Result<Connection> {
        let chart = *self.chart();
        let b = chart.base_dim;
        let gamma: Vec<Vec<FiberSeries>> = (0..b)
            .map(|i| {
                (0..chart.fiber_dim)
                    .map(|s| self.base.connection.gamma(i, s) - &self.z[i].get(&[b + s]).scale(t))
                    .collect()
            })
            .collect();
        Connection::new(chart, gamma)
    }

    pub fn fform_at(&self, t: &Rational) -> Result<HForm> {
        let half_t2 = t * t * rat(1, 2);
        self.base.fform.try_sub(&self.dphi.scale(t))?.try_sub(&self.bracket.scale(&half_t2))
    }

    /// `∂_t 𝔽_t = −∂_Γφ − t{φ∧φ}`.
    pub fn fform_rate(&self, t: &Rational) -> Result<HForm> {
        self.dphi.neg().try_sub(&self.bracket.scale(t))
    }

    pub fn data_at(&self, t: &Rational) -> Result<GeometricData> {
        let f = self.fform_at(t)?;
        let f0 = matrix::degree0(&f.matrix());
        let seed = if matrix::matrix_invert(&f0, &self.base.fform_inv_seed).is_ok() {
            self.base.fform_inv_seed.clone()
        } else {
            matrix::invert_constant(*self.chart(), &f0).map_err(|_| {
                Error::Singular(format!("2-form of the family at t = {t} has no available inverse seed"))
            })?
        };
        GeometricData::new(self.connection_at(t)?, self.base.vertical.clone(), f, Some(seed))
    }
}

/// Build the family; each sampled `t` is checked against the data
/// conditions, and degenerate samples are reported rather than fatal.
pub fn build_family(
    data: &GeometricData,
    phi: &PhiForm,
    t_samples: &[Rational],
) -> Result<(HomotopyFamily, CheckReport)> {
    if !verify_theorem21(data)?.passed() {
        return Err(Error::Precondition("base data does not satisfy the geometric data conditions".into()));
    }
    let fam = family_unchecked(data, phi)?;
    let mut rep = CheckReport::new("homotopy family");
    for t in t_samples {
        match fam.data_at(t) {
            Ok(d) => {
                let r = verify_theorem21(&d)?;
                rep.absorb(&format!("t={t}/"), r);
            }
            Err(Error::Singular(m)) => {
                rep.boolean(&format!("t={t}/nondegenerate"), "F_t invertible on the zero section", false, m);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((fam, rep))
}

pub fn family_unchecked(data: &GeometricData, phi: &PhiForm) -> Result<HomotopyFamily> {
    let chart = *data.chart();
    if phi.phi.len() != chart.base_dim {
        return Err(Error::Dimension("phi needs one entry per base direction".into()));
    }
    let z = phi.phi.iter().map(|f| vertical_hamiltonian(&data.vertical, f)).collect::<Result<Vec<_>>>()?;
    let dphi = cov_ext_deriv(&data.connection, &phi.as_form()?)?;
    let bracket = phi_bracket(phi, phi, &data.vertical)?;
    Ok(HomotopyFamily { base: data.clone(), phi: phi.clone(), z, dphi, bracket })
}

/// Solve `X_t ⌋ 𝔽_t = φ`, i.e. `Σ_s X^s (F_t)_{sj} = φ_j`.
pub fn solve_homological(fam: &HomotopyFamily, t: &Rational) -> Result<Vec<FiberSeries>> {
    let d = fam.data_at(t)?;
    let h = d.h_matrix()?;
    let n = fam.chart().base_dim;
    let x: Vec<FiberSeries> = (0..n)
        .map(|s| (0..n).fold(FiberSeries::zero(*fam.chart()), |acc, j| &acc + &(&h[s][j] * &fam.phi.phi[j])))
        .collect();
    let f = d.fform.matrix();
    for j in 0..n {
        let lhs = (0..n).fold(FiberSeries::zero(*fam.chart()), |acc, s| &acc + &(&x[s] * &f[s][j]));
        let res = &lhs - &fam.phi.phi[j];
        if !res.is_zero() {
            return Err(Error::Invariant(format!("homological equation residual in component {}", j + 1)));
        }
    }
    Ok(x)
}

/// `X^h = Σ X^i hor_t(∂_i)`.
pub fn horizontal_field(fam: &HomotopyFamily, t: &Rational, x: &[FiberSeries]) -> Result<Multivector> {
    let conn = fam.connection_at(t)?;
    let chart = *fam.chart();
    let mut out = Multivector::zero(chart, 1);
    for (i, xi) in x.iter().enumerate() {
        out = out.try_add(&hor_lift(&conn, i)?.mul_function(xi))?;
    }
    Ok(out)
}

/// `Π_t` and its exact `t`-derivative.
pub fn tensor_and_rate(fam: &HomotopyFamily, t: &Rational) -> Result<(Multivector, Multivector)> {
    let d = fam.data_at(t)?;
    let chart = *fam.chart();
    let n = chart.base_dim;
    let h = d.h_matrix()?;
    let pi = horizontal_bivector(&d.connection, &h)?.try_add(&d.vertical)?;
    let rate_f = fam.fform_rate(t)?.matrix();
    let dh = matrix::mat_mul(&matrix::mat_mul(&h, &rate_f)?, &h)?;
    let lifts: Vec<Multivector> = (0..n).map(|i| hor_lift(&d.connection, i)).collect::<Result<_>>()?;
    let mut rate = horizontal_bivector(&d.connection, &dh)?;
    for i in 0..n {
        for j in i + 1..n {
            if h[i][j].is_zero() {
                continue;
            }
            let a = wedge(&fam.z[i], &lifts[j])?;
            let b = wedge(&lifts[i], &fam.z[j])?;
            rate = rate.try_add(&a.try_add(&b)?.mul_function(&h[i][j]))?;
        }
    }
    Ok((pi, rate))
}

/// Default `t` samples.
pub fn default_t_samples() -> Vec<Rational> {
    vec![int(0), rat(1, 4), rat(1, 2), rat(3, 4), int(1)]
}

/// Exact verification of the infinitesimal Moser identity for the family.
pub fn verify_lemma31(fam: &HomotopyFamily, t_samples: &[Rational]) -> Result<CheckReport> {
    let mut rep = CheckReport::new("Moser homotopy identity");
    let form = fam.phi.as_form()?;
    let c0 = cov_ext_deriv(&fam.connection_at(&int(0))?, &form)?;
    let c1 = cov_ext_deriv(&fam.connection_at(&int(1))?, &form)?;
    let slope = c1.try_sub(&c0)?;
    let part1 = Residual::all([Residual::form(&c0.try_sub(&fam.dphi)?), Residual::form(&slope.try_sub(&fam.bracket)?)]);
    rep.exact("closing-identity", "d_{Gamma_t} phi = d_Gamma phi + t {phi^phi}", part1);
    for t in t_samples {
        let x = solve_homological(fam, t)?;
        let xh = horizontal_field(fam, t, &x)?;
        let on_zero: Vec<FiberSeries> = xh.components().values().map(|c| c.fiber_part(0)).collect();
        rep.boolean(
            &format!("t={t}/vanishes-on-zero-section"),
            "X_t^h = 0 on the zero section",
            on_zero.iter().all(|c| c.is_zero()),
            "degree-0 part of X_t^h",
        );
        let (pi, rate) = tensor_and_rate(fam, t)?;
        let res = schouten(&xh, &pi)?.try_add(&rate)?;
        rep.exact(&format!("t={t}/homotopy"), "L_{X_t^h} Pi_t + d/dt Pi_t = 0", Residual::multivector(&res));
    }
    Ok(rep)
}

/// Float images of the data needed to evaluate `Π_t` and `X_t` pointwise.
struct NumericFamily {
    n: usize,
    r: usize,
    gamma: Vec<Vec<FloatPoly>>,
    z: Vec<Vec<FloatPoly>>,
    f: Vec<Vec<FloatPoly>>,
    dphi: Vec<Vec<FloatPoly>>,
    bracket: Vec<Vec<FloatPoly>>,
    phi: Vec<FloatPoly>,
    v: Vec<Vec<FloatPoly>>,
}

/// Failure of a point's flow to stay in the chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Escape(pub String);

impl NumericFamily {
    fn new(fam: &HomotopyFamily) -> Self {
        let chart = *fam.chart();
        let (n, r) = (chart.base_dim, chart.fiber_dim);
        let fl = |m: &[Vec<FiberSeries>]| -> Vec<Vec<FloatPoly>> {
            m.iter().map(|row| row.iter().map(|s| s.to_float()).collect()).collect()
        };
        Self {
            n,
            r,
            gamma: fl(fam.base.connection.coefficients()),
            z: fam.z.iter().map(|zi| (0..r).map(|s| zi.get(&[n + s]).to_float()).collect()).collect(),
            f: fl(&fam.base.fform.matrix()),
            dphi: fl(&fam.dphi.matrix()),
            bracket: fl(&fam.bracket.matrix()),
            phi: fam.phi.phi.iter().map(|s| s.to_float()).collect(),
            v: (0..r).map(|s| (0..r).map(|t| fam.base.vertical.get(&[n + s, n + t]).to_float()).collect()).collect(),
        }
    }

    fn h(&self, t: f64, p: &[f64]) -> std::result::Result<DMatrix<f64>, Escape> {
        let n = self.n;
        let f = DMatrix::from_fn(n, n, |i, j| {
            self.f[i][j].eval(p) - t * self.dphi[i][j].eval(p) - 0.5 * t * t * self.bracket[i][j].eval(p)
        });
        let inv = f.try_inverse().ok_or_else(|| Escape("2-form singular along the flow".into()))?;
        Ok(-inv)
    }

    /// Rows are `hor_t(∂_i)` over all directions.
    fn lifts(&self, t: f64, p: &[f64]) -> DMatrix<f64> {
        let (n, r) = (self.n, self.r);
        DMatrix::from_fn(n, n + r, |i, a| {
            if a < n {
                (i == a) as u8 as f64
            } else {
                let s = a - n;
                -(self.gamma[i][s].eval(p) - t * self.z[i][s].eval(p))
            }
        })
    }

    fn field(&self, t: f64, p: &[f64]) -> std::result::Result<DVector<f64>, Escape> {
        let h = self.h(t, p)?;
        let phi = DVector::from_iterator(self.n, self.phi.iter().map(|f| f.eval(p)));
        let x = &h * phi;
        Ok(self.lifts(t, p).transpose() * x)
    }

    fn tensor(&self, t: f64, p: &[f64]) -> std::result::Result<DMatrix<f64>, Escape> {
        let (n, r) = (self.n, self.r);
        let h = self.h(t, p)?;
        let l = self.lifts(t, p);
        let mut pi = l.transpose() * h * l;
        for s in 0..r {
            for u in 0..r {
                pi[(n + s, n + u)] += self.v[s][u].eval(p);
            }
        }
        Ok(pi)
    }

    fn flow(&self, p: &[f64], steps: usize) -> std::result::Result<DVector<f64>, Escape> {
        let dt = 1.0 / steps as f64;
        let mut y = DVector::from_column_slice(p);
        for k in 0..steps {
            let t = k as f64 * dt;
            let k1 = self.field(t, y.as_slice())?;
            let k2 = self.field(t + dt / 2.0, (&y + &k1 * (dt / 2.0)).as_slice())?;
            let k3 = self.field(t + dt / 2.0, (&y + &k2 * (dt / 2.0)).as_slice())?;
            let k4 = self.field(t + dt, (&y + &k3 * dt).as_slice())?;
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            if !y.iter().all(|v| v.is_finite()) || y.amax() > 1e6 {
                return Err(Escape(format!("state left the chart at t = {:.3}", t + dt)));
            }
        }
        Ok(y)
    }
}

const FD_STEP: f64 = 1e-3;

/// Max componentwise deviation of `Φ₁^* Π₁` from `Π₀` at `point`.
pub fn pullback_deviation(fam: &HomotopyFamily, point: &[f64], steps: usize) -> std::result::Result<f64, Escape> {
    let nf = NumericFamily::new(fam);
    pullback_deviation_with(&nf, point, steps)
}

fn pullback_deviation_with(nf: &NumericFamily, point: &[f64], steps: usize) -> std::result::Result<f64, Escape> {
    let dim = point.len();
    let end = nf.flow(point, steps)?;
    let mut jac = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let shifted = |m: f64| -> std::result::Result<DVector<f64>, Escape> {
            let mut q = point.to_vec();
            q[k] += m * FD_STEP;
            nf.flow(&q, steps)
        };
        let col = (shifted(-2.0)? - shifted(2.0)? + (shifted(1.0)? - shifted(-1.0)?) * 8.0) / (12.0 * FD_STEP);
        jac.set_column(k, &col);
    }
    let jinv = jac.try_inverse().ok_or_else(|| Escape("flow Jacobian singular".into()))?;
    let pulled = &jinv * nf.tensor(1.0, end.as_slice())? * jinv.transpose();
    let orig = nf.tensor(0.0, point)?;
    Ok((pulled - orig).amax())
}

/// Integrates the flow of `X_t^h`, pulls `Π₁` back and compares with `Π₀`.
pub fn numeric_pullback_check(
    fam: &HomotopyFamily,
    sample_points: &[Vec<f64>],
    steps: usize,
    tolerance: f64,
) -> Result<CheckReport> {
    let dim = fam.chart().dim();
    if steps == 0 {
        return Err(Error::Precondition("steps must be positive".into()));
    }
    let nf = NumericFamily::new(fam);
    let mut rep = CheckReport::new("numeric Moser pullback");
    for (k, p) in sample_points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::Dimension(format!("sample point {} needs {dim} coordinates", k + 1)));
        }
        let name = format!("point-{}", k + 1);
        match pullback_deviation_with(&nf, p, steps) {
            Ok(dev) => rep.numeric(&name, "pullback of Pi_1 equals Pi_0", dev, tolerance),
            Err(Escape(m)) => rep.boolean(&name, "pullback of Pi_1 equals Pi_0", false, format!("escaped: {m}")),
        }
    }
    Ok(rep)
}

/// Least-squares slope of `log(deviation)` against `log(1/steps)`.
pub fn convergence_order(fam: &HomotopyFamily, point: &[f64], steps: &[usize]) -> std::result::Result<f64, Escape> {
    let nf = NumericFamily::new(fam);
    let mut pts = Vec::new();
    for &s in steps {
        let d = pullback_deviation_with(&nf, point, s)?;
        pts.push(((1.0 / s as f64).ln(), d.ln()));
    }
    Ok(fit_slope(&pts))
}

pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Fiber-linear bundle map `(ξ, x) ↦ (ξ, G(ξ) x)` with its exact inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberLinearMap {
    pub g: SeriesMatrix,
    pub g_inv: SeriesMatrix,
}

impl FiberLinearMap {
    pub fn new(g: SeriesMatrix, g_inv: SeriesMatrix) -> Result<Self> {
        if g.iter().chain(&g_inv).flatten().any(|s| !s.is_fiber_independent()) {
            return Err(Error::Precondition("g must depend on the base only".into()));
        }
        let a = matrix::mat_mul(&g, &g_inv)?;
        let b = matrix::mat_mul(&g_inv, &g)?;
        if !matrix::is_identity(&a, 0) || !matrix::is_identity(&b, 0) {
            return Err(Error::Precondition("g is not invertible with the supplied inverse".into()));
        }
        Ok(Self { g, g_inv })
    }

    pub fn identity(chart: ChartSpec) -> Self {
        let id = matrix::identity(chart, chart.fiber_dim);
        Self { g: id.clone(), g_inv: id }
    }

    pub fn inverse(&self) -> Self {
        Self { g: self.g_inv.clone(), g_inv: self.g.clone() }
    }

    fn images(&self, chart: ChartSpec) -> Vec<FiberSeries> {
        let r = chart.fiber_dim;
        (0..r)
            .map(|s| {
                (0..r).fold(FiberSeries::zero(chart), |acc, t| {
                    &acc + &(&self.g[s][t] * &FiberSeries::var(chart, Var::Fiber(t)))
                })
            })
            .collect()
    }
}

/// Pull geometric data back along `x ↦ G x`.
pub fn pullback_data(d: &GeometricData, map: &FiberLinearMap) -> Result<GeometricData> {
    let chart = *d.chart();
    let (n, r) = (chart.base_dim, chart.fiber_dim);
    let img = map.images(chart);
    let sub = |s: &FiberSeries| s.substitute_fiber(&img);
    let gi = &map.g_inv;
    let mut v = Multivector::zero(chart, 2);
    let vt: Vec<Vec<FiberSeries>> = (0..r)
        .map(|c| (0..r).map(|e| sub(&d.vertical.get(&[n + c, n + e]))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    for a in 0..r {
        for b in a + 1..r {
            let mut acc = FiberSeries::zero(chart);
            for c in 0..r {
                for e in 0..r {
                    if !vt[c][e].is_zero() {
                        acc = &acc + &(&(&gi[a][c] * &vt[c][e]) * &gi[b][e]);
                    }
                }
            }
            v.add_component(&[n + a, n + b], acc);
        }
    }
    let xs: Vec<FiberSeries> = (0..r).map(|t| FiberSeries::var(chart, Var::Fiber(t))).collect();
    let mut gamma = vec![vec![FiberSeries::zero(chart); r]; n];
    for (i, row) in gamma.iter_mut().enumerate() {
        let shifted: Vec<FiberSeries> = (0..r)
            .map(|c| {
                let moved = sub(d.connection.gamma(i, c))?;
                let dg =
                    (0..r).fold(FiberSeries::zero(chart), |acc, t| &acc + &(&map.g[c][t].diff(Var::Base(i)) * &xs[t]));
                Ok(&moved + &dg)
            })
            .collect::<Result<_>>()?;
        for (a, g) in row.iter_mut().enumerate() {
            *g = (0..r).fold(FiberSeries::zero(chart), |acc, c| &acc + &(&gi[a][c] * &shifted[c]));
        }
    }
    let mut f = HForm::zero(chart, 2);
    for (k, val) in d.fform.values() {
        f.add(k, sub(val)?);
    }
    GeometricData::new(Connection::new(chart, gamma)?, v, f, Some(d.fform_inv_seed.clone()))
}

pub fn pushforward_data(d: &GeometricData, map: &FiberLinearMap) -> Result<GeometricData> {
    pullback_data(d, &map.inverse())
}

/// Checks that `d2` pulled back by `g` equals `d1` transformed by `φ`.
pub fn data_equivalence_check(
    d1: &GeometricData,
    d2: &GeometricData,
    phi: &PhiForm,
    g: Option<&FiberLinearMap>,
) -> Result<CheckReport> {
    let e = match g {
        Some(map) => pullback_data(d2, map)?,
        None => d2.clone(),
    };
    let fam = family_unchecked(d1, phi)?;
    let one = int(1);
    let mut rep = CheckReport::new("data equivalence");
    let dv = e.vertical.try_sub(&d1.vertical)?;
    rep.exact("vertical", "g*V2 = V1", Residual::multivector(&dv));
    let target = fam.connection_at(&one)?;
    let parts: Vec<Residual> =
        e.connection.try_sub(&target)?.coefficients().iter().flatten().map(Residual::series).collect();
    rep.exact("connection", "g*Gamma2 = Gamma1 - V1#(dphi)", Residual::all(parts));
    let df = e.fform.try_sub(&fam.fform_at(&one)?)?;
    rep.exact("form", "g*F2 = F1 - d_Gamma1 phi - 1/2 {phi^phi}", Residual::form(&df));
    Ok(rep)
}
