//! Transitive Lie algebroid data over a symplectic base and the induced
//! coupling tensor.
//!
//! Conventions, with fiber coordinates `x^σ` read as the generators `η^σ`:
//!
//! * `[η^α, η^β] = Σ_ν λ^{αβ}_ν η^ν`, stored as `lambda[α][β][ν]`;
//! * `∇_i η^σ = −Σ_ν θ^σ_{iν} η^ν`, stored as `theta[i][σ][ν]`;
//! * `R_{ijσ}` stored as `r[i][j][σ]`, antisymmetric in `(i, j)`.
//!
//! The geometric data built from these are `Γ_i^σ = Σ_ν θ^σ_{iν} x^ν`,
//! `V^{στ} = Σ_ν λ^{στ}_ν x^ν` and `F_ij = ω_ij − Σ_σ R_{ijσ} x^σ`.

use crate::bundlegeo::{cov_ext_deriv, increasing_tuples, Connection};
use crate::coupling::{assemble, CouplingTensor, GeometricData};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{self, SeriesMatrix};
use crate::multivec::{HForm, Multivector};
use crate::report::{CheckReport, Residual};
use crate::series::{ChartSpec, FiberSeries, Rational, Var};

pub type Tensor3 = Vec<Vec<Vec<FiberSeries>>>;

fn zeros3(chart: ChartSpec, a: usize, b: usize, c: usize) -> Tensor3 {
    vec![vec![vec![FiberSeries::zero(chart); c]; b]; a]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebroidData {
    pub chart: ChartSpec,
    pub lambda: Tensor3,
    pub theta: Tensor3,
    pub r: Tensor3,
    pub omega: SeriesMatrix,
    pub omega_inv: SeriesMatrix,
}

/// An isotropy-valued base 1-form `μ_i^σ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionChange {
    pub mu: Vec<Vec<FiberSeries>>,
}

impl ConnectionChange {
    pub fn zero(chart: ChartSpec) -> Self {
        Self { mu: vec![vec![FiberSeries::zero(chart); chart.fiber_dim]; chart.base_dim] }
    }

    pub fn new(chart: ChartSpec, mu: Vec<Vec<FiberSeries>>) -> Result<Self> {
        if mu.len() != chart.base_dim || mu.iter().any(|r| r.len() != chart.fiber_dim) {
            return Err(Error::Dimension(format!("mu needs {}x{} entries", chart.base_dim, chart.fiber_dim)));
        }
        if mu.iter().flatten().any(|m| !m.is_fiber_independent()) {
            return Err(Error::Precondition("mu entries must depend on the base only".into()));
        }
        Ok(Self { mu })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let mu = self
            .mu
            .iter()
            .zip(&other.mu)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.try_add(y)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mu })
    }
}

impl AlgebroidData {
    /// Everything zero except the symplectic form.
    pub fn zeroed(chart: ChartSpec, omega: SeriesMatrix, omega_inv: SeriesMatrix) -> Self {
        let (n, r) = (chart.base_dim, chart.fiber_dim);
        Self {
            chart,
            lambda: zeros3(chart, r, r, r),
            theta: zeros3(chart, n, r, r),
            r: zeros3(chart, n, n, r),
            omega,
            omega_inv,
        }
    }

    /// Zero data over a constant symplectic form.
    pub fn with_constant_omega(chart: ChartSpec, omega: &linalg::RatMatrix) -> Result<Self> {
        let inv = linalg::invert(omega).ok_or_else(|| Error::Singular("omega".into()))?;
        Ok(Self::zeroed(chart, matrix::from_rational(chart, omega), matrix::from_rational(chart, &inv)))
    }

    /// Set `λ^{αβ}_ν` and its antisymmetric partner.
    pub fn set_lambda(&mut self, a: usize, b: usize, nu: usize, v: FiberSeries) {
        self.lambda[b][a][nu] = -&v;
        self.lambda[a][b][nu] = v;
    }

    pub fn set_theta(&mut self, i: usize, sigma: usize, nu: usize, v: FiberSeries) {
        self.theta[i][sigma][nu] = v;
    }

    /// Set `R_{ijσ}` and its antisymmetric partner.
    pub fn set_r(&mut self, i: usize, j: usize, sigma: usize, v: FiberSeries) {
        self.r[j][i][sigma] = -&v;
        self.r[i][j][sigma] = v;
    }

    /// Check shapes, fiber independence, antisymmetry, `ω ω⁻¹ = 1` and the
    /// fiberwise Jacobi identity.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        if !lambda_jacobi_residual(self).iter().all(|s| s.is_zero()) {
            return Err(Error::Precondition("lambda violates the Jacobi identity".into()));
        }
        Ok(())
    }

    fn check_structure(&self) -> Result<()> {
        let (n, r) = (self.chart.base_dim, self.chart.fiber_dim);
        let shape3 = |t: &Tensor3, a: usize, b: usize, c: usize| {
            t.len() == a && t.iter().all(|x| x.len() == b && x.iter().all(|y| y.len() == c))
        };
        if !shape3(&self.lambda, r, r, r) || !shape3(&self.theta, n, r, r) || !shape3(&self.r, n, n, r) {
            return Err(Error::Dimension("algebroid tensor shapes".into()));
        }
        let sq = |m: &SeriesMatrix| m.len() == n && m.iter().all(|row| row.len() == n);
        if !sq(&self.omega) || !sq(&self.omega_inv) {
            return Err(Error::Dimension("omega must be square of base dimension".into()));
        }
        let all = self
            .lambda
            .iter()
            .chain(&self.theta)
            .chain(&self.r)
            .flatten()
            .flatten()
            .chain(self.omega.iter().flatten())
            .chain(self.omega_inv.iter().flatten());
        for s in all {
            if s.chart().dim() != self.chart.dim() {
                return Err(Error::ChartMismatch);
            }
            if !s.is_fiber_independent() {
                return Err(Error::Precondition("algebroid entries must depend on the base only".into()));
            }
        }
        for a in 0..r {
            for b in 0..r {
                for nu in 0..r {
                    if self.lambda[a][b][nu] != -&self.lambda[b][a][nu] {
                        return Err(Error::Precondition("lambda is not antisymmetric".into()));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if self.omega[i][j] != -&self.omega[j][i] {
                    return Err(Error::Precondition("omega is not antisymmetric".into()));
                }
                for s in 0..r {
                    if self.r[i][j][s] != -&self.r[j][i][s] {
                        return Err(Error::Precondition("R is not antisymmetric".into()));
                    }
                }
            }
        }
        let prod = matrix::mat_mul(&self.omega_inv, &self.omega)?;
        if !matrix::is_identity(&prod, 0) {
            return Err(Error::Precondition("omega_inv is not an inverse of omega".into()));
        }
        Ok(())
    }
}

fn sum(chart: ChartSpec, terms: impl IntoIterator<Item = FiberSeries>) -> FiberSeries {
    terms.into_iter().fold(FiberSeries::zero(chart), |a, b| &a + &b)
}

/// `Σ_κ λ^{αβ}_κ λ^{κγ}_ν + cyclic(α, β, γ)` for all index triples.
pub fn lambda_jacobi_residual(a: &AlgebroidData) -> Vec<FiberSeries> {
    let r = a.chart.fiber_dim;
    let l = &a.lambda;
    let mut out = Vec::new();
    for al in 0..r {
        for be in 0..r {
            for ga in 0..r {
                for nu in 0..r {
                    out.push(sum(
                        a.chart,
                        (0..r).map(|k| {
                            &(&(&l[al][be][k] * &l[k][ga][nu]) + &(&l[be][ga][k] * &l[k][al][nu]))
                                + &(&l[ga][al][k] * &l[k][be][nu])
                        }),
                    ));
                }
            }
        }
    }
    out
}

/// Fiber-linear bivector `Σ_{σ<τ} λ^{στ}_ν x^ν ∂_σ∧∂_τ`, without any check
/// on `λ`.
pub fn linear_poisson(chart: ChartSpec, lambda: &Tensor3) -> Multivector {
    let (b, r) = (chart.base_dim, chart.fiber_dim);
    let mut v = Multivector::zero(chart, 2);
    for s in 0..r {
        for t in s + 1..r {
            let f = sum(chart, (0..r).map(|nu| &lambda[s][t][nu] * &FiberSeries::var(chart, Var::Fiber(nu))));
            v.add_component(&[b + s, b + t], f);
        }
    }
    v
}

/// `(ad R)_{νβ} = Σ_α R_α λ^{αβ}_ν` for an isotropy element `R_α`.
fn ad_matrix(a: &AlgebroidData, elem: &[FiberSeries]) -> SeriesMatrix {
    let r = a.chart.fiber_dim;
    (0..r)
        .map(|nu| (0..r).map(|be| sum(a.chart, (0..r).map(|al| &elem[al] * &a.lambda[al][be][nu]))).collect())
        .collect()
}

/// `(Θ_i)_{νσ} = θ^σ_{iν}`.
fn theta_matrix(a: &AlgebroidData, i: usize) -> SeriesMatrix {
    let r = a.chart.fiber_dim;
    (0..r).map(|nu| (0..r).map(|s| a.theta[i][s][nu].clone()).collect()).collect()
}

/// `(∇_i μ)_ν = ∂_i μ_ν − Σ_σ θ^σ_{iν} μ_σ` for an isotropy element.
fn cov_element(a: &AlgebroidData, i: usize, elem: &[FiberSeries]) -> Vec<FiberSeries> {
    let r = a.chart.fiber_dim;
    (0..r)
        .map(|nu| {
            let d = elem[nu].diff(Var::Base(i));
            &d - &sum(a.chart, (0..r).map(|s| &a.theta[i][s][nu] * &elem[s]))
        })
        .collect()
}

/// `[μ, ν]_κ = Σ μ^α ν^β λ^{αβ}_κ`.
fn bracket_elements(a: &AlgebroidData, x: &[FiberSeries], y: &[FiberSeries]) -> Vec<FiberSeries> {
    let r = a.chart.fiber_dim;
    (0..r)
        .map(|k| {
            sum(
                a.chart,
                (0..r)
                    .flat_map(|al| (0..r).map(move |be| (al, be)))
                    .map(|(al, be)| &(&x[al] * &y[be]) * &a.lambda[al][be][k]),
            )
        })
        .collect()
}

fn residual_list(parts: Vec<FiberSeries>) -> Residual {
    Residual::all(parts.iter().map(Residual::series))
}

/// Exact admissibility checks, identically in the base coordinates.
pub fn check_admissible(a: &AlgebroidData) -> Result<CheckReport> {
    a.check_structure()?;
    let (n, r) = (a.chart.base_dim, a.chart.fiber_dim);
    let l = &a.lambda;
    let th = &a.theta;
    let mut rep = CheckReport::new("algebroid admissibility");

    rep.exact("structure-jacobi", "Jacobi identity of lambda", residual_list(lambda_jacobi_residual(a)));

    let mut parts = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                parts.push(
                    &(&a.omega[j][k].diff(Var::Base(i)) + &a.omega[k][i].diff(Var::Base(j)))
                        + &a.omega[i][j].diff(Var::Base(k)),
                );
            }
        }
    }
    rep.exact("omega-closed", "d omega = 0", residual_list(parts));

    let mut parts = Vec::new();
    for i in 0..n {
        for al in 0..r {
            for be in 0..r {
                for nu in 0..r {
                    let mut acc = l[al][be][nu].diff(Var::Base(i));
                    for k in 0..r {
                        acc = &acc - &(&l[al][be][k] * &th[i][k][nu]);
                        acc = &acc + &(&th[i][al][k] * &l[k][be][nu]);
                        acc = &acc + &(&th[i][be][k] * &l[al][k][nu]);
                    }
                    parts.push(acc);
                }
            }
        }
    }
    rep.exact("bracket-preservation", "nabla preserves lambda", residual_list(parts));

    let mats: Vec<SeriesMatrix> = (0..n).map(|i| theta_matrix(a, i)).collect();
    let mut parts = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let lhs_a = matrix::mat_mul(&mats[i], &mats[j])?;
            let lhs_b = matrix::mat_mul(&mats[j], &mats[i])?;
            let ad = ad_matrix(a, &a.r[i][j]);
            for nu in 0..r {
                for s in 0..r {
                    let v = &(&(&(&mats[i][nu][s].diff(Var::Base(j)) - &mats[j][nu][s].diff(Var::Base(i)))
                        + &lhs_a[nu][s])
                        - &lhs_b[nu][s])
                        - &ad[nu][s];
                    parts.push(v);
                }
            }
        }
    }
    rep.exact("ad-curvature", "curvature of nabla = ad(R)", residual_list(parts));

    let mut parts = Vec::new();
    for t in increasing_tuples(n, 3) {
        let (i, j, k) = (t[0], t[1], t[2]);
        let cyc = [(i, j, k), (j, k, i), (k, i, j)];
        let terms: Vec<Vec<FiberSeries>> = cyc.iter().map(|&(p, q, s)| cov_element(a, p, &a.r[q][s])).collect();
        for nu in 0..r {
            parts.push(&(&terms[0][nu] + &terms[1][nu]) + &terms[2][nu]);
        }
    }
    rep.exact("bianchi-R", "cyclic nabla R = 0", residual_list(parts));
    Ok(rep)
}

/// Geometric data `(Γ, V, 𝔽)` of the algebroid; requires admissibility.
pub fn build_geometric_data(a: &AlgebroidData) -> Result<GeometricData> {
    let rep = check_admissible(a)?;
    if !rep.passed() {
        return Err(Error::Precondition(format!("algebroid data is not admissible:\n{rep}")));
    }
    build_geometric_data_unchecked(a)
}

/// The same construction without the admissibility gate.
pub fn build_geometric_data_unchecked(a: &AlgebroidData) -> Result<GeometricData> {
    let c = a.chart;
    let (n, r) = (c.base_dim, c.fiber_dim);
    let xs: Vec<FiberSeries> = (0..r).map(|s| FiberSeries::var(c, Var::Fiber(s))).collect();
    let lin = |coef: &[FiberSeries]| sum(c, coef.iter().zip(&xs).map(|(k, x)| k * x));
    let gamma: Vec<Vec<FiberSeries>> = (0..n).map(|i| (0..r).map(|s| lin(&a.theta[i][s])).collect()).collect();
    let connection = Connection::new(c, gamma)?;
    let vertical = linear_poisson(c, &a.lambda);
    let mut fform = HForm::zero(c, 2);
    for i in 0..n {
        for j in i + 1..n {
            fform.add(&[i, j], &a.omega[i][j] - &lin(&a.r[i][j]));
        }
    }
    GeometricData::new(connection, vertical, fform, Some(a.omega_inv.clone()))
}

pub fn build_coupling(a: &AlgebroidData) -> Result<CouplingTensor> {
    assemble(&build_geometric_data(a)?)
}

/// Coisotropy of the kernel of `R` with respect to `ω` at each point.
pub fn coisotropy_check(a: &AlgebroidData, points: &[Vec<Rational>]) -> Result<CheckReport> {
    let (n, r) = (a.chart.base_dim, a.chart.fiber_dim);
    let mut rep = CheckReport::new("coisotropy of ker R");
    for (k, pt) in points.iter().enumerate() {
        if pt.len() != n {
            return Err(Error::Dimension(format!("point {} has {} coordinates, expected {n}", k + 1, pt.len())));
        }
        let at = |s: &FiberSeries| s.eval_base(pt).constant_term();
        let mut rows = Vec::new();
        for j in 0..n {
            for s in 0..r {
                rows.push((0..n).map(|i| at(&a.r[i][j][s])).collect::<Vec<_>>());
            }
        }
        let kernel = linalg::nullspace(&rows, n);
        let om: linalg::RatMatrix = a.omega.iter().map(|row| row.iter().map(at).collect()).collect();
        let constraints: linalg::RatMatrix =
            kernel.iter().map(|v| (0..n).map(|b| (0..n).map(|c| &om[b][c] * &v[c]).sum()).collect()).collect();
        let orth = linalg::nullspace(&constraints, n);
        let inside = orth.iter().all(|u| {
            rows.iter()
                .all(|row| row.iter().zip(u).map(|(x, y)| x * y).sum::<Rational>() == Rational::from_integer(0.into()))
        });
        rep.boolean(
            &format!("point-{}", k + 1),
            "ker(R)^omega inside ker(R)",
            inside,
            format!("dim ker R = {}, dim ker(R)^omega = {}", kernel.len(), orth.len()),
        );
    }
    Ok(rep)
}

/// Change the splitting: `∇̃ = ∇ + ad∘μ`, `R̃ = R + ∂_∇μ + ½[μ∧μ]`.
pub fn change_connection(a: &AlgebroidData, m: &ConnectionChange) -> Result<AlgebroidData> {
    let out = change_connection_unchecked(a, m)?;
    let adm = check_admissible(a)?;
    if adm.passed() {
        let rep = check_admissible(&out)?;
        if !rep.passed() {
            return Err(Error::Invariant(format!("connection change produced inadmissible data:\n{rep}")));
        }
    }
    Ok(out)
}

pub fn change_connection_unchecked(a: &AlgebroidData, m: &ConnectionChange) -> Result<AlgebroidData> {
    let c = a.chart;
    let (n, r) = (c.base_dim, c.fiber_dim);
    if m.mu.len() != n || m.mu.iter().any(|row| row.len() != r) {
        return Err(Error::Dimension("mu shape".into()));
    }
    let mut out = a.clone();
    for i in 0..n {
        for s in 0..r {
            for nu in 0..r {
                let corr = sum(c, (0..r).map(|al| &m.mu[i][al] * &a.lambda[al][s][nu]));
                out.theta[i][s][nu] = &a.theta[i][s][nu] - &corr;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let di = cov_element(a, i, &m.mu[j]);
            let dj = cov_element(a, j, &m.mu[i]);
            let br = bracket_elements(a, &m.mu[i], &m.mu[j]);
            for s in 0..r {
                let v = &(&(&a.r[i][j][s] + &di[s]) - &dj[s]) + &br[s];
                out.set_r(i, j, s, v);
            }
        }
    }
    Ok(out)
}

/// `φ_i = Σ_σ μ_i^σ x^σ`.
pub fn phi_of_mu(chart: ChartSpec, m: &ConnectionChange) -> Vec<FiberSeries> {
    m.mu.iter()
        .map(|row| sum(chart, row.iter().enumerate().map(|(s, k)| k * &FiberSeries::var(chart, Var::Fiber(s)))))
        .collect()
}

/// Relations between the geometric data of `a` and of its connection change.
pub fn verify_connection_equivalence(a: &AlgebroidData, m: &ConnectionChange) -> Result<CheckReport> {
    let d1 = build_geometric_data(a)?;
    let d2 = build_geometric_data(&change_connection(a, m)?)?;
    let phi = crate::moser::PhiForm::new(phi_of_mu(a.chart, m))?;
    let mut rep = crate::moser::data_equivalence_check(&d1, &d2, &phi, None)?;
    rep.title = "connection change equivalence".into();
    Ok(rep)
}

/// The relative 2-cocycle `C = R̃ − R − ∂_∇μ − ½[μ∧μ]` with its checks.
pub fn relative_cocycle(a: &AlgebroidData, a2: &AlgebroidData, m: &ConnectionChange) -> Result<(HForm, CheckReport)> {
    let c = a.chart;
    let (n, r) = (c.base_dim, c.fiber_dim);
    if a.lambda != a2.lambda || a.omega != a2.omega {
        return Err(Error::Precondition("the two algebroids must share lambda and omega".into()));
    }
    let changed = change_connection_unchecked(a, m)?;
    if changed.theta != a2.theta {
        return Err(Error::Precondition("the connections do not differ by ad(mu)".into()));
    }
    let mut comps = vec![vec![vec![FiberSeries::zero(c); r]; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            for s in 0..r {
                let v = &a2.r[i][j][s] - &changed.r[i][j][s];
                comps[j][i][s] = -&v;
                comps[i][j][s] = v;
            }
        }
    }
    let xs: Vec<FiberSeries> = (0..r).map(|s| FiberSeries::var(c, Var::Fiber(s))).collect();
    let mut form = HForm::zero(c, 2);
    for i in 0..n {
        for j in i + 1..n {
            form.add(&[i, j], sum(c, comps[i][j].iter().zip(&xs).map(|(k, x)| k * x)));
        }
    }
    let mut rep = CheckReport::new("relative cocycle");
    let mut parts = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for be in 0..r {
                for nu in 0..r {
                    parts.push(sum(c, (0..r).map(|al| &comps[i][j][al] * &a.lambda[al][be][nu])));
                }
            }
        }
    }
    rep.exact("center-valued", "[C, eta] = 0", residual_list(parts));
    let conn = build_geometric_data_unchecked(a)?.connection;
    rep.exact("closed", "d_nabla C = 0", Residual::form(&cov_ext_deriv(&conn, &form)?));
    rep.informational("vanishes", "C = 0", Residual::form(&form));
    Ok((form, rep))
}

/// Change of fiber basis by `G(ξ)`: the data whose geometric data are the
/// pushforward of those of `a` along `x ↦ G x`.
pub fn transform_basis(a: &AlgebroidData, g: &SeriesMatrix, g_inv: &SeriesMatrix) -> Result<AlgebroidData> {
    let c = a.chart;
    let (n, r) = (c.base_dim, c.fiber_dim);
    if !matrix::is_identity(&matrix::mat_mul(g, g_inv)?, 0) {
        return Err(Error::Precondition("g_inv is not an inverse of g".into()));
    }
    let mut out = a.clone();
    for al in 0..r {
        for be in 0..r {
            for k in 0..r {
                let mut acc = FiberSeries::zero(c);
                for s in 0..r {
                    for t in 0..r {
                        if g[al][s].is_zero() || g[be][t].is_zero() {
                            continue;
                        }
                        let gg = &g[al][s] * &g[be][t];
                        for nu in 0..r {
                            acc = &acc + &(&(&gg * &a.lambda[s][t][nu]) * &g_inv[nu][k]);
                        }
                    }
                }
                out.lambda[al][be][k] = acc;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..r {
                out.r[i][j][k] = sum(c, (0..r).map(|nu| &a.r[i][j][nu] * &g_inv[nu][k]));
            }
        }
        for al in 0..r {
            for k in 0..r {
                let mut acc = FiberSeries::zero(c);
                for t in 0..r {
                    for s in 0..r {
                        acc = &acc + &(&(&g[al][t] * &a.theta[i][t][s]) * &g_inv[s][k]);
                    }
                }
                for s in 0..r {
                    acc = &acc - &(&g[al][s].diff(Var::Base(i)) * &g_inv[s][k]);
                }
                out.theta[i][al][k] = acc;
            }
        }
    }
    Ok(out)
}
