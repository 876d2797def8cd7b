//! Parallel transport of the isotropy connection along base paths and the
//! evolution operator relating transports of two connections.

use nalgebra::DMatrix;

use crate::algebroid::{change_connection, check_admissible, AlgebroidData, ConnectionChange};
use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::series::{FloatPoly, Rational};
use num_traits::ToPrimitive;

/// Polyline `σ: [0, 1] → B` with exact breakpoints, uniformly parametrized
/// by segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePath {
    pub points: Vec<Vec<Rational>>,
    pub closed: bool,
}

impl BasePath {
    pub fn new(points: Vec<Vec<Rational>>, closed: bool) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Precondition("a path needs at least two breakpoints".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Dimension("breakpoints of different dimensions".into()));
        }
        if closed && points.first() != points.last() {
            return Err(Error::Precondition("closed path must end where it starts".into()));
        }
        Ok(Self { points, closed })
    }

    /// Closed loop through the given corners.
    pub fn looped(mut corners: Vec<Vec<Rational>>) -> Result<Self> {
        if let Some(first) = corners.first().cloned() {
            corners.push(first);
        }
        Self::new(corners, true)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    fn float_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()).collect()
    }
}

/// `Θ_i` and `ad(e_α)` as float polynomials on the base.
struct Generators {
    n: usize,
    r: usize,
    theta: Vec<Vec<Vec<FloatPoly>>>,
}

impl Generators {
    fn new(a: &AlgebroidData) -> Self {
        let (n, r) = (a.chart.base_dim, a.chart.fiber_dim);
        // (Θ_i)_{νσ} = θ^σ_{iν}
        let theta =
            (0..n).map(|i| (0..r).map(|nu| (0..r).map(|s| a.theta[i][s][nu].to_float()).collect()).collect()).collect();
        Self { n, r, theta }
    }

    fn point(&self, xi: &[f64]) -> Vec<f64> {
        let mut p = xi.to_vec();
        p.resize(self.n + self.r, 0.0);
        p
    }

    /// `M = Σ_i σ'^i Θ_i(σ)`.
    fn generator(&self, xi: &[f64], vel: &[f64]) -> DMatrix<f64> {
        let p = self.point(xi);
        let mut m = DMatrix::zeros(self.r, self.r);
        for (i, v) in vel.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            for nu in 0..self.r {
                for s in 0..self.r {
                    m[(nu, s)] += v * self.theta[i][nu][s].eval(&p);
                }
            }
        }
        m
    }
}

/// `(ad μ(σ'))_{νβ} = Σ_α μ(σ')^α λ^{αβ}_ν`.
struct AdMu {
    n: usize,
    r: usize,
    lambda: Vec<Vec<Vec<FloatPoly>>>,
    mu: Vec<Vec<FloatPoly>>,
}

impl AdMu {
    fn new(a: &AlgebroidData, m: &ConnectionChange) -> Self {
        let r = a.chart.fiber_dim;
        Self {
            n: a.chart.base_dim,
            r,
            lambda: a
                .lambda
                .iter()
                .map(|x| x.iter().map(|y| y.iter().map(|s| s.to_float()).collect()).collect())
                .collect(),
            mu: m.mu.iter().map(|row| row.iter().map(|s| s.to_float()).collect()).collect(),
        }
    }

    fn eval(&self, xi: &[f64], vel: &[f64]) -> DMatrix<f64> {
        let mut p = xi.to_vec();
        p.resize(self.n + self.r, 0.0);
        let mu: Vec<f64> = (0..self.r).map(|al| (0..self.n).map(|i| vel[i] * self.mu[i][al].eval(&p)).sum()).collect();
        DMatrix::from_fn(self.r, self.r, |nu, be| (0..self.r).map(|al| mu[al] * self.lambda[al][be][nu].eval(&p)).sum())
    }
}

/// RK4 over each segment with `max(1, steps / m)` substeps, calling
/// `rhs(ξ, σ', state)`; `visit` sees the state after every substep.
fn integrate<S, F, V>(path: &BasePath, steps: usize, init: S, rhs: F, mut visit: V) -> S
where
    S: Clone + std::ops::Add<Output = S> + std::ops::Mul<f64, Output = S>,
    F: Fn(&[f64], &[f64], &S) -> S,
    V: FnMut(&S),
{
    let pts = path.float_points();
    let m = path.segments();
    let sub = (steps / m).max(1);
    let mut y = init;
    for k in 0..m {
        let (a, b) = (&pts[k], &pts[k + 1]);
        let vel: Vec<f64> = a.iter().zip(b).map(|(x, y)| (y - x) * m as f64).collect();
        let at = |s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect() };
        let h = 1.0 / (m * sub) as f64;
        for q in 0..sub {
            let s0 = q as f64 / sub as f64;
            let ds = 1.0 / sub as f64;
            let (p0, pm, p1) = (at(s0), at(s0 + ds / 2.0), at(s0 + ds));
            let k1 = rhs(&p0, &vel, &y);
            let k2 = rhs(&pm, &vel, &(y.clone() + k1.clone() * (h / 2.0)));
            let k3 = rhs(&pm, &vel, &(y.clone() + k2.clone() * (h / 2.0)));
            let k4 = rhs(&p1, &vel, &(y.clone() + k3.clone() * h));
            y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            visit(&y);
        }
    }
    y
}

fn check_path(a: &AlgebroidData, path: &BasePath) -> Result<()> {
    if path.dim() != a.chart.base_dim {
        return Err(Error::Dimension(format!("path lives in dimension {}, base has {}", path.dim(), a.chart.base_dim)));
    }
    Ok(())
}

/// Fundamental solution at `t = 1` of `dP/dt = M(t) P`, `P(0) = 1`.
pub fn parallel_transport(a: &AlgebroidData, path: &BasePath, steps: usize) -> Result<DMatrix<f64>> {
    check_path(a, path)?;
    if steps == 0 {
        return Err(Error::Precondition("steps must be positive".into()));
    }
    let g = Generators::new(a);
    let id = DMatrix::identity(g.r, g.r);
    Ok(integrate(path, steps, id, |xi, vel, p| g.generator(xi, vel) * p, |_| {}))
}

/// State `(P, T, P̃)` integrated jointly.
#[derive(Clone)]
struct Triple(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);

impl std::ops::Add for Triple {
    type Output = Triple;
    fn add(self, o: Triple) -> Triple {
        Triple(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }
}

impl std::ops::Mul<f64> for Triple {
    type Output = Triple;
    fn mul(self, c: f64) -> Triple {
        Triple(self.0 * c, self.1 * c, self.2 * c)
    }
}

/// Endpoint transports and the grid deviation of one comparison run.
#[derive(Clone, Debug)]
pub struct HolonomyRun {
    /// `max_t ‖P̃_t − P_t T_t‖` over the integration grid.
    pub deviation: f64,
    pub transport: DMatrix<f64>,
    pub moved_transport: DMatrix<f64>,
    pub evolution: DMatrix<f64>,
}

/// Integrate `P`, `P̃` and `dT/dt = Ξ T` with `Ξ = −P⁻¹ (ad μ(σ')) P`
/// jointly along the path.
pub fn holonomy_run(a: &AlgebroidData, m: &ConnectionChange, path: &BasePath, steps: usize) -> Result<HolonomyRun> {
    check_path(a, path)?;
    if steps == 0 {
        return Err(Error::Precondition("steps must be positive".into()));
    }
    let moved = change_connection(a, m)?;
    let g = Generators::new(a);
    let gt = Generators::new(&moved);
    let ad = AdMu::new(a, m);
    let id = DMatrix::identity(g.r, g.r);
    let mut worst: f64 = 0.0;
    let mut singular = false;
    let end = integrate(
        path,
        steps,
        Triple(id.clone(), id.clone(), id),
        |xi, vel, s| {
            let mp = g.generator(xi, vel) * &s.0;
            let pinv = s.0.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(g.r, g.r, f64::NAN));
            let xi_op = -(&pinv * ad.eval(xi, vel) * &s.0);
            Triple(mp, xi_op * &s.1, gt.generator(xi, vel) * &s.2)
        },
        |s| {
            let d = (&s.2 - &s.0 * &s.1).amax();
            if d.is_finite() {
                worst = worst.max(d);
            } else {
                singular = true;
            }
        },
    );
    Ok(HolonomyRun {
        deviation: if singular { f64::INFINITY } else { worst },
        transport: end.0,
        evolution: end.1,
        moved_transport: end.2,
    })
}

pub fn holonomy_deviation(a: &AlgebroidData, m: &ConnectionChange, path: &BasePath, steps: usize) -> Result<f64> {
    Ok(holonomy_run(a, m, path, steps)?.deviation)
}

/// Report comparing transports of `∇` and `∇ + ad∘μ` through `T`.
pub fn holonomy_compare(
    a: &AlgebroidData,
    m: &ConnectionChange,
    path: &BasePath,
    steps: usize,
    tolerance: f64,
) -> Result<CheckReport> {
    if !check_admissible(a)?.passed() {
        return Err(Error::Precondition("algebroid data are not admissible".into()));
    }
    let dev = holonomy_deviation(a, m, path, steps)?;
    let mut rep = CheckReport::new("holonomy comparison");
    rep.numeric("evolution", "P~_t = P_t T_t", dev, tolerance);
    Ok(rep)
}

/// `max |Pᵀ K P − K|` for a bilinear form `K`.
pub fn form_defect(p: &DMatrix<f64>, k: &DMatrix<f64>) -> f64 {
    (p.transpose() * k * p - k).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_symplectic;
    use crate::parse::parse_series;
    use crate::series::{int, rat, ChartSpec, FiberSeries};

    fn p(s: &str, c: ChartSpec) -> FiberSeries {
        parse_series(s, c).unwrap()
    }

    fn so3(c: ChartSpec) -> AlgebroidData {
        let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(1)).unwrap();
        a.set_lambda(0, 1, 2, p("1", c));
        a.set_lambda(1, 2, 0, p("1", c));
        a.set_lambda(2, 0, 1, p("1", c));
        a
    }

    fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut s = 0;
        let norm = a.amax() * a.nrows() as f64;
        while norm / 2f64.powi(s) > 0.5 {
            s += 1;
        }
        let b = a / 2f64.powi(s);
        let mut term = DMatrix::identity(a.nrows(), a.ncols());
        let mut sum = term.clone();
        for k in 1..20 {
            term = &term * &b / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn segment(a: Vec<i64>, b: Vec<i64>) -> BasePath {
        BasePath::new(vec![a.into_iter().map(int).collect(), b.into_iter().map(int).collect()], false).unwrap()
    }

    #[test]
    fn flat_transport_is_identity() {
        let c = ChartSpec::new(2, 3, 2).unwrap();
        let pt = parallel_transport(&so3(c), &segment(vec![0, 0], vec![1, 2]), 10).unwrap();
        assert!((pt - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn constant_generator_matches_exponential() {
        let c = ChartSpec::new(2, 3, 2).unwrap();
        let mu = ConnectionChange::new(c, vec![vec![p("1", c), p("2", c), p("-1", c)], vec![p("0", c); 3]]).unwrap();
        let a = change_connection(&so3(c), &mu).unwrap();
        let g = Generators::new(&a);
        let gen = g.generator(&[0.0, 0.0], &[1.0, 0.0]);
        let pt = parallel_transport(&a, &segment(vec![0, 0], vec![1, 0]), 1000).unwrap();
        assert!((&pt - expm(&gen)).amax() < 1e-8);
        assert!(form_defect(&pt, &DMatrix::identity(3, 3)) < 1e-10);
    }

    #[test]
    fn small_loop_sees_curvature() {
        // Θ_1 = 0, Θ_2 = ξ1 A: the loop around [0,ε]² gives P ≈ 1 + ε² A
        let c = ChartSpec::new(2, 2, 1).unwrap();
        let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(1)).unwrap();
        a.set_theta(1, 1, 0, p("xi1", c));
        let e = rat(1, 100);
        let z = int(0);
        let path = BasePath::looped(vec![
            vec![z.clone(), z.clone()],
            vec![e.clone(), z.clone()],
            vec![e.clone(), e.clone()],
            vec![z.clone(), e.clone()],
        ])
        .unwrap();
        let pt = parallel_transport(&a, &path, 400).unwrap();
        let mut expect = DMatrix::identity(2, 2);
        expect[(0, 1)] = 1e-4;
        assert!((pt - expect).amax() < 1e-9);
    }

    #[test]
    fn evolution_operator() {
        let c = ChartSpec::new(2, 3, 2).unwrap();
        let a = so3(c);
        let path = segment(vec![0, 0], vec![1, 1]);
        let zero = ConnectionChange::zero(c);
        assert!(holonomy_deviation(&a, &zero, &path, 50).unwrap() < 1e-14);
        let mu = ConnectionChange::new(
            c,
            vec![vec![p("1", c), p("xi2", c), p("0", c)], vec![p("0", c), p("1", c), p("xi1", c)]],
        )
        .unwrap();
        let rep = holonomy_compare(&a, &mu, &path, 1000, 1e-8).unwrap();
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn closed_path_must_close() {
        let pts = vec![vec![int(0), int(0)], vec![int(1), int(0)]];
        assert!(BasePath::new(pts, true).is_err());
    }
}
