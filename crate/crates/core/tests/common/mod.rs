#![allow(dead_code)]

use coupling_core::algebroid::{change_connection, transform_basis, AlgebroidData, ConnectionChange};
use coupling_core::linalg::{self, RatMatrix};
use coupling_core::matrix::{self, SeriesMatrix};
use coupling_core::moser::{family_unchecked, PhiForm};
use coupling_core::{int, rat, ChartSpec, FiberSeries, GeometricData, HForm, Monomial, Multivector, Rational, Var};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_coeff(rng: &mut ChaCha8Rng) -> Rational {
    let v = [-2i64, -1, 1, 2, 3];
    let d = [1i64, 1, 1, 2];
    rat(*v.choose(rng).unwrap(), *d.choose(rng).unwrap())
}

/// Random monomial with base degree ≤ `base_deg` and fiber degree in
/// `fiber_lo..=fiber_hi`.
fn rand_monomial(rng: &mut ChaCha8Rng, c: ChartSpec, base_deg: u32, fiber_lo: u32, fiber_hi: u32) -> Monomial {
    let mut e = vec![0u16; c.dim()];
    let bd = rng.gen_range(0..=base_deg);
    for _ in 0..bd {
        if c.base_dim > 0 {
            e[rng.gen_range(0..c.base_dim)] += 1;
        }
    }
    let fd = rng.gen_range(fiber_lo..=fiber_hi);
    for _ in 0..fd {
        if c.fiber_dim > 0 {
            e[c.base_dim + rng.gen_range(0..c.fiber_dim)] += 1;
        }
    }
    Monomial::from_exponents(e)
}

pub fn rand_series(
    rng: &mut ChaCha8Rng,
    c: ChartSpec,
    terms: usize,
    base_deg: u32,
    fiber_lo: u32,
    fiber_hi: u32,
) -> FiberSeries {
    let ts: Vec<_> =
        (0..terms).map(|_| (rand_monomial(rng, c, base_deg, fiber_lo, fiber_hi), small_coeff(rng))).collect();
    FiberSeries::from_terms(c, c.order(), ts)
}

pub fn rand_base_poly(rng: &mut ChaCha8Rng, c: ChartSpec, terms: usize, deg: u32) -> FiberSeries {
    rand_series(rng, c, terms, deg, 0, 0)
}

/// Multivector with random components: degree ≤ 3, at most `max_comps`
/// components.
pub fn rand_multivector(rng: &mut ChaCha8Rng, c: ChartSpec, degree: usize, max_comps: usize) -> Multivector {
    let mut m = Multivector::zero(c, degree);
    let comps = rng.gen_range(1..=max_comps.max(1));
    for _ in 0..comps {
        let mut idx: Vec<usize> = (0..c.dim()).collect();
        idx.shuffle(rng);
        idx.truncate(degree);
        let terms = rng.gen_range(1..=2);
        let s = rand_series(rng, c, terms, 2, 0, c.trunc_order);
        m.add_component(&idx, s);
    }
    m
}

/// Brute-force Schouten bracket: each term of `A` and `B` is written as a
/// wedge of vector fields, and the full antisymmetric tensor of the result
/// is accumulated by permutation sums.
pub mod oracle {
    use super::*;

    type Field = Vec<FiberSeries>;

    fn coordinate(c: ChartSpec, i: usize, coeff: &FiberSeries) -> Field {
        (0..c.dim()).map(|k| if k == i { coeff.clone() } else { FiberSeries::zero(c) }).collect()
    }

    fn apply(x: &Field, f: &FiberSeries) -> FiberSeries {
        let c = *f.chart();
        x.iter().enumerate().fold(FiberSeries::zero(c), |acc, (l, xl)| &acc + &(xl * &f.diff_index(l)))
    }

    fn lie(x: &Field, y: &Field) -> Field {
        (0..x.len()).map(|k| &apply(x, &y[k]) - &apply(y, &x[k])).collect()
    }

    fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
        if n == 0 {
            return vec![(vec![], 1)];
        }
        let mut out = Vec::new();
        for (p, s) in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                let sign = if (p.len() - pos) % 2 == 0 { s } else { -s };
                out.push((q, sign));
            }
        }
        out
    }

    /// Full tensor component `(v_1∧…∧v_m)^{k_1…k_m} = det(v_a^{k_b})`.
    fn wedge_component(vs: &[Field], ks: &[usize], perms: &[(Vec<usize>, i32)]) -> FiberSeries {
        let c = *vs[0][0].chart();
        let mut acc = FiberSeries::zero(c);
        for (p, s) in perms {
            let mut term = FiberSeries::one(c);
            for (a, &pa) in p.iter().enumerate() {
                term = &term * &vs[pa][ks[a]];
                if term.is_zero() {
                    break;
                }
            }
            acc = if *s > 0 { &acc + &term } else { &acc - &term };
        }
        acc
    }

    fn decomposed(m: &Multivector) -> Vec<Vec<Field>> {
        let c = *m.chart();
        m.components()
            .iter()
            .map(|(idx, coeff)| {
                idx.iter()
                    .enumerate()
                    .map(|(a, &i)| coordinate(c, i, &if a == 0 { coeff.clone() } else { FiberSeries::one(c) }))
                    .collect()
            })
            .collect()
    }

    fn increasing(n: usize, len: usize) -> Vec<Vec<usize>> {
        fn go(start: usize, n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == len {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                go(i + 1, n, len, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(0, n, len, &mut Vec::new(), &mut out);
        out
    }

    /// `[[A, f]] = Σ_a (−1)^{p−a} X_a(f) X_1∧…X̂_a…∧X_p` (1-based `a`).
    fn with_function(terms: &[Vec<Field>], f: &FiberSeries, p: usize) -> Vec<(Vec<Field>, FiberSeries)> {
        let mut out = Vec::new();
        for xs in terms {
            for a in 0..p {
                let mut rest: Vec<Field> = xs.clone();
                let xa = rest.remove(a);
                let val = apply(&xa, f);
                let sign = if (p - 1 - a).is_multiple_of(2) { 1 } else { -1 };
                out.push((rest, if sign > 0 { val } else { -val }));
            }
        }
        out
    }

    pub fn schouten(a: &Multivector, b: &Multivector) -> Multivector {
        let c = *a.chart();
        let (p, q) = (a.degree(), b.degree());
        if p == 0 && q == 0 {
            return Multivector::zero(c, 0);
        }
        let deg = p + q - 1;
        // pieces: (vector fields, scalar factor)
        let mut pieces: Vec<(Vec<Field>, FiberSeries)> = Vec::new();
        if q == 0 {
            pieces = with_function(&decomposed(a), &b.get(&[]), p);
        } else if p == 0 {
            // [[f, B]] = −(−1)^{q−1} [[B, f]]
            let flip = q % 2 == 0;
            for (vs, s) in with_function(&decomposed(b), &a.get(&[]), q) {
                pieces.push((vs, if flip { s } else { -s }));
            }
        } else {
            for xs in decomposed(a) {
                for ys in decomposed(b) {
                    for i in 0..p {
                        for j in 0..q {
                            let mut v = vec![lie(&xs[i], &ys[j])];
                            v.extend(xs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, x)| x.clone()));
                            v.extend(ys.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, y)| y.clone()));
                            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                            let one = FiberSeries::one(c);
                            pieces.push((v, if sign > 0 { one } else { -one }));
                        }
                    }
                }
            }
        }
        let perms = permutations(deg);
        let mut out = Multivector::zero(c, deg);
        for ks in increasing(c.dim(), deg) {
            let mut acc = FiberSeries::zero(c);
            for (vs, s) in &pieces {
                let comp = if deg == 0 { FiberSeries::one(c) } else { wedge_component(vs, &ks, &perms) };
                acc = &acc + &(&comp * s);
            }
            out.add_component(&ks, acc);
        }
        out
    }
}

/// Both multivectors agree through their common certified order.
pub fn agree(a: &Multivector, b: &Multivector) -> bool {
    let o = a.valid_order().min(b.valid_order());
    a.truncate(o).try_sub(&b.truncate(o)).map(|d| d.is_zero()).unwrap_or(false)
}

pub fn series_agree(a: &FiberSeries, b: &FiberSeries) -> bool {
    let o = a.valid_order().min(b.valid_order());
    (&a.truncate(o) - &b.truncate(o)).is_zero()
}

pub fn form_agree(a: &HForm, b: &HForm) -> bool {
    let o = a.valid_order().min(b.valid_order());
    a.truncate(o).try_sub(&b.truncate(o)).map(|d| d.is_zero()).unwrap_or(false)
}

/// Geometric data agree component-wise through the common order.
pub fn data_agree(a: &GeometricData, b: &GeometricData) -> bool {
    let conn = a
        .connection
        .coefficients()
        .iter()
        .flatten()
        .zip(b.connection.coefficients().iter().flatten())
        .all(|(x, y)| series_agree(x, y));
    conn && agree(&a.vertical, &b.vertical) && form_agree(&a.fform, &b.fform)
}

/// Constant symplectic form `Aᵀ J A` for a random unimodular `A`.
pub fn rand_omega(rng: &mut ChaCha8Rng, k: usize) -> RatMatrix {
    let n = 2 * k;
    let j = linalg::standard_symplectic(k);
    let mut a = linalg::identity(n);
    for _ in 0..rng.gen_range(0..3) {
        let (r, s) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if r != s {
            let c = int(rng.gen_range(-1..=1));
            for row in a.iter_mut() {
                let v = &row[s] * &c;
                row[r] += v;
            }
        }
    }
    let at: RatMatrix = (0..n).map(|i| (0..n).map(|l| a[l][i].clone()).collect()).collect();
    linalg::mat_mul(&linalg::mat_mul(&at, &j), &a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Abelian,
    So3,
    Heisenberg,
}

pub fn rand_change(rng: &mut ChaCha8Rng, c: ChartSpec, deg: u32) -> ConnectionChange {
    let mu = (0..c.base_dim)
        .map(|_| {
            (0..c.fiber_dim)
                .map(|_| if rng.gen_bool(0.5) { rand_base_poly(rng, c, 1, deg) } else { FiberSeries::zero(c) })
                .collect()
        })
        .collect();
    ConnectionChange::new(c, mu).unwrap()
}

fn closed_two_form(rng: &mut ChaCha8Rng, c: ChartSpec) -> Vec<Vec<FiberSeries>> {
    let n = c.base_dim;
    let mut out = vec![vec![FiberSeries::zero(c); n]; n];
    if n == 2 {
        let f = rand_base_poly(rng, c, 2, 1);
        out[0][1] = f.clone();
        out[1][0] = -f;
    } else {
        // R = dA
        let a: Vec<FiberSeries> = (0..n).map(|_| rand_base_poly(rng, c, 1, 2)).collect();
        for i in 0..n {
            for j in 0..n {
                out[i][j] = &a[j].diff(Var::Base(i)) - &a[i].diff(Var::Base(j));
            }
        }
    }
    out
}

/// Admissible algebroid data of the requested kind, moved by a random
/// connection change and, for abelian data, a unipotent change of basis.
pub fn rand_admissible(rng: &mut ChaCha8Rng, kind: Kind, order: u32) -> AlgebroidData {
    let k = if kind == Kind::So3 { 1 } else { rng.gen_range(1..=2) };
    let r = match kind {
        Kind::Abelian => rng.gen_range(1..=2),
        _ => 3,
    };
    let c = ChartSpec::new(2 * k, r, order).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &rand_omega(rng, k)).unwrap();
    let one = FiberSeries::one(c);
    match kind {
        Kind::Abelian => {
            for s in 0..r {
                let f = closed_two_form(rng, c);
                for i in 0..c.base_dim {
                    for j in i + 1..c.base_dim {
                        a.set_r(i, j, s, f[i][j].clone());
                    }
                }
            }
        }
        Kind::So3 => {
            a.set_lambda(0, 1, 2, one.clone());
            a.set_lambda(1, 2, 0, one.clone());
            a.set_lambda(2, 0, 1, one);
        }
        Kind::Heisenberg => {
            a.set_lambda(0, 1, 2, one);
            let f = closed_two_form(rng, c);
            for i in 0..c.base_dim {
                for j in i + 1..c.base_dim {
                    a.set_r(i, j, 2, f[i][j].clone());
                }
            }
        }
    }
    let deg = if kind == Kind::Abelian { 2 } else { 1 };
    let mut a = change_connection(&a, &rand_change(rng, c, deg)).unwrap();
    if kind == Kind::Abelian && r == 2 && rng.gen_bool(0.5) {
        let f = rand_base_poly(rng, c, 1, 1);
        let g = vec![vec![FiberSeries::one(c), f.clone()], vec![FiberSeries::zero(c), FiberSeries::one(c)]];
        let gi = vec![vec![FiberSeries::one(c), -f], vec![FiberSeries::zero(c), FiberSeries::one(c)]];
        a = transform_basis(&a, &g, &gi).unwrap();
    }
    a
}

pub fn rand_kind(rng: &mut ChaCha8Rng) -> Kind {
    *[Kind::Abelian, Kind::So3, Kind::Heisenberg].choose(rng).unwrap()
}

/// `φ` vanishing on the zero section, with fiber degree `lo..=hi` terms.
pub fn rand_phi(rng: &mut ChaCha8Rng, c: ChartSpec, lo: u32, hi: u32) -> PhiForm {
    let phi = (0..c.base_dim).map(|_| rand_series(rng, c, 2, 1, lo.max(1), hi)).collect();
    PhiForm::new(phi).unwrap()
}

pub fn rand_t(rng: &mut ChaCha8Rng) -> Rational {
    [rat(1, 2), int(1), rat(-1, 3), int(2)].choose(rng).unwrap().clone()
}

/// Valid geometric data: algebroid-built, sometimes deformed along a
/// Moser family.
pub fn rand_valid_data(rng: &mut ChaCha8Rng, order: u32) -> GeometricData {
    let kind = rand_kind(rng);
    let a = rand_admissible(rng, kind, order);
    let d = coupling_core::build_geometric_data(&a).unwrap();
    if rng.gen_bool(0.5) {
        let phi = rand_phi(rng, a.chart, 2, 2);
        let fam = family_unchecked(&d, &phi).unwrap();
        if let Ok(dt) = fam.data_at(&rand_t(rng)) {
            return dt;
        }
    }
    d
}

/// Break exactly one kind of ingredient of valid data.
pub fn mutate(rng: &mut ChaCha8Rng, d: &GeometricData) -> GeometricData {
    let c = *d.chart();
    let (n, r) = (c.base_dim, c.fiber_dim);
    let mut choices = vec![];
    if n == 4 {
        choices.push(0);
    }
    if r >= 2 {
        choices.push(1);
        choices.push(2);
    }
    if choices.is_empty() {
        choices.push(3);
    }
    let coeff = FiberSeries::constant(c, small_coeff(rng));
    match *choices.choose(rng).unwrap() {
        0 => {
            // F_ij += c ξ^a x^κ with a ∉ {i, j}; the fiber factor keeps F₀
            let (i, j) = (rng.gen_range(0..2), rng.gen_range(2..4));
            let a = *[0usize, 1, 2, 3].iter().filter(|a| **a != i && **a != j).collect::<Vec<_>>().choose(rng).unwrap();
            let mut f = d.fform.clone();
            let x = FiberSeries::var(c, Var::Fiber(rng.gen_range(0..r)));
            f.add(&[i, j], &(&coeff * &FiberSeries::var(c, Var::Base(*a))) * &x);
            GeometricData::new(d.connection.clone(), d.vertical.clone(), f, Some(d.fform_inv_seed.clone())).unwrap()
        }
        1 => {
            let (i, s, k) = (rng.gen_range(0..n), rng.gen_range(0..r), rng.gen_range(0..r));
            let mut gamma = d.connection.coefficients().to_vec();
            gamma[i][s] = &gamma[i][s] + &(&coeff * &FiberSeries::var(c, Var::Fiber(k)));
            let conn = coupling_core::Connection::new(c, gamma).unwrap();
            GeometricData::new(conn, d.vertical.clone(), d.fform.clone(), Some(d.fform_inv_seed.clone())).unwrap()
        }
        2 => {
            let (s, t) = (rng.gen_range(0..r), rng.gen_range(0..r));
            let mut v = d.vertical.clone();
            if s != t {
                let k = rng.gen_range(0..r);
                let x = FiberSeries::var(c, Var::Fiber(k));
                v.add_component(&[n + s, n + t], &coeff * &x);
            }
            GeometricData::new(d.connection.clone(), v, d.fform.clone(), Some(d.fform_inv_seed.clone())).unwrap()
        }
        _ => {
            // Γ_i += c ξ^j x ∂_x on a line bundle makes the curvature miss V^#
            let mut gamma = d.connection.coefficients().to_vec();
            let x = FiberSeries::var(c, Var::Fiber(0));
            gamma[0][0] = &gamma[0][0] + &(&(&coeff * &FiberSeries::var(c, Var::Base(1))) * &x);
            let conn = coupling_core::Connection::new(c, gamma).unwrap();
            GeometricData::new(conn, d.vertical.clone(), d.fform.clone(), Some(d.fform_inv_seed.clone())).unwrap()
        }
    }
}

pub fn series_matrix_from(c: ChartSpec, m: &RatMatrix) -> SeriesMatrix {
    matrix::from_rational(c, m)
}

pub fn algebroid_agree(a: &AlgebroidData, b: &AlgebroidData) -> bool {
    let t3 = |x: &Vec<Vec<Vec<FiberSeries>>>, y: &Vec<Vec<Vec<FiberSeries>>>| {
        x.iter().flatten().flatten().zip(y.iter().flatten().flatten()).all(|(u, v)| series_agree(u, v))
    };
    let m = |x: &SeriesMatrix, y: &SeriesMatrix| {
        x.iter().flatten().zip(y.iter().flatten()).all(|(u, v)| series_agree(u, v))
    };
    t3(&a.lambda, &b.lambda)
        && t3(&a.theta, &b.theta)
        && t3(&a.r, &b.r)
        && m(&a.omega, &b.omega)
        && m(&a.omega_inv, &b.omega_inv)
}

/// Scaling-and-squaring Taylor exponential.
pub fn expm(a: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let mut s = 0;
    let norm = a.amax() * a.nrows() as f64;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let b = a / 2f64.powi(s);
    let mut term = nalgebra::DMatrix::identity(a.nrows(), a.ncols());
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
