#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use coupling_core::algebroid::{change_connection, relative_cocycle, transform_basis};
use coupling_core::holonomy::{form_defect, holonomy_run};
use coupling_core::linalg::standard_symplectic;
use coupling_core::matrix;
use coupling_core::moser::{build_family, default_t_samples, family_unchecked, pullback_data, pushforward_data};
use coupling_core::*;
use nalgebra::DMatrix;
use rand::Rng;

fn s(t: &str, c: ChartSpec) -> FiberSeries {
    parse_series(t, c).unwrap()
}

#[test]
fn oracle_agrees_on_graded_antisymmetry_inputs() {
    let mut rng = rng(11);
    let c = ChartSpec::new(2, 2, 2).unwrap();
    for _ in 0..30 {
        let p = rng.gen_range(1..=2);
        let q = rng.gen_range(1..=2);
        let a = rand_multivector(&mut rng, c, p, 2);
        let b = rand_multivector(&mut rng, c, q, 2);
        let ab = schouten(&a, &b).unwrap();
        let ba = schouten(&b, &a).unwrap();
        let sign = if ((p - 1) * (q - 1)) % 2 == 0 { -1 } else { 1 };
        let flipped = ba.scale(&int(sign));
        assert!(agree(&ab, &flipped));
        assert!(agree(&ab, &oracle::schouten(&a, &b)));
    }
}

#[test]
fn basis_change_matches_pushforward() {
    let mut rng = rng(12);
    for _ in 0..10 {
        let a = rand_admissible(&mut rng, Kind::Abelian, 3);
        let c = a.chart;
        if c.fiber_dim < 2 {
            continue;
        }
        let f = rand_base_poly(&mut rng, c, 2, 1);
        let g = vec![vec![FiberSeries::one(c), f.clone()], vec![FiberSeries::zero(c), FiberSeries::one(c)]];
        let gi = vec![vec![FiberSeries::one(c), -f], vec![FiberSeries::zero(c), FiberSeries::one(c)]];
        let b = transform_basis(&a, &g, &gi).unwrap();
        assert!(check_admissible(&b).unwrap().passed());
        let map = FiberLinearMap::new(g, gi).unwrap();
        let da = build_geometric_data(&a).unwrap();
        let db = build_geometric_data(&b).unwrap();
        assert!(data_agree(&pushforward_data(&da, &map).unwrap(), &db));
        assert!(data_agree(&pullback_data(&db, &map).unwrap(), &da));
        let zero = PhiForm::zero(c);
        assert!(data_equivalence_check(&da, &db, &zero, Some(&map)).unwrap().passed());
    }
}

#[test]
fn isotropy_scaling_is_a_basis_change() {
    // x ↦ 2x on Heisenberg data rescales λ^{12}_3 by 2
    let c = ChartSpec::new(2, 3, 2).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(1)).unwrap();
    a.set_lambda(0, 1, 2, s("1", c));
    let two = matrix::scale(&matrix::identity(c, 3), &int(2));
    let half = matrix::scale(&matrix::identity(c, 3), &rat(1, 2));
    let b = transform_basis(&a, &two, &half).unwrap();
    assert_eq!(b.lambda[0][1][2].to_string(), "2");
}

#[test]
fn linearization_ignores_second_order_changes() {
    let mut rng = rng(13);
    for _ in 0..8 {
        let kind = rand_kind(&mut rng);
        let a = rand_admissible(&mut rng, kind, 3);
        let d = build_geometric_data(&a).unwrap();
        let phi = rand_phi(&mut rng, a.chart, 2, 2);
        let fam = family_unchecked(&d, &phi).unwrap();
        let moved = fam.data_at(&rand_t(&mut rng)).unwrap();
        assert!(verify_theorem21(&moved).unwrap().passed());
        let lin = linearize_data(&moved).unwrap();
        assert!(data_agree(&lin, &d));
        assert!(data_agree(&linearize_data(&lin).unwrap(), &lin));
        assert!(first_approx_check(&moved, &d).unwrap().passed());
        assert!(algebroid_agree(&extract_algebroid(&moved).unwrap(), &a));
    }
}

#[test]
fn family_reports_pass_on_random_data() {
    let mut rng = rng(14);
    for _ in 0..4 {
        let kind = rand_kind(&mut rng);
        let a = rand_admissible(&mut rng, kind, 3);
        let d = build_geometric_data(&a).unwrap();
        let phi = rand_phi(&mut rng, a.chart, 1, 2);
        let (fam, rep) = build_family(&d, &phi, &default_t_samples()).unwrap();
        assert!(rep.passed(), "{rep}");
        let x = solve_homological(&fam, &rat(1, 3)).unwrap();
        assert_eq!(x.len(), a.chart.base_dim);
    }
}

#[test]
fn lagrangian_kernel_is_coisotropic() {
    let c = ChartSpec::new(4, 1, 2).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(2)).unwrap();
    // ker R = span(e2, e4), Lagrangian for dξ1∧dξ2 + dξ3∧dξ4
    a.set_r(0, 2, 0, s("1", c));
    assert!(check_admissible(&a).unwrap().passed());
    let pts = vec![vec![int(0); 4], vec![int(1), int(-2), rat(1, 2), int(3)]];
    let rep = coisotropy_check(&a, &pts).unwrap();
    assert!(rep.passed(), "{rep}");
    let mut b = AlgebroidData::with_constant_omega(c, &standard_symplectic(2)).unwrap();
    b.set_r(0, 1, 0, s("1", c));
    assert!(!coisotropy_check(&b, &pts).unwrap().passed());
    let zero = AlgebroidData::with_constant_omega(c, &standard_symplectic(2)).unwrap();
    assert!(coisotropy_check(&zero, &pts).unwrap().passed());
}

#[test]
fn cocycle_detects_nonequivalent_structures() {
    let c = ChartSpec::new(2, 1, 2).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(1)).unwrap();
    a.set_r(0, 1, 0, s("1", c));
    let mut a2 = a.clone();
    a2.set_r(0, 1, 0, s("2", c));
    let (form, rep) = relative_cocycle(&a, &a2, &ConnectionChange::zero(c)).unwrap();
    assert!(!form.is_zero());
    assert!(!rep.entry("vanishes").unwrap().passed);
}

#[test]
fn so3_transport_is_orthogonal() {
    let c = ChartSpec::new(2, 3, 2).unwrap();
    let mut a = AlgebroidData::with_constant_omega(c, &standard_symplectic(1)).unwrap();
    a.set_lambda(0, 1, 2, s("1", c));
    a.set_lambda(1, 2, 0, s("1", c));
    a.set_lambda(2, 0, 1, s("1", c));
    let mu = ConnectionChange::new(
        c,
        vec![vec![s("xi2", c), s("1", c), s("0", c)], vec![s("xi1^2", c), s("0", c), s("-1", c)]],
    )
    .unwrap();
    let moved = change_connection(&a, &mu).unwrap();
    let path =
        BasePath::looped(vec![vec![int(0), int(0)], vec![int(1), int(0)], vec![int(1), int(1)], vec![int(0), int(1)]])
            .unwrap();
    let p = parallel_transport(&moved, &path, 2000).unwrap();
    let id = DMatrix::identity(3, 3);
    assert!(form_defect(&p, &id) < 1e-10);
    let run = holonomy_run(&moved, &mu, &path, 2000).unwrap();
    assert!(form_defect(&run.evolution, &id) < 1e-10);
    assert!(run.deviation < 1e-8);
}

#[test]
fn family_form_shifts_by_exterior_derivative() {
    // Γ = 0, V = 0, φ = ξ2·x dξ1, so F_t = F − t dφ = (1 + t x) dξ1∧dξ2
    let c = ChartSpec::new(2, 1, 3).unwrap();
    let mut f = HForm::zero(c, 2);
    f.add(&[0, 1], s("1", c));
    let d = GeometricData::new(Connection::zero(c), Multivector::zero(c, 2), f, None).unwrap();
    let phi = PhiForm::new(vec![s("xi2*x1", c), s("0", c)]).unwrap();
    let (fam, rep) = build_family(&d, &phi, &[int(0), int(1)]).unwrap();
    assert!(rep.passed());
    assert_eq!(fam.fform_at(&int(1)).unwrap().get(&[0, 1]).to_string(), "1 + x1");
}
