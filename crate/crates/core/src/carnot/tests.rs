use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::algebra::builtin;

fn g(xs: &[f64]) -> GroupElement {
    GroupElement::from_slice(xs)
}

fn heis_closed_form(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])]
}

fn random_element(rng: &mut impl Rng, n: usize) -> GroupElement {
    GroupElement(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
}

#[test]
fn heisenberg_product_matches_closed_form() {
    let h = builtin("heisenberg1").unwrap();
    let (a, b) = ([0.3, -1.2, 0.7], [2.0, 0.4, -0.1]);
    let p = bch_product(&h, &g(&a), &g(&b)).unwrap();
    let expect = heis_closed_form(&a, &b);
    for k in 0..3 {
        assert!((p[k] - expect[k]).abs() < 1e-15);
    }
    assert_eq!(bch_product(&h, &g(&a), &g(&a).inverse()).unwrap().amax(), 0.0);
    assert_eq!(bch_product(&h, &GroupElement::identity(3), &g(&b)).unwrap(), g(&b));
}

#[test]
fn non_nilpotent_input_is_rejected() {
    let c = builtin("contact3(1,0,1)").unwrap();
    let err = bch_product(&c, &g(&[1., 0., 0.]), &g(&[0., 1., 0.]));
    assert!(matches!(err, Err(HensError::NotNilpotent { .. })));
    let p = group_product(&c, &g(&[0.1, 0., 0.]), &g(&[0., 0.1, 0.])).unwrap();
    assert!(p.approximate);
    assert_eq!(p.order, MAX_BCH_ORDER);
}

#[test]
fn associativity_on_random_triples() {
    let h = builtin("heisenberg1").unwrap();
    let mut rng = rng::seeded(11);
    for _ in 0..100 {
        let (x, y, z) = (
            random_element(&mut rng, 3),
            random_element(&mut rng, 3),
            random_element(&mut rng, 3),
        );
        let l = bch_product(&h, &bch_product(&h, &x, &y).unwrap(), &z).unwrap();
        let r = bch_product(&h, &x, &bch_product(&h, &y, &z).unwrap()).unwrap();
        assert!((l.0 - r.0).amax() < 1e-10);
    }
}

#[test]
fn conical_product_examples() {
    let h = builtin("heisenberg1").unwrap();
    let (x, y) = (g(&[0.4, -0.3, 1.0]), g(&[0.2, 0.9, -0.5]));
    assert_eq!(conical_product(&h, &x, &y).unwrap(), bch_product(&h, &x, &y).unwrap());

    let c = builtin("contact3(1,0,1)").unwrap();
    let beta = conical_product(&c, &x, &x.inverse()).unwrap();
    assert_eq!(beta.amax(), 0.0);

    let lim = conical_limit(&c, &x, &y, &[1e-1, 1e-2, 1e-3]).unwrap();
    assert!(lim.converged, "{lim:?}");
    // First order: deviation shrinks about tenfold per decade.
    for r in &lim.ratios {
        assert!((r - 0.1).abs() < 0.02, "{lim:?}");
    }
}

#[test]
fn conical_product_is_conical() {
    let c = builtin("contact3(1,0.4,-0.7)").unwrap();
    let mut rng = rng::seeded(5);
    for _ in 0..20 {
        let (x, y) = (random_element(&mut rng, 3), random_element(&mut rng, 3));
        for &eta in &[0.5, 2.0] {
            let lhs = conical_product(&c, &dilate(&c, eta, &x).unwrap(), &dilate(&c, eta, &y).unwrap())
                .unwrap();
            let rhs = dilate(&c, eta, &conical_product(&c, &x, &y).unwrap()).unwrap();
            assert!((lhs.0 - rhs.0).amax() < 1e-10);
        }
    }
}

#[test]
fn horizontal_linear_examples() {
    let h = builtin("heisenberg1").unwrap();
    let d2 = h.dilation_matrix(2.0).unwrap();
    assert!(is_horizontal_linear(&h, &d2, 1e-10, 1).unwrap().is_linear);

    let mut swap = DMatrix::zeros(3, 3);
    swap[(2, 0)] = 1.0;
    swap[(0, 2)] = 1.0;
    swap[(1, 1)] = 1.0;
    assert!(!is_horizontal_linear(&h, &swap, 1e-10, 1).unwrap().is_linear);

    let (s, c) = 0.9f64.sin_cos();
    let rot = DMatrix::from_row_slice(3, 3, &[c, -s, 0., s, c, 0., 0., 0., 1.]);
    let r = is_horizontal_linear(&h, &rot, 1e-10, 1).unwrap();
    assert!(r.is_linear && r.morphism_residual < 1e-12, "{r:?}");
}

#[test]
fn pansu_difference_examples() {
    let h = builtin("heisenberg1").unwrap();
    let a = g(&[0.5, -1.0, 2.0]);
    let x = g(&[0.1, 0.3, -0.2]);
    let y = g(&[0.7, 0.2, 0.4]);
    let left = |p: &GroupElement| bch_product(&h, &a, p);
    for &t in &[1.0, 0.1, 1e-3] {
        let d = pansu_difference(&h, left, &x, t, &y).unwrap();
        assert!((&d.0 - &y.0).amax() < 1e-9, "t={t}: {d:?}");
        let id = pansu_difference(&h, |p: &GroupElement| Ok(p.clone()), &x, t, &y).unwrap();
        assert!((id.0 - &y.0).amax() < 1e-9);
        let dil = pansu_difference(&h, |p: &GroupElement| dilate(&h, 2.0, p), &x, t, &y).unwrap();
        let expect = dilate(&h, 2.0, &y).unwrap();
        assert!((dil.0 - expect.0).amax() < 1e-9);
    }
}

#[test]
fn op_derivative_converges_to_beta() {
    let c = builtin("contact3(1,0,1)").unwrap();
    // Base points are kept small so the truncated series stays accurate after
    // the 1/eps^2 amplification of the second-layer component.
    let (x, u) = (g(&[0.03, 0.01, -0.02]), g(&[-0.01, 0.04, 0.02]));
    let (y, v) = (g(&[0.5, -0.6, 0.3]), g(&[0.2, 0.3, -0.4]));
    let beta = conical_product(&c, &y, &v).unwrap();
    let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&e| (op_derivative_probe(&c, &x, &u, &y, &v, e).unwrap().0 - &beta.0).amax())
        .collect();
    assert!(errs[1] < 0.2 * errs[0] && errs[2] < 0.2 * errs[1], "{errs:?}");
    assert!(errs[2] < 1e-2);
}

#[test]
fn translation_commutator_converges() {
    let c = builtin("contact3(1,0,1)").unwrap();
    let (x, y) = (g(&[0.3, 0.1, -0.2]), g(&[0.5, -0.6, 0.3]));
    let beta = conical_product(&c, &x, &y).unwrap();
    let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&l| (translation_commutator_probe(&c, &x, &y, l).unwrap().0 - &beta.0).amax())
        .collect();
    // Order at least one: tenfold decrease per decade.
    assert!(errs[1] < 0.15 * errs[0] && errs[2] < 0.15 * errs[1], "{errs:?}");
}

proptest! {
    #[test]
    fn heisenberg_group_axioms(
        a in proptest::collection::vec(-2.0f64..2.0, 3),
        b in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let h = builtin("heisenberg1").unwrap();
        let p = bch_product(&h, &g(&a), &g(&b)).unwrap();
        let expect = heis_closed_form(&a, &b);
        for k in 0..3 {
            prop_assert!((p[k] - expect[k]).abs() < 1e-12);
        }
        let back = bch_product(&h, &p, &g(&b).inverse()).unwrap();
        prop_assert!((back.0 - g(&a).0).amax() < 1e-12);
    }
}
