use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;
use crate::algebra::builtins;
use crate::poly::SparsePoly;
use crate::rng;

fn rand_vec(rng: &mut rng::Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn heis_so2() -> GradedAlgebra {
    builtins::heisenberg_so2()
}

fn contact3() -> GradedAlgebra {
    builtins::contact3(1.0, 0.0, 1.0)
}

/// A random member: identity on `D0`, a rotation (optionally a reflection
/// when there is no isotropy) on `D`, and an arbitrary invertible column
/// block on the top grades.
fn random_member(alg: &GradedAlgebra, rng: &mut rng::Rng, allow_reflection: bool) -> DMatrix<f64> {
    let n = alg.dim();
    let d0 = alg.d0_dim();
    let p = alg.p();
    assert_eq!(p, 2);
    let mut f = DMatrix::identity(n, n);
    let mut r = rotation(rng.gen_range(-3.0..3.0));
    if allow_reflection && rng.gen_bool(0.5) {
        r.column_mut(1).neg_mut();
    }
    f.view_mut((d0, d0), (2, 2)).copy_from(&r);
    for c in d0 + p..n {
        for row in 0..n {
            f[(row, c)] = rng.gen_range(-0.5..0.5);
        }
        f[(c, c)] = rng.gen_range(0.5..2.0);
    }
    f
}

#[test]
fn extended_metric_blocks() {
    let m = extended_metric(&heis_so2()).unwrap();
    assert!(m.from_frame);
    assert!((m.matrix.clone() - DMatrix::identity(4, 4)).amax() < 1e-14);

    // [X1, X2] = e12 X3 with |X1|² |X2|² = 6, and −½ tr Q² = a².
    let alg = builtins::contact4(2.0, 3.0, 0.4, 0.7, 0.5, 1.5).unwrap();
    let m = extended_metric(&alg).unwrap().matrix;
    assert!((m[(0, 0)] - 2.25).abs() < 1e-14);
    assert!((m[(1, 1)] - 2.0).abs() < 1e-14 && (m[(2, 2)] - 3.0).abs() < 1e-14);
    assert!((m[(3, 3)] - 6.0 / 0.25).abs() < 1e-12);
    assert!(m.view((0, 1), (1, 3)).amax() == 0.0);

    let flagged = extended_metric(&builtins::contact4(1.0, 1.0, 0.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
    assert!(!flagged.from_frame);
    assert_eq!(flagged.matrix[(3, 3)], 1.0);

    let bare = heis_so2().with_d0_rep(None);
    if let Ok(bare) = bare {
        assert!(matches!(extended_metric(&bare), Err(HensError::MissingD0Rep)));
        assert!(matches!(
            w_polynomial(&bare, &DVector::zeros(4)),
            Err(HensError::MissingD0Rep)
        ));
    }
}

#[test]
fn w_satisfies_the_pairing_with_the_deformed_bracket() {
    let mut rng = rng::seeded(3);
    for alg in [contact3(), heis_so2(), builtins::so3_surface(1.0, 2.0), builtins::hyperbolic_surface(0.5, -1.0)] {
        let g = extended_metric(&alg).unwrap().matrix;
        let n = alg.dim();
        for _ in 0..10 {
            let (u, x, y) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n), rand_vec(&mut rng, n));
            let w = w_polynomial(&alg, &x).unwrap();
            for eps in [1.0, 0.5] {
                let lhs = u.dot(&(&g * alg.deformed_bracket(eps, &x, &y).unwrap()));
                let rhs = (w.eval(eps) * &u).dot(&(&g * &y));
                assert!((lhs - rhs).abs() < 1e-12, "{}: {lhs} vs {rhs}", alg.name());
            }
        }
    }
}

#[test]
fn w_at_one_is_the_undeformed_transpose_of_ad() {
    let alg = contact3();
    let g = extended_metric(&alg).unwrap().matrix;
    let x = DVector::from_vec(vec![0.3, -1.1, 0.7]);
    let w = w_polynomial(&alg, &x).unwrap();
    let direct = g.clone().try_inverse().unwrap() * alg.ad_matrix(&x).transpose() * &g;
    assert!((w.eval(1.0) - direct).amax() < 1e-14);
}

#[test]
fn cones_have_constant_w() {
    let mut rng = rng::seeded(5);
    for alg in [builtins::heisenberg1(), builtins::abelian(3)] {
        assert!(alg.is_cone());
        for _ in 0..5 {
            let w = w_polynomial(&alg, &rand_vec(&mut rng, alg.dim())).unwrap();
            assert_eq!(w.degree(), 0);
            for k in 1..4 {
                assert!(w.coeff(k).amax() < 1e-12);
            }
        }
    }
    let zero = w_polynomial(&contact3(), &DVector::zeros(3)).unwrap();
    assert_eq!(zero.degree(), 0);
    assert_eq!(zero.coeff(0).amax(), 0.0);
}

#[test]
fn contact3_w_has_first_and_second_order_terms() {
    let alg = contact3();
    let x2 = alg.basis_vector(1);
    let w = w_polynomial(&alg, &x2).unwrap();
    assert_eq!(w.degree(), 2);
    assert!(w.coeff(1).amax() > 0.5);
    assert!(w.coeff(2).amax() > 0.5);
    // Coefficient extraction against the deformed algebras at three scales.
    let g = extended_metric(&alg).unwrap().matrix;
    let g_inv = g.clone().try_inverse().unwrap();
    let sampled: Vec<DMatrix<f64>> = [1.0, 0.5, 0.25]
        .iter()
        .map(|&e| &g_inv * alg.deformed(e).unwrap().ad_matrix(&x2).transpose() * &g)
        .collect();
    // Solve the Vandermonde system entry by entry.
    let v = DMatrix::from_fn(3, 3, |r, c| [1.0f64, 0.5, 0.25][r].powi(c as i32));
    let v_inv = v.try_inverse().unwrap();
    for k in 0..3 {
        let mut ck = DMatrix::zeros(3, 3);
        for (r, s) in sampled.iter().enumerate() {
            ck += s * v_inv[(k, r)];
        }
        assert!((ck - w.coeff(k)).amax() < 1e-12, "power {k}");
    }
    // [X2, X3]_ε = ε² ρ X1 + ε γ X3 at φ = 0, γ = ρ = 1.
    let y = alg.basis_vector(2);
    let u = alg.basis_vector(0);
    assert!(((w.coeff(2) * &u).dot(&(&g * &y)) - 1.0).abs() < 1e-14);
    let u3 = alg.basis_vector(2);
    assert!(((w.coeff(1) * &u3).dot(&(&g * &y)) - 1.0).abs() < 1e-14);
}

#[test]
fn symmetry_group_membership() {
    let alg = heis_so2();
    let id = DMatrix::identity(4, 4);
    let c = in_symmetry_group(&alg, &id).unwrap();
    assert!(c.member);
    assert_eq!(c.residuals(), [0.0; 4]);

    let mut rot = id.clone();
    rot.view_mut((1, 1), (2, 2)).copy_from(&rotation(0.9));
    assert!(in_symmetry_group(&alg, &rot).unwrap().member);

    let mut scale = id.clone();
    scale[(1, 1)] = 2.0;
    scale[(2, 2)] = 2.0;
    let c = in_symmetry_group(&alg, &scale).unwrap();
    assert!(!c.member);
    assert!(c.isometry > 1.0);
    assert_eq!([c.filtration, c.fixes_d0, c.commutes], [0.0; 3]);

    // A reflection does not commute with the isotropy rotation.
    let mut refl = id.clone();
    refl[(2, 2)] = -1.0;
    let c = in_symmetry_group(&alg, &refl).unwrap();
    assert!(!c.member && c.commutes > 1.0 && c.isometry == 0.0);

    let mut leak = id.clone();
    leak[(3, 1)] = 0.3;
    let c = in_symmetry_group(&alg, &leak).unwrap();
    assert!((c.filtration - 0.3).abs() < 1e-15);

    let mut moves_d0 = id.clone();
    moves_d0[(1, 0)] = 0.2;
    assert!(in_symmetry_group(&alg, &moves_d0).unwrap().fixes_d0 > 0.1);

    assert!(matches!(
        in_symmetry_group(&alg, &DMatrix::zeros(4, 4)),
        Err(HensError::SingularMatrix)
    ));
    assert!(in_symmetry_group(&alg, &DMatrix::identity(3, 3)).is_err());
}

#[test]
fn coadjoint_relation_holds_for_members() {
    let mut rng = rng::seeded(17);
    for (alg, reflect) in [(heis_so2(), false), (contact3(), true)] {
        let n = alg.dim();
        assert!(coadjoint_check(&alg, &DMatrix::identity(n, n)).unwrap() < 1e-15);
        for _ in 0..20 {
            let f = random_member(&alg, &mut rng, reflect);
            assert!(in_symmetry_group(&alg, &f).unwrap().member);
            let r = coadjoint_check(&alg, &f).unwrap();
            assert!(r < 1e-10, "{}: {r}", alg.name());
        }
        let mut bad = DMatrix::identity(n, n);
        bad[(n - 1, 0)] = 1.0;
        assert!(matches!(coadjoint_check(&alg, &bad), Err(HensError::NotMember(_))));
    }
}

#[test]
fn bunch_elements_carry_u_in_the_constant_term() {
    let alg = contact3();
    let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let b = bunch_element(&alg, &u).unwrap();
    assert_eq!(b.len(), 3);
    assert_eq!(b[0].nrows(), 4);
    assert!((b[0].view((3, 0), (1, 3)).transpose() - &u).amax() < 1e-14);
    assert!(b[1].row(3).amax() == 0.0 && b[0].column(3).amax() == 0.0);
}

#[test]
fn symmetry_group_is_unchanged_by_nilpotentization() {
    let alg = contact3();
    let nil = alg.nilpotentize().unwrap();
    let mut rng = rng::seeded(23);
    let mut members = 0;
    for k in 0..50 {
        let mut f = random_member(&alg, &mut rng, true);
        if k % 2 == 1 {
            let (r, c) = (rng.gen_range(0..3), rng.gen_range(0..3));
            f[(r, c)] += rng.gen_range(0.1..0.5);
        }
        if f.clone().try_inverse().is_none() {
            continue;
        }
        let a = in_symmetry_group(&alg, &f).unwrap();
        let b = in_symmetry_group(&nil, &f).unwrap();
        assert_eq!(a.member, b.member);
        members += a.member as usize;
    }
    assert!(members >= 25 && members < 50);
}

fn point(alg: &GradedAlgebra, rng: &mut rng::Rng) -> (EpsMatrixPolynomial, DVector<f64>) {
    let u = rand_vec(rng, alg.dim());
    (w_polynomial(alg, &u).unwrap(), u)
}

/// `so(2)` generator on `D` of the isotropic Heisenberg ensemble.
fn lie_element(theta_dot: f64, top: f64) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(4, 4);
    f[(1, 2)] = -theta_dot;
    f[(2, 1)] = theta_dot;
    f[(3, 3)] = top;
    f
}

#[test]
fn prequantization_simple_values() {
    let alg = heis_so2();
    let mut rng = rng::seeded(29);
    let (w, u) = point(&alg, &mut rng);
    let f = lie_element(0.8, 0.3);
    let one = PolyFunction::constant(4, 1.0);
    let q = prequant_apply(&alg, &f, &one, &w, &u, 0.5, DEFAULT_DEGREE_BOUND).unwrap();
    assert!((q.re - (w.eval(0.5) * f.transpose()).trace()).abs() < 1e-14);
    assert_eq!(q.im, 0.0);

    let h = PolyFunction::new(4, &PolyFunction::u_var(4, 1) * &PolyFunction::w_var(4, 0, 2)).unwrap();
    let zero = prequant_apply(&alg, &DMatrix::zeros(4, 4), &h, &w, &u, 0.5, 2).unwrap();
    assert_eq!((zero.re, zero.im), (0.0, 0.0));

    let cubic = PolyFunction::new(4, &h.poly * &PolyFunction::u_var(4, 0)).unwrap();
    assert!(matches!(
        prequant_apply(&alg, &f, &cubic, &w, &u, 0.5, 2),
        Err(HensError::DegreeBoundExceeded { degree: 3, bound: 2 })
    ));
    assert!(prequant_apply(&alg, &f, &cubic, &w, &u, 0.5, 3).is_ok());
}

#[test]
fn prequantization_is_linear_in_h() {
    let alg = heis_so2();
    let mut rng = rng::seeded(31);
    let (w, u) = point(&alg, &mut rng);
    let f = lie_element(-0.4, 1.2);
    let h1 = PolyFunction::new(4, &PolyFunction::u_var(4, 3) * &PolyFunction::w_var(4, 1, 1)).unwrap();
    let h2 = PolyFunction::new(4, &PolyFunction::w_var(4, 2, 3) + &SparsePoly::constant(20, 0.7)).unwrap();
    let alpha = -2.5;
    let combo = PolyFunction::new(4, &h1.poly.scale(alpha) + &h2.poly).unwrap();
    let q = |h: &PolyFunction| prequant_apply(&alg, &f, h, &w, &u, 0.7, 2).unwrap();
    let (a, b, c) = (q(&h1), q(&h2), q(&combo));
    assert!((c.re - (alpha * a.re + b.re)).abs() < 1e-12);
    assert!((c.im - (alpha * a.im + b.im)).abs() < 1e-12);
}

#[test]
fn prequantization_flow_term_matches_finite_differences() {
    let alg = heis_so2();
    let mut rng = rng::seeded(37);
    let (w, u) = point(&alg, &mut rng);
    let eps = 0.6;
    let wm = w.eval(eps);
    let f = lie_element(0.9, -0.35);
    let fns = [
        PolyFunction::new(4, PolyFunction::u_var(4, 1)).unwrap(),
        PolyFunction::new(4, PolyFunction::u_var(4, 3)).unwrap(),
        PolyFunction::new(4, &PolyFunction::w_var(4, 1, 2) * &PolyFunction::u_var(4, 2)).unwrap(),
        PolyFunction::new(4, &PolyFunction::w_var(4, 3, 1) * &PolyFunction::w_var(4, 2, 1)).unwrap(),
    ];
    let step = 1e-5;
    for h in &fns {
        let q = prequant_apply(&alg, &f, h, &w, &u, eps, 2).unwrap();
        let (wp, up) = prequant_flow_point(&wm, &u, &f, step);
        let (wn, un) = prequant_flow_point(&wm, &u, &f, -step);
        let fd = (h.eval(&wp, &up) - h.eval(&wn, &un)) / (2.0 * step);
        let expected_im = fd / (2.0 * std::f64::consts::PI);
        let expected_re = moment(&wm, &f) * h.eval(&wm, &u);
        assert!((q.im - expected_im).abs() <= 1e-6 * expected_im.abs().max(1e-3), "{} vs {}", q.im, expected_im);
        assert!((q.re - expected_re).abs() < 1e-12);
    }
}

#[test]
fn monomial_json_parsing() {
    let mut exps = vec![0u32; 20];
    exps[16 + 2] = 1;
    exps[5] = 1;
    let s = serde_json::json!([
        {"exponents": exps, "coefficient": 2.0},
        {"exponents": vec![0u32; 20], "coefficient": -1.0}
    ])
    .to_string();
    let h = PolyFunction::from_json_str(&s, 4).unwrap();
    let w = DMatrix::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
    let u = DVector::from_vec(vec![0.0, 0.0, 3.0, 0.0]);
    assert_eq!(h.eval(&w, &u), 2.0 * 5.0 * 3.0 - 1.0);
    assert!(PolyFunction::from_json_str(r#"[{"exponents":[1],"coefficient":1}]"#, 4).is_err());
}
