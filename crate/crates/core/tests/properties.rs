//! Randomized invariants: algebraic laws the implementation must satisfy for
//! arbitrary inputs, not just the curated fixtures.

use kmu_core::bileg::{adapted_frame, bileg_connection, check_parallel, ParallelTensor};
use kmu_core::contact::{compute_h, compute_h_from_algebra, deform};
use kmu_core::curvature::extract_kappa_mu;
use kmu_core::expr::{eval_jet2, parse, Expr, Func};
use kmu_core::foliation::{
    closed_form_invariants, eigendistributions, flatness_conditions, pang_invariant,
};
use kmu_core::model::{make_kmu_model, standard_structure_3d, FrameVector, ManifoldModel};
use nalgebra::DVector;
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn kappa_mu() -> impl Strategy<Value = (f64, f64)> {
    ((-5.0..0.99f64), (-5.0..5.0f64))
}

fn vector3() -> impl Strategy<Value = FrameVector> {
    proptest::array::uniform3(-3.0..3.0f64).prop_map(|a| DVector::from_row_slice(&a))
}

fn generator(kappa: f64, mu: f64) -> ManifoldModel {
    make_kmu_model(kappa, mu).expect("kappa < 1")
}

// Expression trees that always print and reparse; constants stay
// nonnegative so a leading minus sign is always a Neg node.
fn expr_tree(vars: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0..100.0f64).prop_map(Expr::Const),
        (0..vars).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            (inner.clone(), -3..4i32).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (
                prop_oneof![
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Sqrt),
                    Just(Func::Exp)
                ],
                inner
            )
                .prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

// Smooth everywhere, bounded on [-1, 1]^3: safe for finite differencing.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0..2.0f64).prop_map(Expr::Const),
        (0..3usize).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 0..3i32).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (prop_oneof![Just(Func::Sin), Just(Func::Cos)], inner)
                .prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expression_reparses_to_the_same_tree(e in expr_tree(4)) {
        let text = e.to_string();
        let parsed = parse(&text, 4).expect("printed form parses");
        prop_assert_eq!(parsed, e);
    }

    #[test]
    fn jet_gradient_matches_finite_differences(
        e in smooth_expr(),
        p in proptest::array::uniform3(-1.0..1.0f64),
    ) {
        let jet = eval_jet2(&e, &p).unwrap();
        let step = 1e-5;
        for i in 0..3 {
            let mut hi = p;
            let mut lo = p;
            hi[i] += step;
            lo[i] -= step;
            let fd = (eval_jet2(&e, &hi).unwrap().value
                - eval_jet2(&e, &lo).unwrap().value)
                / (2.0 * step);
            let scale = 1.0 + jet.gradient.amax() + jet.hessian.amax();
            prop_assert!(
                (jet.gradient[i] - fd).abs() <= 1e-4 * scale,
                "d/dx{} of {}: jet {} vs fd {}",
                i + 1, e, jet.gradient[i], fd
            );
        }
    }

    #[test]
    fn jet_hessian_is_symmetric(
        e in smooth_expr(),
        p in proptest::array::uniform3(-1.0..1.0f64),
    ) {
        let jet = eval_jet2(&e, &p).unwrap();
        let asym = (&jet.hessian - jet.hessian.transpose()).amax();
        prop_assert!(asym <= 1e-12 * (1.0 + jet.hessian.amax()));
    }

    #[test]
    fn jet_products_obey_the_leibniz_rule(
        a in smooth_expr(),
        b in smooth_expr(),
        p in proptest::array::uniform3(-1.0..1.0f64),
    ) {
        let ja = eval_jet2(&a, &p).unwrap();
        let jb = eval_jet2(&b, &p).unwrap();
        let product = Expr::Mul(Box::new(a), Box::new(b));
        let jp = eval_jet2(&product, &p).unwrap();

        let value = ja.value * jb.value;
        let gradient = &ja.gradient * jb.value + &jb.gradient * ja.value;
        let hessian = &ja.hessian * jb.value
            + &jb.hessian * ja.value
            + &ja.gradient * jb.gradient.transpose()
            + &jb.gradient * ja.gradient.transpose();

        let scale = 1.0 + value.abs() + gradient.amax() + hessian.amax();
        prop_assert!((jp.value - value).abs() <= 1e-12 * scale);
        prop_assert!((&jp.gradient - gradient).amax() <= 1e-12 * scale);
        prop_assert!((&jp.hessian - hessian).amax() <= 1e-12 * scale);
    }

    #[test]
    fn brackets_are_antisymmetric_and_bilinear(
        (kappa, mu) in kappa_mu(),
        u in vector3(),
        v in vector3(),
        w in vector3(),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let model = generator(kappa, mu);
        let alg = model.algebra(model.contexts()[0]).unwrap();
        let scale = 1.0 + u.amax() + v.amax() + w.amax();

        let anti = (alg.bracket_of(&u, &v) + alg.bracket_of(&v, &u)).amax();
        prop_assert!(anti <= 1e-12 * scale * scale);

        let combo = &u * a + &w * b;
        let lhs = alg.bracket_of(&combo, &v);
        let rhs = alg.bracket_of(&u, &v) * a + alg.bracket_of(&w, &v) * b;
        prop_assert!((lhs - rhs).amax() <= 1e-11 * scale * scale * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn extracted_kappa_stays_below_the_sasakian_bound(
        (kappa, mu) in kappa_mu(),
    ) {
        let model = generator(kappa, mu);
        let rep = extract_kappa_mu(&model, &model.structure, TOL).unwrap();
        prop_assert!(rep.kappa <= 1.0 + TOL);
        // lambda is pinned to the extracted kappa.
        prop_assert!((rep.lambda * rep.lambda - (1.0 - rep.kappa)).abs() <= TOL);
    }

    #[test]
    fn deformations_compose_multiplicatively(
        a in 0.2..5.0f64,
        b in 0.2..5.0f64,
    ) {
        let s = standard_structure_3d();
        let two_step = deform(&deform(&s, a).unwrap(), b).unwrap();
        let one_step = deform(&s, a * b).unwrap();
        prop_assert!((&two_step.g - &one_step.g).amax() <= 1e-12 * (1.0 + one_step.g.amax()));
        prop_assert!((&two_step.xi - &one_step.xi).amax() <= 1e-12 * (1.0 + one_step.xi.amax()));
        prop_assert!((&two_step.eta - &one_step.eta).amax() <= 1e-12 * (1.0 + one_step.eta.amax()));
        prop_assert!((&two_step.phi - &one_step.phi).amax() == 0.0);
    }

    #[test]
    fn both_eigenfoliations_are_never_flat_below_the_limit(
        (kappa, mu) in kappa_mu(),
    ) {
        let (plus_flat, minus_flat) = flatness_conditions(kappa, mu, TOL).unwrap();
        prop_assert!(!(plus_flat && minus_flat));
    }

    #[test]
    fn pang_matrices_match_the_closed_forms(
        (kappa, mu) in kappa_mu(),
    ) {
        let model = generator(kappa, mu);
        let s = &model.structure;
        let h = compute_h(&model, s, model.contexts()[0]).unwrap();
        let split = eigendistributions(s, &h, TOL).unwrap();
        let (c_plus, c_minus) = closed_form_invariants(kappa, mu).unwrap();
        let pi_l = pang_invariant(&model, s, &split.l, TOL).unwrap();
        let pi_q = pang_invariant(&model, s, &split.q, TOL).unwrap();
        prop_assert!((pi_l.matrices[0][(0, 0)] - c_plus).abs() <= TOL);
        prop_assert!((pi_q.matrices[0][(0, 0)] - c_minus).abs() <= TOL);
    }

    #[test]
    fn canonical_connection_is_parallel_for_random_constants(
        (kappa, mu) in kappa_mu(),
    ) {
        let model = generator(kappa, mu);
        let s = &model.structure;
        let h = compute_h(&model, s, model.contexts()[0]).unwrap();
        let split = eigendistributions(s, &h, TOL).unwrap();
        let adapted = adapted_frame(&model, s, &split.l, &split.q, TOL).unwrap();
        let a_s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, a_s).unwrap();
        let alg = adapted.model.algebra(adapted.model.contexts()[0]).unwrap();
        let a_h = compute_h_from_algebra(&alg, a_s);
        prop_assert!(check_parallel(&bar, ParallelTensor::Metric(&a_s.g)) <= TOL);
        prop_assert!(check_parallel(&bar, ParallelTensor::Endomorphism(&a_s.phi)) <= TOL);
        prop_assert!(check_parallel(&bar, ParallelTensor::Endomorphism(&a_h)) <= TOL);
    }
}
