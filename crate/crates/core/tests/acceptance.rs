//! Acceptance gate: one test per shipped claim, each printing a PASS line.
//!
//! Everything here runs at the pinned tolerance 1e-9 on the built-in models:
//! the S³ chart fixture, the flat (0,0) model, the (kappa, mu) generator at
//! four named constant pairs plus seeded random draws, and the perturbed
//! negative control.

use kmu_core::bileg::{
    adapted_frame, bileg_connection, check_parallel, connection_deformation_invariance,
    levi_civita_relation, nullity_equivalence_suite, tanaka_webster, tanaka_webster_check,
    torsion, AdaptedModel, ParallelTensor,
};
use kmu_core::contact::{compute_h, compute_h_from_algebra, deform, validate_acm};
use kmu_core::curvature::{
    extract_kappa_mu, levi_civita, nullity_residual, riemann, sasakian_check,
};
use kmu_core::fixtures::{flat_kappa0_model, perturbed_control_model};
use kmu_core::foliation::{
    boeckx_invariant, classify, closed_form_invariants, eigendistributions,
    flat_bracket_criterion, flatness_conditions, pairing_identity_check, pang_invariant,
    pi_deformation_invariance, recover_mu, DistributionBasis, DistributionLabel, EigenSplit,
    FoliationKind,
};
use kmu_core::model::{basis_vector, make_kmu_model, make_s3_model, ManifoldModel};
use kmu_core::{run_analysis, AnalyzeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

const NAMED_PAIRS: [(f64, f64); 4] = [(0.0, 0.0), (0.75, 1.0), (-1.0, 2.0), (0.5, -3.0)];

fn seeded_draws() -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..100)
        .map(|_| (rng.gen_range(-5.0..0.99), rng.gen_range(-5.0..5.0)))
        .collect()
}

fn split_of(model: &ManifoldModel) -> EigenSplit {
    let s = &model.structure;
    let h = compute_h(model, s, model.contexts()[0]).unwrap();
    eigendistributions(s, &h, TOL).unwrap()
}

fn adapted_generator(kappa: f64, mu: f64) -> AdaptedModel {
    let model = make_kmu_model(kappa, mu).unwrap();
    let split = split_of(&model);
    adapted_frame(&model, &model.structure, &split.l, &split.q, TOL).unwrap()
}

fn pass(n: usize, slug: &str) {
    println!("acceptance criterion {n} ({slug}): PASS");
}

#[test]
fn criterion_01_sphere_reproduction() {
    let model = make_s3_model();
    let s = &model.structure;
    assert!(validate_acm(s, TOL).unwrap().is_empty());

    // Frame brackets at every sample point: [X, xi] = -2Y, [Y, xi] = 2X,
    // [X, Y] = 2 xi; and h = 0.
    for ctx in model.contexts() {
        let alg = model.algebra(ctx).unwrap();
        let checks = [
            (alg.bracket(0, 2), [0.0, -2.0, 0.0]),
            (alg.bracket(1, 2), [2.0, 0.0, 0.0]),
            (alg.bracket(0, 1), [0.0, 0.0, 2.0]),
        ];
        for (got, want) in checks {
            for i in 0..3 {
                assert!((got[i] - want[i]).abs() <= TOL, "bracket mismatch: {got:?}");
            }
        }
        assert!(compute_h_from_algebra(&alg, s).amax() <= TOL);
        let conn = levi_civita(&alg, &s.g).unwrap();
        assert!(sasakian_check(&conn, s) <= TOL);
    }

    // The canonical connection vanishes in this frame and makes phi and g
    // parallel.
    let bar = bileg_connection(&model, s).unwrap();
    assert!(bar.max_coefficient() <= TOL);
    assert!(check_parallel(&bar, ParallelTensor::Endomorphism(&s.phi)) <= TOL);
    assert!(check_parallel(&bar, ParallelTensor::Metric(&s.g)) <= TOL);

    // Pang forms on the declared blocks: Pi(X,X) = Pi(Y,Y) = 4, both
    // nondegenerate.
    let l = DistributionBasis::new(DistributionLabel::L, vec![basis_vector(3, 0)]);
    let q = DistributionBasis::new(DistributionLabel::Q, vec![basis_vector(3, 1)]);
    for b in [&l, &q] {
        let pi = pang_invariant(&model, s, b, TOL).unwrap();
        for m in &pi.matrices {
            assert!((m[(0, 0)] - 4.0).abs() <= TOL, "Pi = {m:?}");
        }
        assert_eq!(classify(&pi, TOL).kind, FoliationKind::NonDegenerate);
    }
    pass(1, "sphere-reproduction");
}

#[test]
fn criterion_02_nullity_extraction() {
    let mut pairs = NAMED_PAIRS.to_vec();
    pairs.extend(seeded_draws());
    for (kappa, mu) in pairs {
        let model = make_kmu_model(kappa, mu).unwrap();
        let rep = extract_kappa_mu(&model, &model.structure, TOL)
            .unwrap_or_else(|e| panic!("extraction failed at ({kappa}, {mu}): {e}"));
        assert!((rep.kappa - kappa).abs() <= TOL, "kappa at ({kappa}, {mu})");
        let got_mu = rep.mu.expect("kappa < 1 forces h != 0");
        assert!((got_mu - mu).abs() <= TOL, "mu at ({kappa}, {mu})");
        assert!(rep.residual <= TOL, "nullity residual at ({kappa}, {mu})");
    }
    pass(2, "nullity-extraction");
}

#[test]
fn criterion_03_pang_closed_forms() {
    for (kappa, mu) in NAMED_PAIRS {
        let model = make_kmu_model(kappa, mu).unwrap();
        let s = &model.structure;
        let split = split_of(&model);
        let (c_plus, c_minus) = closed_form_invariants(kappa, mu).unwrap();
        let pi_l = pang_invariant(&model, s, &split.l, TOL).unwrap();
        let pi_q = pang_invariant(&model, s, &split.q, TOL).unwrap();
        // Eigenbasis vectors are unit, so the 1x1 Pang matrices are the
        // coefficients themselves.
        assert!((pi_l.matrices[0][(0, 0)] - c_plus).abs() <= TOL, "({kappa}, {mu})");
        assert!((pi_q.matrices[0][(0, 0)] - c_minus).abs() <= TOL, "({kappa}, {mu})");
    }
    let check = |kappa: f64, mu: f64, want: (f64, f64)| {
        let got = closed_form_invariants(kappa, mu).unwrap();
        assert!((got.0 - want.0).abs() <= TOL && (got.1 - want.1).abs() <= TOL);
    };
    check(0.0, 0.0, (4.0, 0.0));
    check(0.75, 1.0, (2.0, 0.0));
    pass(3, "pang-closed-forms");
}

#[test]
fn criterion_04_pairing_identity() {
    for (kappa, mu) in NAMED_PAIRS {
        let model = make_kmu_model(kappa, mu).unwrap();
        let s = &model.structure;
        let h = compute_h(&model, s, model.contexts()[0]).unwrap();
        let split = split_of(&model);
        let pi_l = pang_invariant(&model, s, &split.l, TOL).unwrap();
        let pi_q = pang_invariant(&model, s, &split.q, TOL).unwrap();
        let rep = pairing_identity_check(s, &h, &pi_l, &pi_q, &split.l, &split.q, TOL);
        assert!(rep.residual <= TOL, "pairing at ({kappa}, {mu}): {}", rep.residual);
    }

    // h = 0 instance: the pairing collapses to equality of the two forms.
    let model = make_s3_model();
    let s = &model.structure;
    let h = compute_h(&model, s, model.contexts()[0]).unwrap();
    let l = DistributionBasis::new(DistributionLabel::L, vec![basis_vector(3, 0)]);
    let q = DistributionBasis::new(DistributionLabel::Q, vec![basis_vector(3, 1)]);
    let pi_l = pang_invariant(&model, s, &l, TOL).unwrap();
    let pi_q = pang_invariant(&model, s, &q, TOL).unwrap();
    let rep = pairing_identity_check(s, &h, &pi_l, &pi_q, &l, &q, TOL);
    assert!(rep.residual <= TOL, "pairing on the sphere: {}", rep.residual);
    assert_eq!(rep.same_class_when_h_vanishes, Some(true));
    pass(4, "pairing-identity");
}

#[test]
fn criterion_05_deformation_invariance() {
    let flat = flat_kappa0_model();
    let s = &flat.structure;

    // a = 2 lands on (3/4, 1).
    let deformed = deform(s, 2.0).unwrap();
    let rep = extract_kappa_mu(&flat, &deformed, TOL).unwrap();
    assert!((rep.kappa - 0.75).abs() <= TOL);
    assert!((rep.mu.unwrap() - 1.0).abs() <= TOL);

    let im = |kappa: f64, mu: f64| (1.0 - mu / 2.0) / (1.0 - kappa).sqrt();
    for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0)] {
        let model = make_kmu_model(kappa, mu).unwrap();
        let ms = &model.structure;
        let split = split_of(&model);
        let base_im = im(kappa, mu);
        for a in [0.5, 2.0, 3.0] {
            // Transformed constants follow the closed formulas.
            let d = deform(ms, a).unwrap();
            let drep = extract_kappa_mu(&model, &d, TOL).unwrap();
            let want_kappa = (kappa + a * a - 1.0) / (a * a);
            let want_mu = (mu + 2.0 * a - 2.0) / a;
            assert!((drep.kappa - want_kappa).abs() <= TOL);
            assert!((drep.mu.unwrap() - want_mu).abs() <= TOL);

            // Pang matrices, connection coefficients, and the scalar
            // invariant do not move.
            for b in [&split.l, &split.q] {
                assert!(pi_deformation_invariance(&model, ms, a, b, TOL).unwrap() <= TOL);
            }
            assert!(connection_deformation_invariance(&model, ms, a, TOL).unwrap() <= TOL);
            assert!((im(drep.kappa, drep.mu.unwrap()) - base_im).abs() <= TOL);
        }
    }
    pass(5, "deformation-invariance");
}

#[test]
fn criterion_06_connection_parallelism() {
    for (kappa, mu) in NAMED_PAIRS {
        let adapted = adapted_generator(kappa, mu);
        let a_s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, a_s).unwrap();
        let a_alg = adapted.model.algebra(adapted.model.contexts()[0]).unwrap();
        let a_h = compute_h_from_algebra(&a_alg, a_s);
        assert!(check_parallel(&bar, ParallelTensor::Endomorphism(&a_s.phi)) <= TOL);
        assert!(check_parallel(&bar, ParallelTensor::Endomorphism(&a_h)) <= TOL);
        assert!(check_parallel(&bar, ParallelTensor::Metric(&a_s.g)) <= TOL);

        // Torsion on D-pairs equals 2 Phi(Z, Z') xi.
        let tor = torsion(&bar, &adapted.model).unwrap();
        let n = adapted.n;
        for (c, _) in adapted.model.contexts().iter().enumerate() {
            for i in 0..2 * n {
                let ei = basis_vector(2 * n + 1, i);
                for j in 0..2 * n {
                    let ej = basis_vector(2 * n + 1, j);
                    let got = tor.eval(c, &ei, &ej);
                    let expected = &a_s.xi * (2.0 * a_s.inner(&ei, &a_s.apply_phi(&ej)));
                    assert!(
                        (got - expected).amax() <= TOL,
                        "torsion at ({kappa}, {mu}), pair ({i}, {j})"
                    );
                }
            }
        }
    }
    pass(6, "connection-parallelism");
}

#[test]
fn criterion_07_levi_civita_relation() {
    for (kappa, mu) in NAMED_PAIRS {
        let adapted = adapted_generator(kappa, mu);
        let a_s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, a_s).unwrap();
        let lc: Vec<_> = adapted
            .model
            .contexts()
            .into_iter()
            .map(|ctx| {
                let alg = adapted.model.algebra(ctx).unwrap();
                levi_civita(&alg, &a_s.g).unwrap()
            })
            .collect();
        let res = levi_civita_relation(&bar, &lc, a_s, adapted.n);
        assert!(res <= TOL, "relation at ({kappa}, {mu}): {res}");
    }
    pass(7, "levi-civita-relation");
}

#[test]
fn criterion_08_nullity_round_trip() {
    // Forward and back on clean generators.
    for (kappa, mu) in NAMED_PAIRS {
        let model = make_kmu_model(kappa, mu).unwrap();
        let suite = nullity_equivalence_suite(&model, &model.structure, TOL).unwrap();
        assert!(suite.applicable && suite.conditions_hold, "({kappa}, {mu})");
        assert!(suite.round_trip_consistent);
        let rep = suite.extraction.as_ref().unwrap();
        assert!((rep.kappa - kappa).abs() <= TOL);
        assert!((rep.mu.unwrap() - mu).abs() <= TOL);
        assert!(suite.eigenspace_residual.unwrap() <= TOL);
    }

    // Negative control: the corrupted bracket breaks the nullity condition
    // and the connection conditions together.
    let control = perturbed_control_model();
    let s = &control.structure;
    let alg = control.algebra(control.contexts()[0]).unwrap();
    let h = compute_h_from_algebra(&alg, s);
    let conn = levi_civita(&alg, &s.g).unwrap();
    let curv = riemann(&alg, &conn);
    assert!(nullity_residual(&curv, s, &h, 0.0, 0.0) > 1e-3);
    assert!(extract_kappa_mu(&control, s, TOL).is_err());
    let suite = nullity_equivalence_suite(&control, s, TOL).unwrap();
    assert!(suite.applicable && !suite.conditions_hold);
    let worst = suite.residuals.iter().map(|(_, r)| *r).fold(0.0f64, f64::max);
    assert!(worst > 1e-3, "control residuals too small: {worst}");
    assert!(suite.extraction.is_none());
    assert!(suite.round_trip_consistent);

    // K-contact case is declared out of scope, not failed.
    let sphere = make_s3_model();
    let suite = nullity_equivalence_suite(&sphere, &sphere.structure, TOL).unwrap();
    assert!(!suite.applicable);
    assert!(suite.reason.as_deref().unwrap().contains("Killing"));
    pass(8, "nullity-round-trip");
}

#[test]
fn criterion_09_foliation_trichotomy() {
    for (kappa, mu) in NAMED_PAIRS {
        let model = make_kmu_model(kappa, mu).unwrap();
        let s = &model.structure;
        let split = split_of(&model);
        let (plus_flat, minus_flat) = flatness_conditions(kappa, mu, TOL).unwrap();
        let pi_l = pang_invariant(&model, s, &split.l, TOL).unwrap();
        let pi_q = pang_invariant(&model, s, &split.q, TOL).unwrap();
        assert_eq!(classify(&pi_l, TOL).kind == FoliationKind::Flat, plus_flat);
        assert_eq!(classify(&pi_q, TOL).kind == FoliationKind::Flat, minus_flat);
        assert_eq!(flat_bracket_criterion(&model, s, &split.l, TOL).unwrap(), plus_flat);
        assert_eq!(flat_bracket_criterion(&model, s, &split.q, TOL).unwrap(), minus_flat);
    }

    // The two exhibit cases: the (+lambda)-foliation nondegenerate, its
    // conjugate flat.
    for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0)] {
        let model = make_kmu_model(kappa, mu).unwrap();
        let split = split_of(&model);
        let pi_l = pang_invariant(&model, &model.structure, &split.l, TOL).unwrap();
        let pi_q = pang_invariant(&model, &model.structure, &split.q, TOL).unwrap();
        assert_eq!(classify(&pi_l, TOL).kind, FoliationKind::NonDegenerate);
        assert_eq!(classify(&pi_q, TOL).kind, FoliationKind::Flat);
    }

    // Both foliations flat never happens below the Sasakian limit.
    for (kappa, mu) in seeded_draws() {
        let (plus_flat, minus_flat) = flatness_conditions(kappa, mu, TOL).unwrap();
        assert!(!(plus_flat && minus_flat), "both flat at ({kappa}, {mu})");
        let model = make_kmu_model(kappa, mu).unwrap();
        let split = split_of(&model);
        let pi_l = pang_invariant(&model, &model.structure, &split.l, TOL).unwrap();
        let pi_q = pang_invariant(&model, &model.structure, &split.q, TOL).unwrap();
        assert!(
            !(classify(&pi_l, TOL).kind == FoliationKind::Flat
                && classify(&pi_q, TOL).kind == FoliationKind::Flat),
            "both classified flat at ({kappa}, {mu})"
        );
    }
    pass(9, "foliation-trichotomy");
}

#[test]
fn criterion_10_mu_recovery_and_ratio() {
    for (kappa, mu) in NAMED_PAIRS {
        let model = make_kmu_model(kappa, mu).unwrap();
        let s = &model.structure;
        let split = split_of(&model);
        let pi_l = pang_invariant(&model, s, &split.l, TOL).unwrap();
        let pi_q = pang_invariant(&model, s, &split.q, TOL).unwrap();

        // The bracket-side ratio IS the scalar invariant, not a quarter of
        // it.
        let rep =
            boeckx_invariant(s, &pi_l, &pi_q, &split.l, &split.q, kappa, mu, TOL).unwrap();
        let expected = (1.0 - mu / 2.0) / (1.0 - kappa).sqrt();
        assert!((rep.ratio - expected).abs() <= TOL, "({kappa}, {mu})");
        assert!((rep.boeckx_im - expected).abs() <= TOL);
        if expected.abs() > 1e-6 {
            assert!(
                (rep.ratio - expected / 4.0).abs() > 1e-3,
                "quarter form would be indistinguishable at ({kappa}, {mu})"
            );
        }

        // mu comes back from the diagonal Pang coefficient.
        let rec = recover_mu(s, &pi_l, &split.l, split.lambda);
        assert!((rec.mu_recovered - mu).abs() <= TOL, "({kappa}, {mu})");
        assert!(rec.spread <= TOL);
    }

    // On (0, 0) the quoted ratio form misses mu by exactly 4; the analysis
    // report carries both numbers.
    let flat = flat_kappa0_model();
    let split = split_of(&flat);
    let pi_l = pang_invariant(&flat, &flat.structure, &split.l, TOL).unwrap();
    let rec = recover_mu(&flat.structure, &pi_l, &split.l, split.lambda);
    assert!((rec.mu_recovered - 0.0).abs() <= TOL);
    assert!((rec.mu_ratio_value - 0.0 - 4.0).abs() <= TOL);

    let report = run_analysis(&flat, &AnalyzeOptions::default()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    let mr = &json["foliation"]["mu_recovery"];
    assert!(mr.get("mu_recovered").is_some());
    assert!(mr.get("mu_ratio_value").is_some());
    assert!((mr["mu_ratio_value"].as_f64().unwrap() - 4.0).abs() <= TOL);
    let bx = &json["foliation"]["boeckx"];
    assert!(bx.get("ratio").is_some() && bx.get("boeckx_im").is_some());
    pass(10, "mu-recovery-and-ratio");
}

#[test]
fn criterion_11_tanaka_webster() {
    let sphere = make_s3_model();
    let s = &sphere.structure;
    let bar = bileg_connection(&sphere, s).unwrap();
    let tw = tanaka_webster(&bar, &sphere, s).unwrap();
    let rep = tanaka_webster_check(&tw, &sphere, s).unwrap();
    assert!(rep.max_residual() <= TOL, "sphere: {rep:?}");

    for (kappa, mu) in NAMED_PAIRS {
        let adapted = adapted_generator(kappa, mu);
        let a_s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, a_s).unwrap();
        let tw = tanaka_webster(&bar, &adapted.model, a_s).unwrap();
        let rep = tanaka_webster_check(&tw, &adapted.model, a_s).unwrap();
        assert!(rep.max_residual() <= TOL, "({kappa}, {mu}): {rep:?}");
    }
    pass(11, "tanaka-webster");
}
