//! The full verification pipeline: structure identities, contact condition,
//! nullity extraction, foliation invariants, bi-Legendrian and
//! Tanaka-Webster connections, and D-homothetic deformations, folded into
//! one report with a flattened check list.

use std::time::Instant;

use crate::bileg::{
    adapted_frame, bileg_connection, check_axioms, check_parallel, max_residual,
    metric_equivalence_suite, nullity_equivalence_suite, tanaka_webster, tanaka_webster_check,
    torsion, BiLegError, ParallelTensor,
};
use crate::contact::{
    compute_h_from_algebra, contact_check, deform, h_identities_check, is_k_contact,
    validate_acm, ContactMetricStructure,
};
use crate::curvature::{
    check_kmu_covariant_formulas, check_nabla_xi, extract_kappa_mu, levi_civita, sasakian_check,
    Connection, KappaMuReport,
};
use crate::foliation::{
    boeckx_invariant, classify, closed_form_invariants, eigendistributions,
    flat_bracket_criterion, flatness_conditions, integrability_check, legendrian_check,
    pairing_identity_check, pang_invariant, pi_deformation_invariance, recover_mu,
    DistributionBasis, DistributionLabel, FoliationError, PangForm,
};
use crate::model::{basis_vector, jacobi_check, ManifoldModel, ModelError};
use crate::report::{
    AnalysisReport, Check, ClosedForms, ConnectionSection, DeformationSection, FlatnessFlags,
    FoliationSection, ModelSummary, NullitySection, PairSource, PangSummary, StructureSection,
    Verdict, REPORT_VERSION,
};
use crate::{DEFAULT_SEED, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub tolerance: f64,
    /// D-homothetic deformation factors to verify, in order.
    pub deform: Vec<f64>,
    pub seed: u64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            tolerance: DEFAULT_TOL,
            deform: Vec::new(),
            seed: DEFAULT_SEED,
        }
    }
}

/// The complementary pair the foliation and connection stages run on.
struct Pair {
    source: PairSource,
    lambda: Option<f64>,
    l: DistributionBasis,
    q: DistributionBasis,
}

/// Runs the whole pipeline on one model. `Err` means the model itself is
/// unusable (bad brackets, span failures); every mathematical failure is a
/// `Fail` check inside the report instead.
pub fn run_analysis(
    model: &ManifoldModel,
    opts: &AnalyzeOptions,
) -> Result<AnalysisReport, ModelError> {
    let tol = opts.tolerance;
    let s = &model.structure;
    let mut checks: Vec<Check> = Vec::new();
    let mut timings: Vec<(String, f64)> = Vec::new();
    let summary = ModelSummary {
        name: model.name.clone(),
        dim: model.dim,
        backend: model.backend.kind().to_string(),
        contexts: model.contexts().len(),
    };

    let stage = Instant::now();
    let violations = match validate_acm(s, tol) {
        Ok(v) => v,
        Err(e) => {
            checks.push(Check {
                name: "metric positive definite".to_string(),
                verdict: Verdict::Fail,
                residual: None,
            });
            return Ok(AnalysisReport {
                report_version: REPORT_VERSION,
                model: summary,
                tolerance: tol,
                seed: opts.seed,
                structure: StructureSection {
                    positive_definite: false,
                    identity_violations: Vec::new(),
                    jacobi_residual: None,
                    bracket_spread: None,
                    contact: None,
                    h: None,
                    k_contact: false,
                    reeb_derivative_residual: None,
                    sasakian_residual: None,
                },
                nullity: NullitySection {
                    report: None,
                    error: Some(e.to_string()),
                    covariant_residual: None,
                },
                foliation: None,
                connection: None,
                deformations: Vec::new(),
                checks,
                timings_ms: vec![("structure".to_string(), ms(stage))],
            });
        }
    };
    checks.push(Check {
        name: "metric positive definite".to_string(),
        verdict: Verdict::Pass,
        residual: None,
    });
    let worst_violation = violations.iter().map(|v| v.residual).fold(0.0, f64::max);
    checks.push(Check {
        name: "structure identities".to_string(),
        verdict: Verdict::from_bool(violations.is_empty()),
        residual: Some(worst_violation),
    });

    let (algebras, bracket_spread) = model.algebras()?;
    let jacobi = jacobi_check(model)?;
    checks.push(Check {
        name: "jacobi identity".to_string(),
        verdict: Verdict::from_residual(jacobi, tol),
        residual: Some(jacobi),
    });

    let contact = contact_check(model, s, tol)?;
    checks.push(Check {
        name: "contact condition".to_string(),
        verdict: Verdict::from_bool(contact.contact),
        residual: Some(contact.max_residual),
    });

    let h0 = compute_h_from_algebra(&algebras[0], s);
    let h_report = h_identities_check(s, &h0);
    checks.push(Check {
        name: "h identities".to_string(),
        verdict: Verdict::from_residual(h_report.max_residual(), tol),
        residual: Some(h_report.max_residual()),
    });
    let k_contact = is_k_contact(&h0, tol);

    let mut reeb_residual: f64 = 0.0;
    let mut sasakian_residual: f64 = 0.0;
    let mut levi_civitas: Vec<Connection> = Vec::new();
    for alg in &algebras {
        let h_ctx = compute_h_from_algebra(alg, s);
        let conn = match levi_civita(alg, &s.g) {
            Ok(c) => c,
            Err(e) => {
                // The positive-definite gate makes this unreachable, but a
                // singular solve must never panic the pipeline.
                checks.push(Check {
                    name: "levi-civita connection".to_string(),
                    verdict: Verdict::Fail,
                    residual: None,
                });
                return Ok(assemble(
                    summary,
                    opts,
                    StructureSection {
                        positive_definite: true,
                        identity_violations: violations,
                        jacobi_residual: Some(jacobi),
                        bracket_spread: Some(bracket_spread),
                        contact: Some(contact),
                        h: Some(h_report),
                        k_contact,
                        reeb_derivative_residual: None,
                        sasakian_residual: None,
                    },
                    NullitySection {
                        report: None,
                        error: Some(e.to_string()),
                        covariant_residual: None,
                    },
                    None,
                    None,
                    Vec::new(),
                    checks,
                    timings,
                ));
            }
        };
        reeb_residual = reeb_residual.max(check_nabla_xi(&conn, s, &h_ctx));
        sasakian_residual = sasakian_residual.max(sasakian_check(&conn, s));
        levi_civitas.push(conn);
    }
    checks.push(Check {
        name: "reeb covariant derivative".to_string(),
        verdict: Verdict::from_residual(reeb_residual, tol),
        residual: Some(reeb_residual),
    });
    timings.push(("structure".to_string(), ms(stage)));

    let stage = Instant::now();
    let (nullity_report, nullity_error) = match extract_kappa_mu(model, s, tol) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    checks.push(Check {
        name: "nullity extraction".to_string(),
        verdict: match &nullity_report {
            Some(r) => Verdict::from_residual(r.residual, tol),
            None => Verdict::Fail,
        },
        residual: nullity_report.as_ref().map(|r| r.residual),
    });

    let covariant_residual = nullity_report.as_ref().map(|rep| {
        let mut worst: f64 = 0.0;
        for (alg, conn) in algebras.iter().zip(levi_civitas.iter()) {
            let h_ctx = compute_h_from_algebra(alg, s);
            worst = worst.max(check_kmu_covariant_formulas(
                conn,
                s,
                &h_ctx,
                rep.kappa,
                rep.mu.unwrap_or(0.0),
            ));
        }
        worst
    });
    checks.push(Check {
        name: "covariant nullity formulas".to_string(),
        verdict: match covariant_residual {
            Some(r) => Verdict::from_residual(r, tol),
            None => Verdict::not_applicable("nullity extraction failed"),
        },
        residual: covariant_residual,
    });

    checks.push(Check {
        name: "sasakian classification consistent".to_string(),
        verdict: match &nullity_report {
            Some(r) => Verdict::from_bool((sasakian_residual <= tol) == r.sasakian),
            None => Verdict::not_applicable("nullity extraction failed"),
        },
        residual: None,
    });
    timings.push(("nullity".to_string(), ms(stage)));

    let stage = Instant::now();
    let pair = resolve_pair(model, s, &h0, k_contact, tol, &mut checks);
    let foliation = match &pair {
        Some(pair) => {
            foliation_stage(model, s, &h0, pair, nullity_report.as_ref(), tol, &mut checks)?
        }
        None => None,
    };
    timings.push(("foliation".to_string(), ms(stage)));

    let stage = Instant::now();
    let connection = match &pair {
        Some(pair) => match connection_stage(model, s, pair, tol, &mut checks) {
            Ok(section) => section,
            Err(BiLegError::Model(e)) => return Err(e),
            Err(e) => {
                checks.push(Check {
                    name: "bi-legendrian construction".to_string(),
                    verdict: Verdict::Fail,
                    residual: None,
                });
                let _ = e;
                None
            }
        },
        None => None,
    };
    timings.push(("connection".to_string(), ms(stage)));

    let stage = Instant::now();
    let mut deformations = Vec::new();
    for &a in &opts.deform {
        deformations.push(deformation_stage(
            model,
            s,
            a,
            nullity_report.as_ref(),
            pair.as_ref(),
            k_contact,
            tol,
            &mut checks,
        )?);
    }
    timings.push(("deformations".to_string(), ms(stage)));

    Ok(assemble(
        summary,
        opts,
        StructureSection {
            positive_definite: true,
            identity_violations: violations,
            jacobi_residual: Some(jacobi),
            bracket_spread: Some(bracket_spread),
            contact: Some(contact),
            h: Some(h_report),
            k_contact,
            reeb_derivative_residual: Some(reeb_residual),
            sasakian_residual: Some(sasakian_residual),
        },
        NullitySection {
            report: nullity_report,
            error: nullity_error,
            covariant_residual,
        },
        foliation,
        connection,
        deformations,
        checks,
        timings,
    ))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: ModelSummary,
    opts: &AnalyzeOptions,
    structure: StructureSection,
    nullity: NullitySection,
    foliation: Option<FoliationSection>,
    connection: Option<ConnectionSection>,
    deformations: Vec<DeformationSection>,
    checks: Vec<Check>,
    timings_ms: Vec<(String, f64)>,
) -> AnalysisReport {
    AnalysisReport {
        report_version: REPORT_VERSION,
        model,
        tolerance: opts.tolerance,
        seed: opts.seed,
        structure,
        nullity,
        foliation,
        connection,
        deformations,
        checks,
        timings_ms,
    }
}

/// Picks the complementary pair: h eigenspaces when xi is not Killing,
/// declared frame blocks otherwise.
fn resolve_pair(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    h0: &crate::contact::EndoField,
    k_contact: bool,
    tol: f64,
    checks: &mut Vec<Check>,
) -> Option<Pair> {
    if !k_contact {
        return match eigendistributions(s, h0, tol) {
            Ok(split) => {
                checks.push(Check {
                    name: "eigenspace splitting".to_string(),
                    verdict: Verdict::Pass,
                    residual: None,
                });
                Some(Pair {
                    source: PairSource::Eigenspaces,
                    lambda: Some(split.lambda),
                    l: split.l,
                    q: split.q,
                })
            }
            Err(e) => {
                let residual = match e {
                    FoliationError::SpectrumNotPaired { spread } => Some(spread),
                    _ => None,
                };
                checks.push(Check {
                    name: "eigenspace splitting".to_string(),
                    verdict: Verdict::Fail,
                    residual,
                });
                None
            }
        };
    }
    if let Some(blocks) = &model.adapted_blocks {
        checks.push(Check {
            name: "eigenspace splitting".to_string(),
            verdict: Verdict::not_applicable("h = 0; using the declared frame blocks"),
            residual: None,
        });
        let basis = |label, indices: &[usize]| {
            DistributionBasis::new(
                label,
                indices.iter().map(|&i| basis_vector(model.dim, i)).collect(),
            )
        };
        return Some(Pair {
            source: PairSource::DeclaredBlocks,
            lambda: None,
            l: basis(DistributionLabel::L, &blocks.l),
            q: basis(DistributionLabel::Q, &blocks.q),
        });
    }
    checks.push(Check {
        name: "eigenspace splitting".to_string(),
        verdict: Verdict::not_applicable("h = 0 and no declared frame blocks"),
        residual: None,
    });
    None
}

fn pang_summary(pi: &PangForm) -> PangSummary {
    let m = pi.matrix();
    PangSummary {
        label: pi.label,
        matrix: (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect(),
        formula_residual: pi.formula_residual,
        symmetry_residual: pi.symmetry_residual(),
        context_spread: pi.context_spread(),
    }
}

fn foliation_stage(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    h0: &crate::contact::EndoField,
    pair: &Pair,
    nullity: Option<&KappaMuReport>,
    tol: f64,
    checks: &mut Vec<Check>,
) -> Result<Option<FoliationSection>, ModelError> {
    let legendrian_l = legendrian_check(model, s, &pair.l, tol)?;
    let legendrian_q = legendrian_check(model, s, &pair.q, tol)?;
    checks.push(Check {
        name: "L legendrian".to_string(),
        verdict: Verdict::from_bool(legendrian_l),
        residual: None,
    });
    checks.push(Check {
        name: "Q legendrian".to_string(),
        verdict: Verdict::from_bool(legendrian_q),
        residual: None,
    });
    let integrable_l = integrability_check(model, &pair.l, tol)?;
    let integrable_q = integrability_check(model, &pair.q, tol)?;
    checks.push(Check {
        name: "L integrable".to_string(),
        verdict: Verdict::from_bool(integrable_l),
        residual: None,
    });
    checks.push(Check {
        name: "Q integrable".to_string(),
        verdict: Verdict::from_bool(integrable_q),
        residual: None,
    });

    let pang = |b: &DistributionBasis, checks: &mut Vec<Check>| match pang_invariant(
        model, s, b, tol,
    ) {
        Ok(pi) => Some(pi),
        Err(e) => {
            let residual = match e {
                FoliationError::FormulaMismatch { residual } => Some(residual),
                _ => None,
            };
            checks.push(Check {
                name: "pang dual route".to_string(),
                verdict: Verdict::Fail,
                residual,
            });
            None
        }
    };
    let (pi_l, pi_q) = match (pang(&pair.l, checks), pang(&pair.q, checks)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(None),
    };
    let dual_route = pi_l.formula_residual.max(pi_q.formula_residual);
    checks.push(Check {
        name: "pang dual route".to_string(),
        verdict: Verdict::from_residual(dual_route, tol),
        residual: Some(dual_route),
    });
    let symmetry = pi_l.symmetry_residual().max(pi_q.symmetry_residual());
    checks.push(Check {
        name: "pang symmetry".to_string(),
        verdict: if integrable_l && integrable_q {
            Verdict::from_residual(symmetry, tol)
        } else {
            Verdict::not_applicable("symmetry is only forced on integrable distributions")
        },
        residual: Some(symmetry),
    });
    let spread = pi_l.context_spread().max(pi_q.context_spread());
    checks.push(Check {
        name: "pang constant across contexts".to_string(),
        verdict: Verdict::from_residual(spread, tol),
        residual: Some(spread),
    });

    let class_l = classify(&pi_l, tol);
    let class_q = classify(&pi_q, tol);
    checks.push(Check {
        name: "classification consistent".to_string(),
        verdict: Verdict::from_bool(class_l.consistent && class_q.consistent),
        residual: None,
    });

    let eligible = nullity
        .filter(|rep| rep.mu.is_some() && rep.kappa < 1.0 - 1e-9)
        .map(|rep| (rep.kappa, rep.mu.unwrap_or_default(), rep.lambda));

    let closed_forms = match eligible {
        Some((kappa, mu, _)) => match closed_form_invariants(kappa, mu) {
            Ok((c_plus, c_minus)) => {
                let mut residual: f64 = 0.0;
                for (pi, b, c) in [(&pi_l, &pair.l, c_plus), (&pi_q, &pair.q, c_minus)] {
                    for m in &pi.matrices {
                        for (a, v) in b.vectors.iter().enumerate() {
                            for (d, w) in b.vectors.iter().enumerate() {
                                residual =
                                    residual.max((m[(a, d)] - c * s.inner(v, w)).abs());
                            }
                        }
                    }
                }
                Some(ClosedForms {
                    c_plus,
                    c_minus,
                    match_residual: residual,
                })
            }
            Err(_) => None,
        },
        None => None,
    };
    checks.push(Check {
        name: "closed-form coefficients".to_string(),
        verdict: match &closed_forms {
            Some(c) => Verdict::from_residual(c.match_residual, tol),
            None => Verdict::not_applicable("requires extracted (kappa, mu) with kappa < 1"),
        },
        residual: closed_forms.as_ref().map(|c| c.match_residual),
    });

    let pairing = pairing_identity_check(s, h0, &pi_l, &pi_q, &pair.l, &pair.q, tol);
    checks.push(Check {
        name: "pairing identity".to_string(),
        verdict: Verdict::from_residual(pairing.residual, tol),
        residual: Some(pairing.residual),
    });

    let boeckx = match eligible {
        Some((kappa, mu, _)) => {
            match boeckx_invariant(s, &pi_l, &pi_q, &pair.l, &pair.q, kappa, mu, tol) {
                Ok(b) => Some(b),
                Err(_) => None,
            }
        }
        None => None,
    };
    checks.push(Check {
        name: "ratio matches boeckx invariant".to_string(),
        verdict: match &boeckx {
            Some(b) => {
                Verdict::from_residual((b.ratio - b.boeckx_im).abs().max(b.ratio_spread), tol)
            }
            None => Verdict::not_applicable("requires extracted (kappa, mu) with kappa < 1"),
        },
        residual: boeckx.as_ref().map(|b| (b.ratio - b.boeckx_im).abs()),
    });

    let mu_recovery = match (eligible, pair.lambda) {
        (Some(_), Some(lambda)) => Some(recover_mu(s, &pi_l, &pair.l, lambda)),
        _ => None,
    };
    checks.push(Check {
        name: "mu recovered from pang form".to_string(),
        verdict: match (&mu_recovery, eligible) {
            (Some(rec), Some((_, mu, _))) => {
                Verdict::from_residual((rec.mu_recovered - mu).abs().max(rec.spread), tol)
            }
            _ => Verdict::not_applicable("requires the eigenspace pair and extracted mu"),
        },
        residual: match (&mu_recovery, eligible) {
            (Some(rec), Some((_, mu, _))) => Some((rec.mu_recovered - mu).abs()),
            _ => None,
        },
    });

    let flatness = match eligible {
        Some((kappa, mu, _)) => {
            let (plus_condition, minus_condition) =
                flatness_conditions(kappa, mu, tol).unwrap_or((false, false));
            let plus_bracket = flat_bracket_criterion(model, s, &pair.l, tol)?;
            let minus_bracket = flat_bracket_criterion(model, s, &pair.q, tol)?;
            Some(FlatnessFlags {
                plus_condition,
                minus_condition,
                plus_bracket,
                minus_bracket,
            })
        }
        None => None,
    };
    checks.push(Check {
        name: "flatness criteria agree".to_string(),
        verdict: match &flatness {
            Some(f) => Verdict::from_bool(
                f.plus_condition == f.plus_bracket && f.minus_condition == f.minus_bracket,
            ),
            None => Verdict::not_applicable("requires extracted (kappa, mu) with kappa < 1"),
        },
        residual: None,
    });

    Ok(Some(FoliationSection {
        source: pair.source,
        lambda: pair.lambda,
        legendrian_l,
        legendrian_q,
        integrable_l,
        integrable_q,
        pang_l: pang_summary(&pi_l),
        pang_q: pang_summary(&pi_q),
        class_l,
        class_q,
        closed_forms,
        pairing,
        boeckx,
        mu_recovery,
        flatness,
    }))
}

fn connection_stage(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    pair: &Pair,
    tol: f64,
    checks: &mut Vec<Check>,
) -> Result<Option<ConnectionSection>, BiLegError> {
    let adapted = match adapted_frame(model, s, &pair.l, &pair.q, tol) {
        Ok(a) => a,
        Err(BiLegError::Model(e)) => return Err(BiLegError::Model(e)),
        Err(_) => {
            checks.push(Check {
                name: "adapted frame".to_string(),
                verdict: Verdict::Fail,
                residual: None,
            });
            return Ok(None);
        }
    };
    let a_model = &adapted.model;
    let a_s = &a_model.structure;
    let bar = bileg_connection(a_model, a_s)?;
    let tor = torsion(&bar, a_model)?;
    let axiom_residuals = check_axioms(&bar, &tor, a_model, a_s)?;
    let worst_axiom = max_residual(&axiom_residuals);
    checks.push(Check {
        name: "connection axioms".to_string(),
        verdict: Verdict::from_residual(worst_axiom, tol),
        residual: Some(worst_axiom),
    });

    let a_alg0 = a_model.algebra(a_model.contexts()[0])?;
    let a_h = compute_h_from_algebra(&a_alg0, a_s);
    let parallel_metric = check_parallel(&bar, ParallelTensor::Metric(&a_s.g));
    let parallel_phi = check_parallel(&bar, ParallelTensor::Endomorphism(&a_s.phi));
    let parallel_h = check_parallel(&bar, ParallelTensor::Endomorphism(&a_h));
    let parallel_eta = check_parallel(&bar, ParallelTensor::Covector(&a_s.eta));
    let worst_parallel = parallel_metric
        .max(parallel_phi)
        .max(parallel_h)
        .max(parallel_eta);
    checks.push(Check {
        name: "connection parallelism".to_string(),
        verdict: Verdict::from_residual(worst_parallel, tol),
        residual: Some(worst_parallel),
    });

    let mut lcs = Vec::new();
    for ctx in a_model.contexts() {
        let alg = a_model.algebra(ctx)?;
        lcs.push(levi_civita(&alg, &a_s.g)?);
    }
    let levi_civita_residual = crate::bileg::levi_civita_relation(&bar, &lcs, a_s, adapted.n);
    checks.push(Check {
        name: "levi-civita relation".to_string(),
        verdict: Verdict::from_residual(levi_civita_residual, tol),
        residual: Some(levi_civita_residual),
    });

    let metric_equivalence = metric_equivalence_suite(a_model, a_s, tol)?;
    checks.push(Check {
        name: "metric equivalence consistent".to_string(),
        verdict: Verdict::from_bool(metric_equivalence.consistent),
        residual: None,
    });

    let (equivalence, equivalence_error) = match nullity_equivalence_suite(model, s, tol) {
        Ok(eq) => (Some(eq), None),
        Err(e) => (None, Some(e.to_string())),
    };
    match &equivalence {
        Some(eq) if eq.applicable => {
            let worst = max_residual(&eq.residuals);
            checks.push(Check {
                name: "nullity characterization conditions".to_string(),
                verdict: Verdict::from_bool(eq.conditions_hold),
                residual: Some(worst),
            });
            checks.push(Check {
                name: "nullity characterization round trip".to_string(),
                verdict: Verdict::from_bool(eq.round_trip_consistent),
                residual: None,
            });
            checks.push(Check {
                name: "eigenspace agreement".to_string(),
                verdict: match eq.eigenspace_residual {
                    Some(r) => Verdict::from_residual(r, tol),
                    None => Verdict::not_applicable("nullity extraction failed"),
                },
                residual: eq.eigenspace_residual,
            });
        }
        Some(eq) => {
            let reason = eq
                .reason
                .clone()
                .unwrap_or_else(|| "not applicable".to_string());
            checks.push(Check {
                name: "nullity characterization conditions".to_string(),
                verdict: Verdict::not_applicable(reason),
                residual: None,
            });
        }
        None => {
            checks.push(Check {
                name: "nullity characterization conditions".to_string(),
                verdict: Verdict::Fail,
                residual: None,
            });
        }
    }

    let tw = tanaka_webster(&bar, a_model, a_s)?;
    let tanaka_webster = tanaka_webster_check(&tw, a_model, a_s)?;
    checks.push(Check {
        name: "tanaka-webster identities".to_string(),
        verdict: Verdict::from_residual(tanaka_webster.max_residual(), tol),
        residual: Some(tanaka_webster.max_residual()),
    });

    Ok(Some(ConnectionSection {
        source: pair.source,
        max_coefficient: bar.max_coefficient(),
        axiom_residuals,
        parallel_metric,
        parallel_phi,
        parallel_h,
        parallel_eta,
        levi_civita_residual,
        metric_equivalence,
        equivalence,
        equivalence_error,
        tanaka_webster,
    }))
}

#[allow(clippy::too_many_arguments)]
fn deformation_stage(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    a: f64,
    base: Option<&KappaMuReport>,
    pair: Option<&Pair>,
    k_contact: bool,
    tol: f64,
    checks: &mut Vec<Check>,
) -> Result<DeformationSection, ModelError> {
    let deformed = match deform(s, a) {
        Ok(d) => d,
        Err(e) => {
            checks.push(Check {
                name: format!("deformation factor valid (a = {a})"),
                verdict: Verdict::Fail,
                residual: None,
            });
            return Ok(DeformationSection {
                factor: a,
                expected_kappa: None,
                expected_mu: None,
                extraction: None,
                extraction_error: Some(e.to_string()),
                kappa_residual: None,
                mu_residual: None,
                pang_invariance: None,
                connection_invariance: None,
                ratio_invariance: None,
            });
        }
    };

    let expected_kappa = base.map(|r| (r.kappa + a * a - 1.0) / (a * a));
    let expected_mu = base.and_then(|r| r.mu).map(|m| (m + 2.0 * a - 2.0) / a);
    let (extraction, extraction_error) = match extract_kappa_mu(model, &deformed, tol) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let kappa_residual = match (expected_kappa, &extraction) {
        (Some(k), Some(e)) => Some((e.kappa - k).abs()),
        _ => None,
    };
    let mu_residual = match (expected_mu, &extraction) {
        (Some(m), Some(e)) => e.mu.map(|em| (em - m).abs()),
        _ => None,
    };
    checks.push(Check {
        name: format!("deformed extraction (a = {a})"),
        verdict: match (base, &extraction) {
            (None, _) => Verdict::not_applicable("nullity extraction failed on the base structure"),
            (Some(_), None) => Verdict::Fail,
            (Some(_), Some(_)) => Verdict::from_residual(
                kappa_residual.unwrap_or(f64::INFINITY).max(mu_residual.unwrap_or(0.0)),
                tol,
            ),
        },
        residual: kappa_residual.map(|k| k.max(mu_residual.unwrap_or(0.0))),
    });

    let pang_invariance = match pair {
        Some(pair) => {
            let worst = pi_deformation_invariance(model, s, a, &pair.l, tol)
                .and_then(|r| Ok(r.max(pi_deformation_invariance(model, s, a, &pair.q, tol)?)));
            match worst {
                Ok(r) => Some(r),
                Err(_) => None,
            }
        }
        None => None,
    };
    checks.push(Check {
        name: format!("pang invariance (a = {a})"),
        verdict: match pang_invariance {
            Some(r) => Verdict::from_residual(r, tol),
            None => Verdict::not_applicable("no complementary pair"),
        },
        residual: pang_invariance,
    });

    let connection_invariance = if k_contact {
        None
    } else {
        crate::bileg::connection_deformation_invariance(model, s, a, tol).ok()
    };
    checks.push(Check {
        name: format!("connection invariance (a = {a})"),
        verdict: match connection_invariance {
            Some(r) => Verdict::from_residual(r, tol),
            None => Verdict::not_applicable("requires the h eigenspace pair"),
        },
        residual: connection_invariance,
    });

    let invariant = |r: &KappaMuReport| -> Option<f64> {
        let mu = r.mu?;
        if r.kappa < 1.0 - 1e-9 {
            Some((1.0 - mu / 2.0) / r.lambda)
        } else {
            None
        }
    };
    let ratio_invariance = match (base.and_then(invariant), extraction.as_ref().and_then(invariant))
    {
        (Some(before), Some(after)) => Some((after - before).abs()),
        _ => None,
    };
    checks.push(Check {
        name: format!("boeckx invariance (a = {a})"),
        verdict: match ratio_invariance {
            Some(r) => Verdict::from_residual(r, tol),
            None => Verdict::not_applicable("requires kappa < 1 before and after"),
        },
        residual: ratio_invariance,
    });

    Ok(DeformationSection {
        factor: a,
        expected_kappa,
        expected_mu,
        extraction,
        extraction_error,
        kappa_residual,
        mu_residual,
        pang_invariance,
        connection_invariance,
        ratio_invariance,
    })
}
