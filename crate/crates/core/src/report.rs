//! The aggregated analysis report: one serializable structure holding every
//! computed quantity, a flattened pass/fail check list, and a text rendering
//! that prints the same numbers the JSON carries.

use serde::{Deserialize, Serialize};

use crate::bileg::{EquivalenceReport, MetricEquivalence, TanakaWebsterReport};
use crate::contact::{ContactReport, HReport, IdentityViolation};
use crate::curvature::KappaMuReport;
use crate::foliation::{DistributionLabel, FoliationClass, MuRecovery, PairingReport};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable { reason: String },
}

impl Verdict {
    pub fn not_applicable(reason: impl Into<String>) -> Self {
        Verdict::NotApplicable {
            reason: reason.into(),
        }
    }

    pub fn from_residual(residual: f64, tol: f64) -> Self {
        if residual.is_finite() && residual <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One named check with an optional residual backing the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub dim: usize,
    pub backend: String,
    pub contexts: usize,
}

/// Structure-level results: defining identities, contact condition, the
/// tensor h, and the covariant identities tying them to the Levi-Civita
/// connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSection {
    pub positive_definite: bool,
    pub identity_violations: Vec<IdentityViolation>,
    pub jacobi_residual: Option<f64>,
    pub bracket_spread: Option<f64>,
    pub contact: Option<ContactReport>,
    pub h: Option<HReport>,
    pub k_contact: bool,
    /// `nabla_V xi = -phi V - phi h V` over frame directions and contexts.
    pub reeb_derivative_residual: Option<f64>,
    /// `(nabla_V phi) W = g(V, W) xi - eta(W) V`.
    pub sasakian_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<KappaMuReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Max residual of the covariant formulas for `nabla phi` and `nabla h`
    /// in terms of `(kappa, mu)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariant_residual: Option<f64>,
}

/// Where the complementary Legendrian pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    Eigenspaces,
    DeclaredBlocks,
}

/// One Pang form, summarized: first-context matrix plus agreement numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PangSummary {
    pub label: DistributionLabel,
    pub matrix: Vec<Vec<f64>>,
    pub formula_residual: f64,
    pub symmetry_residual: f64,
    pub context_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    pub c_plus: f64,
    pub c_minus: f64,
    /// Max deviation of the computed Pang matrices from `c g` on the
    /// respective eigenspace bases.
    pub match_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessFlags {
    /// `kappa + mu lambda = (lambda + 1)^2` within tolerance.
    pub plus_condition: bool,
    /// `kappa - mu lambda = (lambda - 1)^2` within tolerance.
    pub minus_condition: bool,
    /// `[xi, L] stays in L` at every context.
    pub plus_bracket: bool,
    /// `[xi, Q] stays in Q` at every context.
    pub minus_bracket: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationSection {
    pub source: PairSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub legendrian_l: bool,
    pub legendrian_q: bool,
    pub integrable_l: bool,
    pub integrable_q: bool,
    pub pang_l: PangSummary,
    pub pang_q: PangSummary,
    pub class_l: FoliationClass,
    pub class_q: FoliationClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_forms: Option<ClosedForms>,
    pub pairing: PairingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boeckx: Option<crate::foliation::BoeckxReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_recovery: Option<MuRecovery>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flatness: Option<FlatnessFlags>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSection {
    pub source: PairSource,
    /// Largest bi-Legendrian coefficient over contexts.
    pub max_coefficient: f64,
    pub axiom_residuals: Vec<(String, f64)>,
    pub parallel_metric: f64,
    pub parallel_phi: f64,
    pub parallel_h: f64,
    pub parallel_eta: f64,
    pub levi_civita_residual: f64,
    pub metric_equivalence: MetricEquivalence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence_error: Option<String>,
    pub tanaka_webster: TanakaWebsterReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationSection {
    pub factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<KappaMuReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pang_invariance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connection_invariance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_invariance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub report_version: u32,
    pub model: ModelSummary,
    pub tolerance: f64,
    pub seed: u64,
    pub structure: StructureSection,
    pub nullity: NullitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub foliation: Option<FoliationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionSection>,
    pub deformations: Vec<DeformationSection>,
    pub checks: Vec<Check>,
    pub timings_ms: Vec<(String, f64)>,
}

impl AnalysisReport {
    pub fn failed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| matches!(c.verdict, Verdict::Fail))
            .count()
    }

    pub fn passed(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| matches!(c.verdict, Verdict::Pass))
            .count()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    /// Every numeric residual the report carries, for sanity sweeps.
    pub fn residuals(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        out.extend(self.structure.identity_violations.iter().map(|v| v.residual));
        out.extend(self.structure.jacobi_residual);
        out.extend(self.structure.bracket_spread);
        if let Some(c) = &self.structure.contact {
            out.push(c.max_residual);
        }
        if let Some(h) = &self.structure.h {
            out.push(h.max_residual());
        }
        out.extend(self.structure.reeb_derivative_residual);
        out.extend(self.structure.sasakian_residual);
        if let Some(r) = &self.nullity.report {
            out.push(r.residual);
        }
        out.extend(self.nullity.covariant_residual);
        if let Some(f) = &self.foliation {
            out.push(f.pang_l.formula_residual);
            out.push(f.pang_q.formula_residual);
            out.push(f.pang_l.symmetry_residual);
            out.push(f.pang_q.symmetry_residual);
            out.push(f.pang_l.context_spread);
            out.push(f.pang_q.context_spread);
            out.push(f.pairing.residual);
            out.extend(f.closed_forms.as_ref().map(|c| c.match_residual));
            out.extend(f.boeckx.as_ref().map(|b| b.ratio_spread));
            out.extend(f.mu_recovery.as_ref().map(|m| m.spread));
        }
        if let Some(c) = &self.connection {
            out.push(c.max_coefficient);
            out.extend(c.axiom_residuals.iter().map(|(_, r)| *r));
            out.extend([
                c.parallel_metric,
                c.parallel_phi,
                c.parallel_h,
                c.parallel_eta,
                c.levi_civita_residual,
                c.tanaka_webster.max_residual(),
            ]);
            if let Some(eq) = &c.equivalence {
                out.extend(eq.residuals.iter().map(|(_, r)| *r));
                out.extend(eq.eigenspace_residual);
            }
        }
        for d in &self.deformations {
            out.extend(d.kappa_residual);
            out.extend(d.mu_residual);
            out.extend(d.pang_invariance);
            out.extend(d.connection_invariance);
            out.extend(d.ratio_invariance);
        }
        out.extend(self.checks.iter().filter_map(|c| c.residual));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(&mut out, format!("analysis report (version {})", self.report_version));
        push(
            &mut out,
            format!(
                "model: {} [{} backend, dim {}, {} context{}]",
                self.model.name,
                self.model.backend,
                self.model.dim,
                self.model.contexts,
                if self.model.contexts == 1 { "" } else { "s" }
            ),
        );
        push(&mut out, format!("tolerance: {}", self.tolerance));
        push(&mut out, format!("seed: {}", self.seed));

        push(&mut out, String::new());
        push(&mut out, "structure".to_string());
        push(
            &mut out,
            format!("  metric positive definite: {}", yes_no(self.structure.positive_definite)),
        );
        if self.structure.identity_violations.is_empty() {
            push(&mut out, "  defining identities: all within tolerance".to_string());
        } else {
            for v in &self.structure.identity_violations {
                push(&mut out, format!("  identity violated: {} (residual {})", v.name, v.residual));
            }
        }
        if let Some(j) = self.structure.jacobi_residual {
            push(&mut out, format!("  jacobi residual: {j}"));
        }
        if let Some(s) = self.structure.bracket_spread {
            push(&mut out, format!("  bracket spread across contexts: {s}"));
        }
        if let Some(c) = &self.structure.contact {
            push(
                &mut out,
                format!(
                    "  contact condition: {} (residual {}, min |det| on D {})",
                    yes_no(c.contact),
                    c.max_residual,
                    c.min_abs_det
                ),
            );
        }
        if let Some(h) = &self.structure.h {
            push(&mut out, format!("  h identities residual: {}", h.max_residual()));
        }
        push(&mut out, format!("  k-contact: {}", yes_no(self.structure.k_contact)));
        if let Some(r) = self.structure.reeb_derivative_residual {
            push(&mut out, format!("  reeb covariant derivative residual: {r}"));
        }
        if let Some(r) = self.structure.sasakian_residual {
            push(&mut out, format!("  sasakian identity residual: {r}"));
        }

        push(&mut out, String::new());
        push(&mut out, "nullity".to_string());
        if let Some(n) = &self.nullity.report {
            push(&mut out, format!("  kappa = {}", n.kappa));
            match n.mu {
                Some(mu) => push(&mut out, format!("  mu = {mu}")),
                None => push(&mut out, "  mu = not applicable (h = 0)".to_string()),
            }
            push(&mut out, format!("  lambda = {}", n.lambda));
            push(&mut out, format!("  residual = {}", n.residual));
            push(&mut out, format!("  sasakian: {}", yes_no(n.sasakian)));
        }
        if let Some(e) = &self.nullity.error {
            push(&mut out, format!("  extraction failed: {e}"));
        }
        if let Some(r) = self.nullity.covariant_residual {
            push(&mut out, format!("  covariant formulas residual: {r}"));
        }

        if let Some(f) = &self.foliation {
            push(&mut out, String::new());
            push(&mut out, "foliations".to_string());
            push(
                &mut out,
                format!(
                    "  pair source: {}",
                    match f.source {
                        PairSource::Eigenspaces => "h eigenspaces",
                        PairSource::DeclaredBlocks => "declared frame blocks",
                    }
                ),
            );
            if let Some(l) = f.lambda {
                push(&mut out, format!("  lambda = {l}"));
            }
            push(
                &mut out,
                format!(
                    "  legendrian: L {}, Q {}; integrable: L {}, Q {}",
                    yes_no(f.legendrian_l),
                    yes_no(f.legendrian_q),
                    yes_no(f.integrable_l),
                    yes_no(f.integrable_q)
                ),
            );
            for p in [&f.pang_l, &f.pang_q] {
                push(
                    &mut out,
                    format!(
                        "  pang form {:?}: {:?} (routes agree to {}, spread {})",
                        p.label, p.matrix, p.formula_residual, p.context_spread
                    ),
                );
            }
            push(
                &mut out,
                format!(
                    "  classification: L {:?}, Q {:?}",
                    f.class_l.kind, f.class_q.kind
                ),
            );
            if let Some(c) = &f.closed_forms {
                push(
                    &mut out,
                    format!(
                        "  closed-form coefficients: c+ = {}, c- = {} (match residual {})",
                        c.c_plus, c.c_minus, c.match_residual
                    ),
                );
            }
            push(&mut out, format!("  pairing identity residual: {}", f.pairing.residual));
            if let Some(b) = &f.boeckx {
                push(
                    &mut out,
                    format!(
                        "  ratio = {}, boeckx invariant = {} (spread {})",
                        b.ratio, b.boeckx_im, b.ratio_spread
                    ),
                );
            }
            if let Some(m) = &f.mu_recovery {
                push(
                    &mut out,
                    format!(
                        "  mu recovered = {}, quoted ratio form = {} (spread {})",
                        m.mu_recovered, m.mu_ratio_value, m.spread
                    ),
                );
            }
            if let Some(fl) = &f.flatness {
                push(
                    &mut out,
                    format!(
                        "  flatness: L condition {}, bracket {}; Q condition {}, bracket {}",
                        yes_no(fl.plus_condition),
                        yes_no(fl.plus_bracket),
                        yes_no(fl.minus_condition),
                        yes_no(fl.minus_bracket)
                    ),
                );
            }
        }

        if let Some(c) = &self.connection {
            push(&mut out, String::new());
            push(&mut out, "bi-legendrian connection".to_string());
            push(&mut out, format!("  max coefficient: {}", c.max_coefficient));
            for (name, r) in &c.axiom_residuals {
                push(&mut out, format!("  axiom {name}: {r}"));
            }
            push(
                &mut out,
                format!(
                    "  parallel residuals: g {}, phi {}, h {}, eta {}",
                    c.parallel_metric, c.parallel_phi, c.parallel_h, c.parallel_eta
                ),
            );
            push(
                &mut out,
                format!("  levi-civita relation residual: {}", c.levi_civita_residual),
            );
            let me = &c.metric_equivalence;
            push(
                &mut out,
                format!(
                    "  metric equivalence: g {}, phi {}, formulas {}, geodesic {} (consistent: {})",
                    yes_no(me.metric_parallel),
                    yes_no(me.phi_parallel),
                    yes_no(me.explicit_formulas),
                    yes_no(me.totally_geodesic),
                    yes_no(me.consistent)
                ),
            );
            if let Some(eq) = &c.equivalence {
                if eq.applicable {
                    push(
                        &mut out,
                        format!(
                            "  nullity characterization: conditions {}, round trip {}",
                            if eq.conditions_hold { "hold" } else { "fail" },
                            if eq.round_trip_consistent { "consistent" } else { "inconsistent" }
                        ),
                    );
                    if let Some(r) = eq.eigenspace_residual {
                        push(&mut out, format!("  eigenspace agreement residual: {r}"));
                    }
                } else if let Some(reason) = &eq.reason {
                    push(&mut out, format!("  nullity characterization: not applicable ({reason})"));
                }
            }
            if let Some(e) = &c.equivalence_error {
                push(&mut out, format!("  nullity characterization error: {e}"));
            }
            push(
                &mut out,
                format!(
                    "  tanaka-webster residuals: g {}, phi {}, xi {}, eta {}, torsion {}",
                    c.tanaka_webster.metric,
                    c.tanaka_webster.phi,
                    c.tanaka_webster.xi,
                    c.tanaka_webster.eta,
                    c.tanaka_webster.torsion_d
                ),
            );
        }

        for d in &self.deformations {
            push(&mut out, String::new());
            push(&mut out, format!("deformation a = {}", d.factor));
            if let (Some(k), m) = (d.expected_kappa, d.expected_mu) {
                match m {
                    Some(m) => push(&mut out, format!("  expected: kappa = {k}, mu = {m}")),
                    None => push(&mut out, format!("  expected: kappa = {k}, mu not applicable")),
                }
            }
            if let Some(e) = &d.extraction {
                match e.mu {
                    Some(mu) => push(
                        &mut out,
                        format!("  extracted: kappa = {}, mu = {mu}", e.kappa),
                    ),
                    None => push(
                        &mut out,
                        format!("  extracted: kappa = {}, mu not applicable", e.kappa),
                    ),
                }
            }
            if let Some(e) = &d.extraction_error {
                push(&mut out, format!("  extraction failed: {e}"));
            }
            if let Some(r) = d.pang_invariance {
                push(&mut out, format!("  pang invariance residual: {r}"));
            }
            if let Some(r) = d.connection_invariance {
                push(&mut out, format!("  connection invariance residual: {r}"));
            }
            if let Some(r) = d.ratio_invariance {
                push(&mut out, format!("  boeckx invariance residual: {r}"));
            }
        }

        push(&mut out, String::new());
        push(&mut out, "checks".to_string());
        for check in &self.checks {
            let tag = match &check.verdict {
                Verdict::Pass => "pass".to_string(),
                Verdict::Fail => "FAIL".to_string(),
                Verdict::NotApplicable { reason } => format!("n/a: {reason}"),
            };
            match check.residual {
                Some(r) => push(&mut out, format!("  [{tag}] {} (residual {r})", check.name)),
                None => push(&mut out, format!("  [{tag}] {}", check.name)),
            }
        }
        let na = self.checks.len() - self.passed() - self.failed();
        push(
            &mut out,
            format!(
                "summary: {} passed, {} failed, {} not applicable",
                self.passed(),
                self.failed(),
                na
            ),
        );
        out
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
