//! Legendrian distributions from the eigenspaces of `h`, the Pang form
//! `Pi(X, X') = -eta([X', [X, xi]])`, its flat/degenerate/nondegenerate
//! trichotomy, and the closed-form invariants of a nullity space: the
//! eigenspace coefficients of `Pi`, the Boeckx invariant, and the recovery
//! of `mu` from `Pi` alone.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::contact::{d_eta_from_algebra, d_orthonormal_basis, ContactError, ContactMetricStructure, EndoField};
use crate::model::{FrameMatrix, FrameVector, ManifoldModel, ModelError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FoliationError {
    #[error("h has no eigenspace splitting: lambda = {lambda:.3e} is below tolerance")]
    NoSplitting { lambda: f64 },
    #[error("spectrum of h on D is not of the form (+lambda, -lambda): deviation {spread:.3e}")]
    SpectrumNotPaired { spread: f64 },
    #[error("the two Pi formulas disagree: residual {residual:.3e}")]
    FormulaMismatch { residual: f64 },
    #[error("ratio denominator vanishes: Pi_L and Pi_Q compose-phi coincide (h = 0)")]
    ZeroDenominator,
    #[error("kappa = {kappa} lies in the Sasakian limit; lambda degenerates")]
    SasakianLimit { kappa: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Contact(#[from] ContactError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionLabel {
    L,
    Q,
    User,
}

/// A distribution spanned by constant-coefficient frame vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionBasis {
    pub label: DistributionLabel,
    pub vectors: Vec<FrameVector>,
}

impl DistributionBasis {
    pub fn new(label: DistributionLabel, vectors: Vec<FrameVector>) -> Self {
        DistributionBasis { label, vectors }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// `dim x rank` matrix whose columns are the basis vectors.
    pub fn matrix(&self) -> FrameMatrix {
        let dim = self.vectors[0].len();
        let mut m = FrameMatrix::zeros(dim, self.rank());
        for (j, v) in self.vectors.iter().enumerate() {
            m.set_column(j, v);
        }
        m
    }

    /// Distance of `v` from the span, as the sup-norm of the least-squares
    /// defect.
    pub fn span_residual(&self, v: &FrameVector) -> f64 {
        let m = self.matrix();
        let svd = m.clone().svd(true, true);
        match svd.solve(v, 1e-13) {
            Ok(c) => (m * c - v).amax(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Coordinates of `v` in this basis with respect to `g`, via the Gram
    /// system. `v` is assumed to lie in the span.
    pub fn coordinates(&self, s: &ContactMetricStructure, v: &FrameVector) -> FrameVector {
        let k = self.rank();
        let gram = FrameMatrix::from_fn(k, k, |a, b| s.inner(&self.vectors[a], &self.vectors[b]));
        let rhs = FrameVector::from_fn(k, |a, _| s.inner(&self.vectors[a], v));
        gram.lu().solve(&rhs).expect("basis vectors are independent")
    }

    /// Smallest singular value of the basis matrix; positive iff the basis
    /// is linearly independent.
    pub fn independence(&self) -> f64 {
        let svd = self.matrix().svd(false, false);
        svd.singular_values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// The eigenspace splitting of `h` on `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSplit {
    /// Common positive eigenvalue; `sqrt(1 - kappa)` on a nullity space.
    pub lambda: f64,
    pub l: DistributionBasis,
    pub q: DistributionBasis,
}

/// Splits `D` into the (+lambda)- and (-lambda)-eigenspaces of `h`.
///
/// `h` is restricted to a g-orthonormal basis of `D`, diagonalized as a
/// symmetric matrix, and the spectrum is required to consist of one value
/// `lambda > tol` and its negative, each with multiplicity `n`.
pub fn eigendistributions(
    s: &ContactMetricStructure,
    h: &EndoField,
    tol: f64,
) -> Result<EigenSplit, FoliationError> {
    let d_basis = d_orthonormal_basis(s);
    let k = d_basis.len();
    let restricted = FrameMatrix::from_fn(k, k, |a, b| s.inner(&(h * &d_basis[a]), &d_basis[b]));
    let sym = SymmetricEigen::new(0.5 * (&restricted + restricted.transpose()));
    let lambda = sym.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    if lambda < tol {
        return Err(FoliationError::NoSplitting { lambda });
    }
    let mut spread: f64 = 0.0;
    let mut plus: Vec<usize> = Vec::new();
    let mut minus: Vec<usize> = Vec::new();
    for (idx, &ev) in sym.eigenvalues.iter().enumerate() {
        let dev = (ev.abs() - lambda).abs();
        spread = spread.max(dev);
        if ev > 0.0 {
            plus.push(idx);
        } else {
            minus.push(idx);
        }
    }
    if spread > tol || plus.len() != minus.len() {
        return Err(FoliationError::SpectrumNotPaired { spread });
    }
    let assemble = |indices: &[usize], label| {
        let vectors = indices
            .iter()
            .map(|&idx| {
                let coeffs = sym.eigenvectors.column(idx);
                let mut v = FrameVector::zeros(s.dim());
                for (a, u) in d_basis.iter().enumerate() {
                    v += u * coeffs[a];
                }
                v
            })
            .collect();
        DistributionBasis::new(label, vectors)
    };
    Ok(EigenSplit {
        lambda,
        l: assemble(&plus, DistributionLabel::L),
        q: assemble(&minus, DistributionLabel::Q),
    })
}

/// True iff the basis spans an n-dimensional subbundle of `D = ker eta` on
/// which `d eta` vanishes, at every context.
pub fn legendrian_check(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    b: &DistributionBasis,
    tol: f64,
) -> Result<bool, ModelError> {
    let n = (model.dim - 1) / 2;
    if b.rank() != n || b.independence() <= tol {
        return Ok(false);
    }
    if b.vectors.iter().any(|v| s.eta_of(v).abs() > tol) {
        return Ok(false);
    }
    for ctx in model.contexts() {
        let alg = model.algebra(ctx)?;
        let de = d_eta_from_algebra(&alg, s);
        for v in &b.vectors {
            for w in &b.vectors {
                if de.eval(v, w).abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// True iff brackets of basis fields stay inside the span at every context
/// (Frobenius closure on constant coefficients).
pub fn integrability_check(
    model: &ManifoldModel,
    b: &DistributionBasis,
    tol: f64,
) -> Result<bool, ModelError> {
    for ctx in model.contexts() {
        let alg = model.algebra(ctx)?;
        for v in &b.vectors {
            for w in &b.vectors {
                let bracket = alg.bracket_of(v, w);
                if b.span_residual(&bracket) > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// The image `phi B`, which is again Legendrian when `B` is; `L` and `Q`
/// swap labels under phi.
pub fn conjugate_distribution(
    b: &DistributionBasis,
    s: &ContactMetricStructure,
) -> DistributionBasis {
    let label = match b.label {
        DistributionLabel::L => DistributionLabel::Q,
        DistributionLabel::Q => DistributionLabel::L,
        DistributionLabel::User => DistributionLabel::User,
    };
    DistributionBasis::new(label, b.vectors.iter().map(|v| s.apply_phi(v)).collect())
}

/// The Pang form of a Legendrian distribution, one matrix per context,
/// relative to the given basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PangForm {
    pub label: DistributionLabel,
    /// `rank x rank` matrices, one per context.
    pub matrices: Vec<FrameMatrix>,
    /// Max disagreement between the two defining routes over every entry
    /// and context.
    pub formula_residual: f64,
}

impl PangForm {
    pub fn matrix(&self) -> &FrameMatrix {
        &self.matrices[0]
    }

    pub fn rank_size(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn symmetry_residual(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| (m - m.transpose()).amax())
            .fold(0.0, f64::max)
    }

    /// Max entrywise spread across contexts.
    pub fn context_spread(&self) -> f64 {
        self.matrices
            .iter()
            .skip(1)
            .map(|m| (m - &self.matrices[0]).amax())
            .fold(0.0, f64::max)
    }

    /// `Pi(v, w)` for vectors given by coordinates in the basis.
    pub fn eval_coords(&self, ctx: usize, cv: &FrameVector, cw: &FrameVector) -> f64 {
        (cv.transpose() * &self.matrices[ctx] * cw)[(0, 0)]
    }
}

/// Computes the Pang form twice, from the bracket definition
/// `-eta([w, [v, xi]])` and from the metric route `2 g([xi, v], phi w)`,
/// requiring the two to agree. The metric-route matrix is returned.
pub fn pang_invariant(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    b: &DistributionBasis,
    tol: f64,
) -> Result<PangForm, FoliationError> {
    let k = b.rank();
    let mut matrices = Vec::new();
    let mut formula_residual: f64 = 0.0;
    for ctx in model.contexts() {
        let alg = model.algebra(ctx)?;
        let mut by_definition = FrameMatrix::zeros(k, k);
        let mut by_metric = FrameMatrix::zeros(k, k);
        for (a, v) in b.vectors.iter().enumerate() {
            let v_xi = alg.bracket_of(v, &s.xi);
            let xi_v = alg.bracket_of(&s.xi, v);
            for (c, w) in b.vectors.iter().enumerate() {
                by_definition[(a, c)] = -s.eta_of(&alg.bracket_of(w, &v_xi));
                by_metric[(a, c)] = 2.0 * s.inner(&xi_v, &s.apply_phi(w));
            }
        }
        formula_residual = formula_residual.max((&by_definition - &by_metric).amax());
        matrices.push(by_metric);
    }
    if formula_residual > tol {
        return Err(FoliationError::FormulaMismatch {
            residual: formula_residual,
        });
    }
    Ok(PangForm {
        label: b.label,
        matrices,
        formula_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoliationKind {
    Flat,
    Degenerate,
    NonDegenerate,
}

/// Classification of a Legendrian distribution by the rank of its Pang form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationClass {
    pub kind: FoliationKind,
    /// Numerical rank of the form at each context.
    pub ranks: Vec<usize>,
    /// False when contexts disagree; the aggregate is then Degenerate.
    pub consistent: bool,
}

/// Eigenvalue-threshold trichotomy: all |eigenvalues| below `tol` is Flat,
/// all at or above is NonDegenerate, anything else Degenerate. Contexts
/// that disagree aggregate to Degenerate with `consistent = false`.
pub fn classify(pi: &PangForm, tol: f64) -> FoliationClass {
    let k = pi.rank_size();
    let mut kinds = Vec::with_capacity(pi.matrices.len());
    let mut ranks = Vec::with_capacity(pi.matrices.len());
    for m in &pi.matrices {
        let sym = SymmetricEigen::new(0.5 * (m + m.transpose()));
        let rank = sym.eigenvalues.iter().filter(|ev| ev.abs() >= tol).count();
        ranks.push(rank);
        kinds.push(if rank == 0 {
            FoliationKind::Flat
        } else if rank == k {
            FoliationKind::NonDegenerate
        } else {
            FoliationKind::Degenerate
        });
    }
    let consistent = kinds.iter().all(|k| *k == kinds[0]);
    FoliationClass {
        kind: if consistent { kinds[0] } else { FoliationKind::Degenerate },
        ranks,
        consistent,
    }
}

/// Bracket criterion for flatness: the distribution is flat iff `[xi, v]`
/// stays tangent to it for every basis field.
pub fn flat_bracket_criterion(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    b: &DistributionBasis,
    tol: f64,
) -> Result<bool, ModelError> {
    for ctx in model.contexts() {
        let alg = model.algebra(ctx)?;
        for v in &b.vectors {
            if b.span_residual(&alg.bracket_of(&s.xi, v)) > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Closed-form coefficients of the Pang forms on the two eigenspace
/// foliations of a nullity space: `Pi_L = c_plus g` and `Pi_Q = c_minus g`
/// with
///
/// `c_plus = ((lambda+1)^2 - kappa - mu lambda) / lambda`
/// `c_minus = (-(lambda-1)^2 + kappa - mu lambda) / lambda`
pub fn closed_form_invariants(kappa: f64, mu: f64) -> Result<(f64, f64), FoliationError> {
    if kappa >= 1.0 - 1e-9 {
        return Err(FoliationError::SasakianLimit { kappa });
    }
    let lambda = (1.0 - kappa).sqrt();
    let c_plus = ((lambda + 1.0).powi(2) - kappa - mu * lambda) / lambda;
    let c_minus = (-(lambda - 1.0).powi(2) + kappa - mu * lambda) / lambda;
    Ok((c_plus, c_minus))
}

/// Outcome of the pairing identity
/// `Pi_F(X, X') - Pi_G(phi X, phi X') = 4 g(hX, X')`
/// over both orderings of the pair, plus its two direct consequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub residual: f64,
    /// Set when `h` vanishes within tolerance: the two classes coincide.
    pub same_class_when_h_vanishes: Option<bool>,
    /// Set when both foliations are flat: the sup-norm of `h`, which the
    /// identity forces to vanish.
    pub h_norm_when_both_flat: Option<f64>,
}

/// Checks the pairing identity linking the two Pang forms through `h`.
pub fn pairing_identity_check(
    s: &ContactMetricStructure,
    h: &EndoField,
    pi_l: &PangForm,
    pi_q: &PangForm,
    l: &DistributionBasis,
    q: &DistributionBasis,
    tol: f64,
) -> PairingReport {
    let mut residual: f64 = 0.0;
    for ctx in 0..pi_l.matrices.len() {
        residual = residual.max(pairing_residual_one_way(s, h, pi_l, pi_q, l, q, ctx));
        residual = residual.max(pairing_residual_one_way(s, h, pi_q, pi_l, q, l, ctx));
    }
    let class_l = classify(pi_l, tol);
    let class_q = classify(pi_q, tol);
    let same_class_when_h_vanishes = if h.amax() <= tol {
        Some(class_l.kind == class_q.kind)
    } else {
        None
    };
    let h_norm_when_both_flat =
        if class_l.kind == FoliationKind::Flat && class_q.kind == FoliationKind::Flat {
            Some(h.amax())
        } else {
            None
        };
    PairingReport {
        residual,
        same_class_when_h_vanishes,
        h_norm_when_both_flat,
    }
}

fn pairing_residual_one_way(
    s: &ContactMetricStructure,
    h: &EndoField,
    pi_f: &PangForm,
    pi_g: &PangForm,
    f: &DistributionBasis,
    g: &DistributionBasis,
    ctx: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, v) in f.vectors.iter().enumerate() {
        let cv = g.coordinates(s, &s.apply_phi(v));
        let hv = h * v;
        for (c, w) in f.vectors.iter().enumerate() {
            let cw = g.coordinates(s, &s.apply_phi(w));
            let lhs = pi_f.matrices[ctx][(a, c)] - pi_g.eval_coords(ctx, &cv, &cw);
            let rhs = 4.0 * s.inner(&hv, w);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// The ratio invariant and its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoeckxReport {
    /// `(Pi_L(X,X') + Pi_Q(phi X, phi X')) / (Pi_L(X,X') - Pi_Q(phi X, phi X'))`.
    pub ratio: f64,
    /// `(1 - mu/2) / sqrt(1 - kappa)`, the Boeckx invariant.
    pub boeckx_im: f64,
    /// Max deviation of the ratio over basis pairs and contexts.
    pub ratio_spread: f64,
}

/// Evaluates the ratio of Pang forms pair by pair and the Boeckx invariant
/// `I_M` from the extracted constants. The two agree exactly on a nullity
/// space; a quoted closed form carrying an extra factor 1/4 does not match
/// the computation, so both numbers are reported for side-by-side reading.
pub fn boeckx_invariant(
    s: &ContactMetricStructure,
    pi_l: &PangForm,
    pi_q: &PangForm,
    l: &DistributionBasis,
    q: &DistributionBasis,
    kappa: f64,
    mu: f64,
    tol: f64,
) -> Result<BoeckxReport, FoliationError> {
    if kappa >= 1.0 - 1e-9 {
        return Err(FoliationError::SasakianLimit { kappa });
    }
    let mut ratio: Option<f64> = None;
    let mut ratio_spread: f64 = 0.0;
    for ctx in 0..pi_l.matrices.len() {
        for (a, v) in l.vectors.iter().enumerate() {
            let cv = q.coordinates(s, &s.apply_phi(v));
            for (c, w) in l.vectors.iter().enumerate() {
                if s.inner(v, w).abs() <= tol {
                    continue;
                }
                let cw = q.coordinates(s, &s.apply_phi(w));
                let p = pi_l.matrices[ctx][(a, c)];
                let q_val = pi_q.eval_coords(ctx, &cv, &cw);
                let denom = p - q_val;
                if denom.abs() <= tol {
                    return Err(FoliationError::ZeroDenominator);
                }
                let r = (p + q_val) / denom;
                if let Some(first) = ratio {
                    ratio_spread = ratio_spread.max((r - first).abs());
                } else {
                    ratio = Some(r);
                }
            }
        }
    }
    let ratio = ratio.ok_or(FoliationError::ZeroDenominator)?;
    Ok(BoeckxReport {
        ratio,
        boeckx_im: (1.0 - mu / 2.0) / (1.0 - kappa).sqrt(),
        ratio_spread,
    })
}

/// Two readings of `mu` off the Pang form of the (+lambda)-foliation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRecovery {
    /// `2 lambda + 2 - Pi_L(X,X)/g(X,X)`; matches the extracted `mu`, since
    /// the eigenspace coefficient of `Pi_L` is `2 lambda + 2 - mu`.
    pub mu_recovered: f64,
    /// `Pi_L(X,X) / (lambda g(X,X))`, a ratio sometimes quoted as a closed
    /// form for `mu`; it actually equals `(2 lambda + 2 - mu)/lambda` and
    /// matches `mu` only where those expressions coincide. Reported so the
    /// discrepancy stays visible next to `mu_recovered`.
    pub mu_ratio_value: f64,
    /// Max deviation of either reading over basis vectors and contexts.
    pub spread: f64,
}

pub fn recover_mu(
    s: &ContactMetricStructure,
    pi_l: &PangForm,
    l: &DistributionBasis,
    lambda: f64,
) -> MuRecovery {
    let mut first: Option<(f64, f64)> = None;
    let mut spread: f64 = 0.0;
    for ctx in 0..pi_l.matrices.len() {
        for (a, v) in l.vectors.iter().enumerate() {
            let norm2 = s.inner(v, v);
            let coeff = pi_l.matrices[ctx][(a, a)] / norm2;
            let pair = (2.0 * lambda + 2.0 - coeff, coeff / lambda);
            if let Some((m0, r0)) = first {
                spread = spread.max((pair.0 - m0).abs()).max((pair.1 - r0).abs());
            } else {
                first = Some(pair);
            }
        }
    }
    let (mu_recovered, mu_ratio_value) = first.expect("basis is nonempty");
    MuRecovery {
        mu_recovered,
        mu_ratio_value,
        spread,
    }
}

/// Sign tests deciding flatness of the two eigenspace foliations:
/// `F_lambda` is flat iff `kappa + mu lambda - (lambda+1)^2 = 0` and
/// `F_{-lambda}` iff `kappa - mu lambda - (lambda-1)^2 = 0`. Both vanish
/// only at `kappa = 1`, which is outside the non-Sasakian range.
pub fn flatness_conditions(kappa: f64, mu: f64, tol: f64) -> Result<(bool, bool), FoliationError> {
    if kappa >= 1.0 - 1e-9 {
        return Err(FoliationError::SasakianLimit { kappa });
    }
    let lambda = (1.0 - kappa).sqrt();
    let plus = kappa + mu * lambda - (lambda + 1.0).powi(2);
    let minus = kappa - mu * lambda - (lambda - 1.0).powi(2);
    Ok((plus.abs() <= tol, minus.abs() <= tol))
}

/// Max entrywise change of the Pang form under a D-homothetic deformation
/// with factor `a`, evaluated on the same basis. The form is exactly
/// invariant: the deformed `xi` scales by `1/a`, the deformed `eta` by `a`.
pub fn pi_deformation_invariance(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    a: f64,
    b: &DistributionBasis,
    tol: f64,
) -> Result<f64, FoliationError> {
    let before = pang_invariant(model, s, b, tol)?;
    let deformed = crate::contact::deform(s, a)?;
    let after = pang_invariant(model, &deformed, b, tol)?;
    let mut worst: f64 = 0.0;
    for (m0, m1) in before.matrices.iter().zip(after.matrices.iter()) {
        worst = worst.max((m1 - m0).amax());
    }
    Ok(worst)
}
