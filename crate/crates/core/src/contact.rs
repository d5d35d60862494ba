//! Almost contact metric structures `(phi, xi, eta, g)` in frame components,
//! the contact condition `d eta = Phi`, the tensor `h = (1/2) L_xi phi`, and
//! D-homothetic deformations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{FrameAlgebra, FrameMatrix, FrameVector, ManifoldModel, ModelError, PointContext};

/// Endomorphism field with constant frame components.
pub type EndoField = FrameMatrix;

/// Structure tensors in frame components. `phi[(i, j)]` is the
/// `e_i`-component of `phi(e_j)`; `eta[i] = eta(e_i)`; `g[(i, j)] = g(e_i, e_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMetricStructure {
    pub phi: FrameMatrix,
    pub xi: FrameVector,
    pub eta: FrameVector,
    pub g: FrameMatrix,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContactError {
    #[error("metric is not positive definite")]
    MetricNotPositiveDefinite,
    #[error("deformation factor must be positive, got {a}")]
    InvalidDeformationFactor { a: f64 },
}

/// One named identity with its numeric residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityViolation {
    pub name: String,
    pub residual: f64,
}

impl ContactMetricStructure {
    pub(crate) fn check_shapes(&self, dim: usize) -> Result<(), String> {
        if self.phi.nrows() != dim || self.phi.ncols() != dim {
            return Err(format!("phi must be {dim}x{dim}"));
        }
        if self.g.nrows() != dim || self.g.ncols() != dim {
            return Err(format!("g must be {dim}x{dim}"));
        }
        if self.xi.len() != dim {
            return Err(format!("xi must have {dim} components"));
        }
        if self.eta.len() != dim {
            return Err(format!("eta must have {dim} components"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn eta_of(&self, v: &FrameVector) -> f64 {
        self.eta.dot(v)
    }

    pub fn inner(&self, u: &FrameVector, v: &FrameVector) -> f64 {
        (u.transpose() * &self.g * v)[(0, 0)]
    }

    pub fn apply_phi(&self, v: &FrameVector) -> FrameVector {
        &self.phi * v
    }
}

/// Evaluates the defining identities of an almost contact metric structure
/// and returns every violation above `tol`. An empty list means the
/// structure is valid at that tolerance.
pub fn validate_acm(
    s: &ContactMetricStructure,
    tol: f64,
) -> Result<Vec<IdentityViolation>, ContactError> {
    let dim = s.dim();
    if s.g.clone().cholesky().is_none() {
        return Err(ContactError::MetricNotPositiveDefinite);
    }
    let mut violations = Vec::new();
    let mut check = |name: &str, residual: f64| {
        if residual > tol {
            violations.push(IdentityViolation {
                name: name.to_string(),
                residual,
            });
        }
    };
    check("g symmetric", (&s.g - s.g.transpose()).amax());
    check("eta(xi) = 1", (s.eta.dot(&s.xi) - 1.0).abs());
    let phi2 = &s.phi * &s.phi;
    let xi_eta = &s.xi * s.eta.transpose();
    check(
        "phi^2 = -id + xi (x) eta",
        (&phi2 + DMatrix::<f64>::identity(dim, dim) - &xi_eta).amax(),
    );
    check("phi(xi) = 0", (&s.phi * &s.xi).amax());
    check("eta compose phi = 0", (s.eta.transpose() * &s.phi).amax());
    let eta_eta = &s.eta * s.eta.transpose();
    check(
        "g(phi., phi.) = g - eta (x) eta",
        (s.phi.transpose() * &s.g * &s.phi - &s.g + &eta_eta).amax(),
    );
    Ok(violations)
}

/// Bilinear form with constant frame components: `form[(i, j)] = w(e_i, e_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    pub components: FrameMatrix,
}

impl TwoForm {
    pub fn eval(&self, u: &FrameVector, v: &FrameVector) -> f64 {
        (u.transpose() * &self.components * v)[(0, 0)]
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        (&self.components + self.components.transpose()).amax()
    }
}

/// The fundamental 2-form `Phi(V, W) = g(V, phi W)`.
pub fn fundamental_form(s: &ContactMetricStructure) -> TwoForm {
    TwoForm {
        components: &s.g * &s.phi,
    }
}

/// `d eta` on frame fields: with constant eta components,
/// `d eta(e_i, e_j) = -(1/2) eta([e_i, e_j])`. Antisymmetric exactly, by
/// construction from the upper triangle.
pub fn d_eta(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    ctx: PointContext,
) -> Result<TwoForm, ModelError> {
    let alg = model.algebra(ctx)?;
    Ok(d_eta_from_algebra(&alg, s))
}

pub fn d_eta_from_algebra(alg: &FrameAlgebra, s: &ContactMetricStructure) -> TwoForm {
    let dim = alg.dim;
    let mut m = FrameMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let v = -0.5 * s.eta.dot(alg.bracket(i, j));
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
    TwoForm { components: m }
}

/// Outcome of the contact condition `d eta = Phi` plus nondegeneracy of
/// `d eta` restricted to `D = ker eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    /// Max over contexts and frame pairs of `|d eta - Phi|`.
    pub max_residual: f64,
    /// Min over contexts of `|det|` of the restricted form in a
    /// g-orthonormal basis of D.
    pub min_abs_det: f64,
    pub nondegenerate: bool,
    pub contact: bool,
}

pub fn contact_check(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    tol: f64,
) -> Result<ContactReport, ModelError> {
    let phi_form = fundamental_form(s);
    let d_basis = d_orthonormal_basis(s);
    let mut max_residual: f64 = 0.0;
    let mut min_abs_det = f64::INFINITY;
    for ctx in model.contexts() {
        let alg = model.algebra(ctx)?;
        let de = d_eta_from_algebra(&alg, s);
        max_residual = max_residual.max((&de.components - &phi_form.components).amax());
        let k = d_basis.len();
        let mut restricted = DMatrix::zeros(k, k);
        for (a, u) in d_basis.iter().enumerate() {
            for (b, v) in d_basis.iter().enumerate() {
                restricted[(a, b)] = de.eval(u, v);
            }
        }
        min_abs_det = min_abs_det.min(restricted.determinant().abs());
    }
    let nondegenerate = min_abs_det >= tol;
    Ok(ContactReport {
        max_residual,
        min_abs_det,
        nondegenerate,
        contact: nondegenerate && max_residual <= tol,
    })
}

/// g-orthonormal basis of `D = ker eta`, built by projecting the frame along
/// `xi` and running Gram-Schmidt. A valid structure yields exactly `dim - 1`
/// vectors.
pub fn d_orthonormal_basis(s: &ContactMetricStructure) -> Vec<FrameVector> {
    let dim = s.dim();
    let mut basis: Vec<FrameVector> = Vec::with_capacity(dim - 1);
    for j in 0..dim {
        let mut v = FrameVector::zeros(dim);
        v[j] = 1.0;
        // D-projection: eta(v - eta(v) xi) = 0 since eta(xi) = 1.
        v -= &s.xi * s.eta_of(&v);
        for u in &basis {
            let c = s.inner(&v, u);
            v -= u * c;
        }
        let norm2 = s.inner(&v, &v);
        if norm2 > 1e-18 {
            basis.push(v / norm2.sqrt());
        }
        if basis.len() == dim - 1 {
            break;
        }
    }
    basis
}

/// `h(V) = (1/2) ( [xi, phi V] - phi [xi, V] )` on frame fields; the matrix
/// column `j` holds `h(e_j)`.
pub fn compute_h(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    ctx: PointContext,
) -> Result<EndoField, ModelError> {
    let alg = model.algebra(ctx)?;
    Ok(compute_h_from_algebra(&alg, s))
}

pub fn compute_h_from_algebra(alg: &FrameAlgebra, s: &ContactMetricStructure) -> EndoField {
    let dim = alg.dim;
    let mut h = FrameMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut ej = FrameVector::zeros(dim);
        ej[j] = 1.0;
        let phi_ej = s.apply_phi(&ej);
        let col = 0.5
            * (alg.bracket_of(&s.xi, &phi_ej) - s.apply_phi(&alg.bracket_of(&s.xi, &ej)));
        h.set_column(j, &col);
    }
    h
}

/// Residuals of the algebraic identities a genuine `h` satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HReport {
    /// `g(hV, W) = g(V, hW)`.
    pub g_symmetry: f64,
    pub trace: f64,
    /// `h phi + phi h = 0`.
    pub anticommutes_phi: f64,
    /// `h(xi) = 0`.
    pub kills_xi: f64,
}

impl HReport {
    pub fn max_residual(&self) -> f64 {
        self.g_symmetry
            .max(self.trace)
            .max(self.anticommutes_phi)
            .max(self.kills_xi)
    }
}

pub fn h_identities_check(s: &ContactMetricStructure, h: &EndoField) -> HReport {
    HReport {
        g_symmetry: (h.transpose() * &s.g - &s.g * h).amax(),
        trace: h.trace().abs(),
        anticommutes_phi: (h * &s.phi + &s.phi * h).amax(),
        kills_xi: (h * &s.xi).amax(),
    }
}

/// K-contact means `xi` is Killing, equivalently `h = 0`.
pub fn is_k_contact(h: &EndoField, tol: f64) -> bool {
    h.amax() <= tol
}

/// D-homothetic deformation with factor `a > 0`:
/// `phi' = phi`, `eta' = a eta`, `xi' = xi / a`,
/// `g' = a g + a(a-1) eta (x) eta`. The frame and its brackets are
/// untouched, so the deformed structure lives on the same model.
pub fn deform(
    s: &ContactMetricStructure,
    a: f64,
) -> Result<ContactMetricStructure, ContactError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(ContactError::InvalidDeformationFactor { a });
    }
    let eta_eta = &s.eta * s.eta.transpose();
    Ok(ContactMetricStructure {
        phi: s.phi.clone(),
        xi: &s.xi / a,
        eta: &s.eta * a,
        g: &s.g * a + eta_eta * (a * (a - 1.0)),
    })
}
