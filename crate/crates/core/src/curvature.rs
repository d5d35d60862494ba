//! Levi-Civita connection, curvature, and extraction of the nullity
//! constants `(kappa, mu)` from `R(V, W) xi`.
//!
//! With constant tensor components and constant brackets, the Koszul
//! formula closes over structure constants:
//! `2 g(nabla_i e_j, e_k) = g([e_i,e_j], e_k) - g([e_j,e_k], e_i) + g([e_k,e_i], e_j)`,
//! and curvature needs no derivative terms:
//! `R(e_i, e_j) e_k = nabla_i nabla_j e_k - nabla_j nabla_i e_k - nabla_{[e_i,e_j]} e_k`.

use serde::{Deserialize, Serialize};

use crate::contact::{is_k_contact, ContactMetricStructure, EndoField};
use crate::foliation::{eigendistributions, FoliationError};
use crate::model::{FrameAlgebra, FrameMatrix, FrameVector, ManifoldModel, ModelError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurvatureError {
    #[error("metric is singular; the Koszul system has no solution")]
    SingularMetric,
    #[error("xi is not in any (kappa, mu)-nullity distribution: residual {residual:.3e}")]
    NotNullity { residual: f64 },
    #[error("(kappa, mu) varies across sample points: spread {spread:.3e}")]
    NonConstantAcrossPoints { spread: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
}

/// Connection coefficients in the frame: `gamma[i][j] = nabla_{e_i} e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub gamma: Vec<Vec<FrameVector>>,
}

impl Connection {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// `nabla_{e_i} v` for a constant-coefficient frame vector `v`.
    pub fn derive_vector(&self, i: usize, v: &FrameVector) -> FrameVector {
        let mut out = FrameVector::zeros(self.dim());
        for (l, c) in v.iter().enumerate() {
            if *c != 0.0 {
                out += &self.gamma[i][l] * *c;
            }
        }
        out
    }

    /// `nabla_w e_j` for a constant-coefficient direction `w`.
    pub fn derive_along(&self, w: &FrameVector, j: usize) -> FrameVector {
        let mut out = FrameVector::zeros(self.dim());
        for (l, c) in w.iter().enumerate() {
            if *c != 0.0 {
                out += &self.gamma[l][j] * *c;
            }
        }
        out
    }

    /// `(nabla_i T)(e_j)` for an endomorphism with constant components.
    pub fn derive_endo(&self, i: usize, t: &EndoField) -> EndoField {
        let dim = self.dim();
        let mut out = EndoField::zeros(dim, dim);
        for j in 0..dim {
            let t_col = t.column(j).clone_owned();
            let col = self.derive_vector(i, &t_col) - t * &self.gamma[i][j];
            out.set_column(j, &col);
        }
        out
    }

    /// `(nabla_i w)(e_j) = -w(gamma[i][j])` for a covector with constant
    /// components.
    pub fn derive_covector(&self, i: usize, w: &FrameVector) -> FrameVector {
        let dim = self.dim();
        FrameVector::from_fn(dim, |j, _| -w.dot(&self.gamma[i][j]))
    }

    /// `(nabla_i B)(e_j, e_k)` for a bilinear form with constant components.
    pub fn derive_bilinear(&self, i: usize, b: &FrameMatrix) -> FrameMatrix {
        let dim = self.dim();
        FrameMatrix::from_fn(dim, dim, |j, k| {
            let along_j = self.gamma[i][j].dot(&b.column(k).clone_owned());
            let along_k = b.row(j).transpose().dot(&self.gamma[i][k]);
            -along_j - along_k
        })
    }

    /// Max torsion residual `|gamma[i][j] - gamma[j][i] - [e_i, e_j]|`.
    pub fn torsion_residual(&self, alg: &FrameAlgebra) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let t = &self.gamma[i][j] - &self.gamma[j][i] - alg.bracket(i, j);
                worst = worst.max(t.amax());
            }
        }
        worst
    }

    /// Max metric-compatibility residual `|(nabla_i g)(e_j, e_k)|`.
    pub fn metric_residual(&self, g: &FrameMatrix) -> f64 {
        (0..self.dim())
            .map(|i| self.derive_bilinear(i, g).amax())
            .fold(0.0, f64::max)
    }
}

/// Levi-Civita connection of `g` via the Koszul formula.
pub fn levi_civita(alg: &FrameAlgebra, g: &FrameMatrix) -> Result<Connection, CurvatureError> {
    let dim = alg.dim;
    let lu = g.clone().lu();
    if lu.determinant().abs() < 1e-14 {
        return Err(CurvatureError::SingularMetric);
    }
    let inner = |u: &FrameVector, k: usize| (u.transpose() * g.column(k).clone_owned())[(0, 0)];
    let mut gamma = vec![vec![FrameVector::zeros(dim); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut rhs = FrameVector::zeros(dim);
            for k in 0..dim {
                rhs[k] = inner(alg.bracket(i, j), k)
                    - (alg.bracket(j, k).transpose() * g.column(i).clone_owned())[(0, 0)]
                    + (alg.bracket(k, i).transpose() * g.column(j).clone_owned())[(0, 0)];
            }
            gamma[i][j] = lu.solve(&(rhs * 0.5)).ok_or(CurvatureError::SingularMetric)?;
        }
    }
    Ok(Connection { gamma })
}

/// Max residual of `nabla_V xi = -phi h V - phi V` over frame directions.
pub fn check_nabla_xi(conn: &Connection, s: &ContactMetricStructure, h: &EndoField) -> f64 {
    let dim = conn.dim();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let mut ei = FrameVector::zeros(dim);
        ei[i] = 1.0;
        let lhs = conn.derive_vector(i, &s.xi);
        let rhs = -s.apply_phi(&(h * &ei)) - s.apply_phi(&ei);
        worst = worst.max((lhs - rhs).amax());
    }
    worst
}

/// Curvature tensor on frame triples: `r[i][j][k] = R(e_i, e_j) e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub r: Vec<Vec<Vec<FrameVector>>>,
}

impl CurvatureField {
    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// Trilinear evaluation `R(u, v) w` for constant-coefficient vectors.
    pub fn eval(&self, u: &FrameVector, v: &FrameVector, w: &FrameVector) -> FrameVector {
        let dim = self.dim();
        let mut out = FrameVector::zeros(dim);
        for i in 0..dim {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                if v[j] == 0.0 {
                    continue;
                }
                for k in 0..dim {
                    if w[k] == 0.0 {
                        continue;
                    }
                    out += &self.r[i][j][k] * (u[i] * v[j] * w[k]);
                }
            }
        }
        out
    }

    /// Max residual of the pair symmetry
    /// `g(R(e_i,e_j)e_k, e_l) = g(R(e_k,e_l)e_i, e_j)`.
    pub fn pair_symmetry_residual(&self, g: &FrameMatrix) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let a = (self.r[i][j][k].transpose() * g.column(l).clone_owned())[(0, 0)];
                        let b = (self.r[k][l][i].transpose() * g.column(j).clone_owned())[(0, 0)];
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
        worst
    }
}

pub fn riemann(alg: &FrameAlgebra, conn: &Connection) -> CurvatureField {
    let dim = alg.dim;
    let mut r = vec![vec![vec![FrameVector::zeros(dim); dim]; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let a = conn.derive_vector(i, &conn.gamma[j][k]);
                let b = conn.derive_vector(j, &conn.gamma[i][k]);
                let c = conn.derive_along(alg.bracket(i, j), k);
                r[i][j][k] = a - b - c;
            }
        }
    }
    CurvatureField { r }
}

/// Extraction result for the nullity condition
/// `R(V, W) xi = kappa (eta(W) V - eta(V) W) + mu (eta(W) hV - eta(V) hW)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaMuReport {
    pub kappa: f64,
    /// Absent in the Sasakian case, where `h = 0` leaves `mu` undetermined.
    pub mu: Option<f64>,
    /// Positive eigenvalue of `h` on `D`; zero when Sasakian.
    pub lambda: f64,
    /// Max nullity residual over frame pairs and contexts.
    pub residual: f64,
    pub sasakian: bool,
    pub k_contact: bool,
}

/// Extracts `(kappa, mu)` from curvature, validating the full nullity
/// condition over every frame pair and context.
pub fn extract_kappa_mu(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    tol: f64,
) -> Result<KappaMuReport, CurvatureError> {
    let mut per_context: Vec<KappaMuReport> = Vec::new();
    for ctx in model.contexts() {
        let alg = model.algebra(ctx)?;
        per_context.push(extract_from_algebra(&alg, s, tol)?);
    }
    let first = per_context[0].clone();
    let mut spread: f64 = 0.0;
    let mut residual = first.residual;
    for r in per_context.iter().skip(1) {
        spread = spread.max((r.kappa - first.kappa).abs());
        if let (Some(m0), Some(m1)) = (first.mu, r.mu) {
            spread = spread.max((m1 - m0).abs());
        }
        residual = residual.max(r.residual);
    }
    if spread > tol {
        return Err(CurvatureError::NonConstantAcrossPoints { spread });
    }
    Ok(KappaMuReport { residual, ..first })
}

fn extract_from_algebra(
    alg: &FrameAlgebra,
    s: &ContactMetricStructure,
    tol: f64,
) -> Result<KappaMuReport, CurvatureError> {
    let h = crate::contact::compute_h_from_algebra(alg, s);
    let conn = levi_civita(alg, &s.g)?;
    let curv = riemann(alg, &conn);
    let k_contact = is_k_contact(&h, tol);

    if k_contact {
        // Sasakian test: R(V, W) xi = eta(W) V - eta(V) W.
        let residual = nullity_residual(&curv, s, &h, 1.0, 0.0);
        if residual > tol {
            return Err(CurvatureError::NotNullity { residual });
        }
        return Ok(KappaMuReport {
            kappa: 1.0,
            mu: None,
            lambda: 0.0,
            residual,
            sasakian: true,
            k_contact,
        });
    }

    let split = eigendistributions(s, &h, tol)?;
    let e = &split.l.vectors[0];
    let f = &split.q.vectors[0];
    let r_e = curv.eval(e, &s.xi, &s.xi);
    let r_f = curv.eval(f, &s.xi, &s.xi);
    // Unit eigenvectors: g(R(e, xi) xi, e) = kappa + mu lambda, and with f
    // from the opposite eigenspace, g(R(f, xi) xi, f) = kappa - mu lambda.
    let a = s.inner(&r_e, e);
    let b = s.inner(&r_f, f);
    let kappa = 0.5 * (a + b);
    let mu = 0.5 * (a - b) / split.lambda;
    let residual = nullity_residual(&curv, s, &h, kappa, mu);
    if residual > tol {
        return Err(CurvatureError::NotNullity { residual });
    }
    Ok(KappaMuReport {
        kappa,
        mu: Some(mu),
        lambda: split.lambda,
        residual,
        sasakian: false,
        k_contact,
    })
}

/// Max over frame pairs of
/// `|R(e_i, e_j) xi - kappa (eta_j e_i - eta_i e_j) - mu (eta_j h e_i - eta_i h e_j)|`.
pub fn nullity_residual(
    curv: &CurvatureField,
    s: &ContactMetricStructure,
    h: &EndoField,
    kappa: f64,
    mu: f64,
) -> f64 {
    let dim = curv.dim();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let ei = crate::model::basis_vector(dim, i);
        let h_ei = h * &ei;
        for j in 0..dim {
            let ej = crate::model::basis_vector(dim, j);
            let h_ej = h * &ej;
            let lhs = curv.eval(&ei, &ej, &s.xi);
            let rhs = (&ei * s.eta[j] - &ej * s.eta[i]) * kappa
                + (&h_ei * s.eta[j] - &h_ej * s.eta[i]) * mu;
            worst = worst.max((lhs - rhs).amax());
        }
    }
    worst
}

/// Max residual of the Sasakian identity
/// `(nabla_V phi) W = g(V, W) xi - eta(W) V`.
pub fn sasakian_check(conn: &Connection, s: &ContactMetricStructure) -> f64 {
    let dim = conn.dim();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let d_phi = conn.derive_endo(i, &s.phi);
        let ei = crate::model::basis_vector(dim, i);
        for j in 0..dim {
            let lhs = d_phi.column(j).clone_owned();
            let rhs = &s.xi * s.g[(i, j)] - &ei * s.eta[j];
            worst = worst.max((lhs - rhs).amax());
        }
    }
    worst
}

/// Max residual of the two covariant-derivative identities that hold on a
/// non-Sasakian nullity space:
///
/// `(nabla_X phi) Y = g(X, Y + hY) xi - eta(Y) (X + hX)`
/// `(nabla_X h) Y = ((1-kappa) g(X, phi Y) + g(X, h phi Y)) xi
///                  + eta(Y) h(phi X + phi h X) - mu eta(X) phi h Y`
pub fn check_kmu_covariant_formulas(
    conn: &Connection,
    s: &ContactMetricStructure,
    h: &EndoField,
    kappa: f64,
    mu: f64,
) -> f64 {
    let dim = conn.dim();
    let phi_h = &s.phi * h;
    let h_phi = h * &s.phi;
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let ei = crate::model::basis_vector(dim, i);
        let d_phi = conn.derive_endo(i, &s.phi);
        let d_h = conn.derive_endo(i, h);
        let x_plus_hx = &ei + h * &ei;
        let h_phix_phihx = h * &(s.apply_phi(&ei) + &phi_h * &ei);
        for j in 0..dim {
            let ej = crate::model::basis_vector(dim, j);
            let phi_rhs = &s.xi * s.inner(&ei, &(&ej + h * &ej)) - &x_plus_hx * s.eta[j];
            worst = worst.max((d_phi.column(j).clone_owned() - phi_rhs).amax());

            let coeff = (1.0 - kappa) * s.inner(&ei, &s.apply_phi(&ej))
                + s.inner(&ei, &(&h_phi * &ej));
            let h_rhs = &s.xi * coeff + &h_phix_phihx * s.eta[j]
                - (&phi_h * &ej) * (mu * s.eta[i]);
            worst = worst.max((d_h.column(j).clone_owned() - h_rhs).amax());
        }
    }
    worst
}
