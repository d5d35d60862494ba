//! The bi-Legendrian connection of a pair of complementary Legendrian
//! distributions, its torsion and parallelism suites, the equivalence
//! between its defining conditions and curvature nullity, and the
//! Tanaka-Webster extension.
//!
//! Everything here runs in an adapted frame: the first `n` fields span L,
//! the next `n` span Q, and the last spans the Reeb line. The case split in
//! the connection's definition is then block-aligned and the projections
//! are coordinate masks.

use crate::contact::{
    compute_h_from_algebra, d_eta_from_algebra, ContactError, ContactMetricStructure,
};
use crate::curvature::{extract_kappa_mu, levi_civita, Connection, CurvatureError, KappaMuReport};
use crate::foliation::{DistributionBasis, FoliationError};
use crate::model::{
    basis_vector, AdaptedBlocks, Backend, FrameAlgebra, FrameMatrix, FrameVector, ManifoldModel,
    ModelError,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BiLegError {
    #[error("L, Q and the Reeb line do not span the tangent space: smallest singular value {sigma_min:.3e}")]
    NotComplementary { sigma_min: f64 },
    #[error("chart frame field {field} lies in none of L, Q, span(xi); supply an adapted frame")]
    ChartFrameNotAdapted { field: usize },
    #[error("d eta restricted to the D-block is singular; contact validation should have caught this")]
    SingularRestriction,
    #[error("connection conditions hold but nullity extraction failed ({message}); this would falsify the equivalence")]
    NotKappaMu { message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
}

/// Projections onto L, Q and the Reeb line of an adapted frame, as
/// coordinate masks.
#[derive(Debug, Clone, PartialEq)]
pub struct Projectors {
    pub p_l: FrameMatrix,
    pub p_q: FrameMatrix,
    pub p_xi: FrameMatrix,
}

impl Projectors {
    pub fn from_blocks(dim: usize, blocks: &AdaptedBlocks) -> Self {
        let mask = |indices: &[usize]| {
            let mut m = FrameMatrix::zeros(dim, dim);
            for &i in indices {
                m[(i, i)] = 1.0;
            }
            m
        };
        Projectors {
            p_l: mask(&blocks.l),
            p_q: mask(&blocks.q),
            p_xi: mask(&[blocks.xi]),
        }
    }

    /// Max residual over the defining identities: the three projectors sum
    /// to the identity, are idempotent, and annihilate each other.
    pub fn identity_residual(&self) -> f64 {
        let dim = self.p_l.nrows();
        let id = FrameMatrix::identity(dim, dim);
        let mut worst = (&self.p_l + &self.p_q + &self.p_xi - id).amax();
        for p in [&self.p_l, &self.p_q, &self.p_xi] {
            worst = worst.max((p * p - p).amax());
        }
        for (a, b) in [
            (&self.p_l, &self.p_q),
            (&self.p_l, &self.p_xi),
            (&self.p_q, &self.p_xi),
        ] {
            worst = worst.max((a * b).amax());
        }
        worst
    }
}

/// A model re-expressed in an adapted frame, with the change of basis kept
/// for mapping back.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedModel {
    pub model: ManifoldModel,
    pub projectors: Projectors,
    /// Column `a` holds adapted field `a` in the original frame.
    pub p: FrameMatrix,
    pub n: usize,
}

/// Re-expresses the model in a frame adapted to `TM = L + Q + span(xi)`.
///
/// For the Lie backend the change of basis is `(l_1..l_n, q_1..q_n, xi)` and
/// the structure constants and tensors transform accordingly. For the chart
/// backend, only a permutation of the given frame fields is performed; each
/// field must already lie in L, Q or the Reeb line.
pub fn adapted_frame(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    l: &DistributionBasis,
    q: &DistributionBasis,
    tol: f64,
) -> Result<AdaptedModel, BiLegError> {
    let dim = model.dim;
    let n = (dim - 1) / 2;
    let mut p = FrameMatrix::zeros(dim, dim);
    for (a, v) in l.vectors.iter().chain(q.vectors.iter()).enumerate() {
        p.set_column(a, v);
    }
    p.set_column(dim - 1, &s.xi);
    let sigma_min = p
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if l.rank() != n || q.rank() != n || sigma_min <= tol {
        return Err(BiLegError::NotComplementary { sigma_min });
    }

    let blocks = AdaptedBlocks {
        l: (0..n).collect(),
        q: (n..2 * n).collect(),
        xi: 2 * n,
    };
    let projectors = Projectors::from_blocks(dim, &blocks);

    let model = match &model.backend {
        Backend::Lie { constants } => {
            let alg = FrameAlgebra::new(constants.clone());
            let lu = p.clone().lu();
            let mut table = vec![vec![FrameVector::zeros(dim); dim]; dim];
            for a in 0..dim {
                for b in (a + 1)..dim {
                    let w = alg.bracket_of(&p.column(a).clone_owned(), &p.column(b).clone_owned());
                    let v = lu.solve(&w).ok_or(BiLegError::NotComplementary { sigma_min })?;
                    table[b][a] = -&v;
                    table[a][b] = v;
                }
            }
            ManifoldModel {
                name: model.name.clone(),
                dim,
                backend: Backend::Lie { constants: table },
                structure: transform_structure(s, &p),
                adapted_blocks: Some(blocks),
            }
        }
        Backend::Chart {
            coordinates,
            frame,
            constraints,
            points,
        } => {
            let order = chart_permutation(dim, l, q, s, tol)?;
            let mut perm = FrameMatrix::zeros(dim, dim);
            for (a, &orig) in order.iter().enumerate() {
                perm[(orig, a)] = 1.0;
            }
            p = perm.clone();
            let frame = order.iter().map(|&orig| frame[orig].clone()).collect();
            let sample_points = points.iter().map(|d| d.point.clone()).collect();
            ManifoldModel::chart(
                model.name.clone(),
                dim,
                *coordinates,
                frame,
                constraints.clone(),
                sample_points,
                transform_structure(s, &perm),
                Some(blocks),
            )?
        }
    };
    Ok(AdaptedModel {
        model,
        projectors,
        p,
        n,
    })
}

/// Assigns each chart frame field to the block whose span contains it.
fn chart_permutation(
    dim: usize,
    l: &DistributionBasis,
    q: &DistributionBasis,
    s: &ContactMetricStructure,
    tol: f64,
) -> Result<Vec<usize>, BiLegError> {
    let xi_line = DistributionBasis::new(crate::foliation::DistributionLabel::User, vec![s.xi.clone()]);
    let mut l_fields = Vec::new();
    let mut q_fields = Vec::new();
    let mut xi_fields = Vec::new();
    for i in 0..dim {
        let e = basis_vector(dim, i);
        if l.span_residual(&e) <= tol {
            l_fields.push(i);
        } else if q.span_residual(&e) <= tol {
            q_fields.push(i);
        } else if xi_line.span_residual(&e) <= tol {
            xi_fields.push(i);
        } else {
            return Err(BiLegError::ChartFrameNotAdapted { field: i });
        }
    }
    let n = (dim - 1) / 2;
    if l_fields.len() != n || q_fields.len() != n || xi_fields.len() != 1 {
        return Err(BiLegError::ChartFrameNotAdapted {
            field: *xi_fields.first().unwrap_or(&0),
        });
    }
    Ok(l_fields.into_iter().chain(q_fields).chain(xi_fields).collect())
}

fn transform_structure(s: &ContactMetricStructure, p: &FrameMatrix) -> ContactMetricStructure {
    let lu = p.clone().lu();
    let p_inv_phi_p = lu
        .solve(&(&s.phi * p))
        .expect("change of basis is invertible");
    ContactMetricStructure {
        phi: p_inv_phi_p,
        xi: lu.solve(&s.xi).expect("change of basis is invertible"),
        eta: p.transpose() * &s.eta,
        g: p.transpose() * &s.g * p,
    }
}

/// Zeroes every coordinate outside the given block.
fn project(v: &FrameVector, block: &[usize]) -> FrameVector {
    let mut out = FrameVector::zeros(v.len());
    for &i in block {
        out[i] = v[i];
    }
    out
}

/// The section `H(v, w)` of `D` solving `d eta(H, Z) = -d eta(w, [v, Z])`
/// for `Z` over the D-block of an adapted frame. With constant components
/// the Lie-derivative term contributes no derivative part.
pub fn h_operator(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    v: &FrameVector,
    w: &FrameVector,
    ctx: crate::model::PointContext,
) -> Result<FrameVector, BiLegError> {
    let alg = model.algebra(ctx)?;
    let blocks = model
        .adapted_blocks
        .as_ref()
        .expect("h_operator requires an adapted model");
    h_operator_from_algebra(&alg, s, blocks, v, w)
}

fn h_operator_from_algebra(
    alg: &FrameAlgebra,
    s: &ContactMetricStructure,
    blocks: &AdaptedBlocks,
    v: &FrameVector,
    w: &FrameVector,
) -> Result<FrameVector, BiLegError> {
    let d_block: Vec<usize> = blocks.l.iter().chain(blocks.q.iter()).copied().collect();
    let k = d_block.len();
    let de = d_eta_from_algebra(alg, s);
    let basis: Vec<FrameVector> = d_block
        .iter()
        .map(|&i| basis_vector(alg.dim, i))
        .collect();
    let mut system = FrameMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            // d eta(e_{d_a}, e_{d_b}) x_a summed over a equals rhs_b.
            system[(b, a)] = de.eval(&basis[a], &basis[b]);
        }
    }
    let rhs = FrameVector::from_fn(k, |b, _| -de.eval(w, &alg.bracket_of(v, &basis[b])));
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or(BiLegError::SingularRestriction)?;
    let mut out = FrameVector::zeros(alg.dim);
    for (a, &i) in d_block.iter().enumerate() {
        out[i] = x[a];
    }
    Ok(out)
}

/// Bi-Legendrian connection coefficients, one table per context, in the
/// adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLegConnection {
    pub per_context: Vec<Connection>,
    pub n: usize,
}

impl BiLegConnection {
    /// Max coefficient magnitude over all contexts.
    pub fn max_coefficient(&self) -> f64 {
        self.per_context
            .iter()
            .flat_map(|c| c.gamma.iter().flatten())
            .map(|v| v.amax())
            .fold(0.0, f64::max)
    }
}

/// Builds the bi-Legendrian connection on an adapted model:
///
/// for X in the L-block, `nabla-bar_V X = H(V_L, X)_L + [V_Q, X]_L + [V_xi, X]_L`;
/// for Y in the Q-block the roles of L and Q swap; the Reeb field is parallel.
///
/// The structure is passed separately so callers can rebuild the connection
/// under a deformed structure on the same adapted model.
pub fn bileg_connection(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
) -> Result<BiLegConnection, BiLegError> {
    let blocks = model
        .adapted_blocks
        .clone()
        .expect("bileg_connection requires an adapted model");
    let dim = model.dim;
    let n = blocks.l.len();
    let mut per_context = Vec::new();
    for ctx in model.contexts() {
        let alg = model.algebra(ctx)?;
        let mut gamma = vec![vec![FrameVector::zeros(dim); dim]; dim];
        for i in 0..dim {
            let ei = basis_vector(dim, i);
            let i_in_l = blocks.l.contains(&i);
            let i_in_q = blocks.q.contains(&i);
            for j in 0..dim {
                if j == blocks.xi {
                    continue; // nabla-bar of the Reeb block is zero
                }
                let ej = basis_vector(dim, j);
                let j_in_l = blocks.l.contains(&j);
                let (own, _other) = if j_in_l {
                    (&blocks.l, &blocks.q)
                } else {
                    (&blocks.q, &blocks.l)
                };
                let same_block = if j_in_l { i_in_l } else { i_in_q };
                let value = if same_block {
                    h_operator_from_algebra(&alg, s, &blocks, &ei, &ej)?
                } else {
                    alg.bracket_of(&ei, &ej)
                };
                gamma[i][j] = project(&value, own);
            }
        }
        per_context.push(Connection { gamma });
    }
    Ok(BiLegConnection { per_context, n })
}

/// Torsion tables `T(e_i, e_j) = gamma[i][j] - gamma[j][i] - [e_i, e_j]`,
/// one per context.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionField {
    pub per_context: Vec<Vec<Vec<FrameVector>>>,
}

impl TorsionField {
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in &self.per_context {
            for (i, row) in t.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    worst = worst.max((v + &t[j][i]).amax());
                }
            }
        }
        worst
    }

    /// Bilinear evaluation at one context.
    pub fn eval(&self, ctx: usize, u: &FrameVector, v: &FrameVector) -> FrameVector {
        let dim = u.len();
        let mut out = FrameVector::zeros(dim);
        for i in 0..dim {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                if v[j] == 0.0 {
                    continue;
                }
                out += &self.per_context[ctx][i][j] * (u[i] * v[j]);
            }
        }
        out
    }
}

pub fn torsion(bar: &BiLegConnection, model: &ManifoldModel) -> Result<TorsionField, BiLegError> {
    let dim = model.dim;
    let mut per_context = Vec::new();
    for (c, ctx) in model.contexts().into_iter().enumerate() {
        let alg = model.algebra(ctx)?;
        let gamma = &bar.per_context[c].gamma;
        let mut t = vec![vec![FrameVector::zeros(dim); dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                t[i][j] = &gamma[i][j] - &gamma[j][i] - alg.bracket(i, j);
            }
        }
        per_context.push(t);
    }
    Ok(TorsionField { per_context })
}

pub type NamedResiduals = Vec<(String, f64)>;

pub fn max_residual(residuals: &NamedResiduals) -> f64 {
    residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max)
}

/// Residuals of the defining conditions of the bi-Legendrian connection:
/// block preservation, a parallel Reeb covector and contact form, and the
/// torsion clauses on mixed pairs, against the Reeb field, and within each
/// block.
pub fn check_axioms(
    bar: &BiLegConnection,
    tor: &TorsionField,
    model: &ManifoldModel,
    s: &ContactMetricStructure,
) -> Result<NamedResiduals, BiLegError> {
    let blocks = model
        .adapted_blocks
        .clone()
        .expect("check_axioms requires an adapted model");
    let dim = model.dim;
    let mut block_res: f64 = 0.0;
    let mut d_eta_res: f64 = 0.0;
    let mut eta_res: f64 = 0.0;
    let mut mixed_res: f64 = 0.0;
    let mut xi_res: f64 = 0.0;
    let mut ll_res: f64 = 0.0;
    let mut qq_res: f64 = 0.0;

    for (c, ctx) in model.contexts().into_iter().enumerate() {
        let alg = model.algebra(ctx)?;
        let de = d_eta_from_algebra(&alg, s);
        let conn = &bar.per_context[c];

        for i in 0..dim {
            for j in 0..dim {
                let target = if blocks.l.contains(&j) {
                    &blocks.l
                } else if blocks.q.contains(&j) {
                    &blocks.q
                } else {
                    // Reeb block: nabla-bar must vanish there entirely.
                    block_res = block_res.max(conn.gamma[i][j].amax());
                    continue;
                };
                block_res =
                    block_res.max((&conn.gamma[i][j] - project(&conn.gamma[i][j], target)).amax());
            }
            eta_res = eta_res.max(conn.derive_covector(i, &s.eta).amax());
            d_eta_res = d_eta_res.max(conn.derive_bilinear(i, &de.components).amax());
        }

        for &i in &blocks.l {
            let li = basis_vector(dim, i);
            for &j in &blocks.q {
                let qj = basis_vector(dim, j);
                let expected = &s.xi * (2.0 * de.eval(&li, &qj));
                mixed_res = mixed_res.max((tor.eval(c, &li, &qj) - expected).amax());
            }
        }

        for i in 0..dim {
            if i == blocks.xi {
                continue;
            }
            let v = basis_vector(dim, i);
            let v_l = project(&v, &blocks.l);
            let v_q = project(&v, &blocks.q);
            let expected = project(&alg.bracket_of(&s.xi, &v_l), &blocks.q)
                + project(&alg.bracket_of(&s.xi, &v_q), &blocks.l);
            xi_res = xi_res.max((tor.eval(c, &v, &s.xi) - expected).amax());
        }

        for &i in &blocks.l {
            for &j in &blocks.l {
                let bracket = alg.bracket(i, j);
                let expected = -project(bracket, &blocks.q);
                ll_res = ll_res
                    .max((tor.eval(c, &basis_vector(dim, i), &basis_vector(dim, j)) - expected).amax());
            }
        }
        for &i in &blocks.q {
            for &j in &blocks.q {
                let bracket = alg.bracket(i, j);
                let expected = -project(bracket, &blocks.l);
                qq_res = qq_res
                    .max((tor.eval(c, &basis_vector(dim, i), &basis_vector(dim, j)) - expected).amax());
            }
        }
    }

    Ok(vec![
        ("blocks preserved".to_string(), block_res),
        ("nabla-bar eta".to_string(), eta_res),
        ("nabla-bar d eta".to_string(), d_eta_res),
        ("torsion on L x Q".to_string(), mixed_res),
        ("torsion against xi".to_string(), xi_res),
        ("torsion on L x L".to_string(), ll_res),
        ("torsion on Q x Q".to_string(), qq_res),
    ])
}

/// A tensor whose parallelism under the connection is being measured.
pub enum ParallelTensor<'a> {
    Endomorphism(&'a FrameMatrix),
    Metric(&'a FrameMatrix),
    Covector(&'a FrameVector),
}

/// Max covariant-derivative residual of the tensor over frame directions
/// and contexts.
pub fn check_parallel(bar: &BiLegConnection, t: ParallelTensor<'_>) -> f64 {
    let mut worst: f64 = 0.0;
    for conn in &bar.per_context {
        for i in 0..conn.dim() {
            let r = match &t {
                ParallelTensor::Endomorphism(m) => conn.derive_endo(i, m).amax(),
                ParallelTensor::Metric(m) => conn.derive_bilinear(i, m).amax(),
                ParallelTensor::Covector(w) => conn.derive_covector(i, w).amax(),
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Max residual over D-pairs of the relation between the bi-Legendrian and
/// Levi-Civita connections: `nabla-bar_X Y = nabla_X Y - eta(nabla_X Y) xi`.
pub fn levi_civita_relation(
    bar: &BiLegConnection,
    lc: &[Connection],
    s: &ContactMetricStructure,
    n: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (conn, lc) in bar.per_context.iter().zip(lc.iter()) {
        for i in 0..2 * n {
            for j in 0..2 * n {
                let full = &lc.gamma[i][j];
                let expected = full - &s.xi * s.eta_of(full);
                worst = worst.max((&conn.gamma[i][j] - expected).amax());
            }
        }
    }
    worst
}

/// The four equivalent readings of metric compatibility for a conjugate
/// orthogonal pair, evaluated independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEquivalence {
    pub metric_parallel: bool,
    pub phi_parallel: bool,
    /// `nabla-bar_X X' = (phi [X, phi X'])_L` on L, its Q twin, and h
    /// preserving both blocks.
    pub explicit_formulas: bool,
    /// Second fundamental forms of both foliations vanish under the
    /// Levi-Civita connection.
    pub totally_geodesic: bool,
    /// All four booleans agree.
    pub consistent: bool,
}

pub fn metric_equivalence_suite(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    tol: f64,
) -> Result<MetricEquivalence, BiLegError> {
    let blocks = model
        .adapted_blocks
        .clone()
        .expect("metric_equivalence_suite requires an adapted model");
    let dim = model.dim;
    let bar = bileg_connection(model, s)?;
    let metric_parallel = check_parallel(&bar, ParallelTensor::Metric(&s.g)) <= tol;
    let phi_parallel = check_parallel(&bar, ParallelTensor::Endomorphism(&s.phi)) <= tol;

    let mut explicit_res: f64 = 0.0;
    let mut geodesic_res: f64 = 0.0;
    for (c, ctx) in model.contexts().into_iter().enumerate() {
        let alg = model.algebra(ctx)?;
        let h = compute_h_from_algebra(&alg, s);
        explicit_res = explicit_res.max((&h - project_endo(&h, &blocks)).amax());
        let lc = levi_civita(&alg, &s.g)?;
        for (own, other) in [(&blocks.l, &blocks.q), (&blocks.q, &blocks.l)] {
            let complement: Vec<usize> =
                other.iter().copied().chain([blocks.xi]).collect();
            let own_basis = DistributionBasis::new(
                crate::foliation::DistributionLabel::User,
                own.iter().map(|&i| basis_vector(dim, i)).collect(),
            );
            for &i in own {
                let ei = basis_vector(dim, i);
                for &j in own {
                    let ej = basis_vector(dim, j);
                    let phi_bracket =
                        s.apply_phi(&alg.bracket_of(&ei, &s.apply_phi(&ej)));
                    let expected = project(&phi_bracket, own);
                    explicit_res = explicit_res
                        .max((&bar.per_context[c].gamma[i][j] - expected).amax());

                    // Second fundamental form: component of nabla_X X'
                    // g-orthogonal to the leaf.
                    let w = &lc.gamma[i][j];
                    let tangent_coords = own_basis.coordinates(s, w);
                    let mut tangent = FrameVector::zeros(dim);
                    for (a, &idx) in own.iter().enumerate() {
                        tangent += basis_vector(dim, idx) * tangent_coords[a];
                    }
                    let normal = w - tangent;
                    for &z in &complement {
                        geodesic_res = geodesic_res
                            .max(s.inner(&normal, &basis_vector(dim, z)).abs());
                    }
                }
            }
        }
    }
    let explicit_formulas = explicit_res <= tol;
    let totally_geodesic = geodesic_res <= tol;
    let consistent = metric_parallel == phi_parallel
        && phi_parallel == explicit_formulas
        && explicit_formulas == totally_geodesic;
    Ok(MetricEquivalence {
        metric_parallel,
        phi_parallel,
        explicit_formulas,
        totally_geodesic,
        consistent,
    })
}

fn project_endo(m: &FrameMatrix, blocks: &AdaptedBlocks) -> FrameMatrix {
    let dim = m.nrows();
    let mut out = FrameMatrix::zeros(dim, dim);
    for (own, _) in [(&blocks.l, ()), (&blocks.q, ())] {
        for &i in own.iter() {
            for &j in own.iter() {
                out[(i, j)] = m[(i, j)];
            }
        }
    }
    out[(blocks.xi, blocks.xi)] = m[(blocks.xi, blocks.xi)];
    out
}

/// Outcome of the equivalence between the connection-side conditions and
/// curvature nullity, on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// False when `xi` is Killing (`h = 0`): the equivalence presupposes a
    /// non-K-contact structure, so the conditions are reported but not
    /// judged.
    pub applicable: bool,
    pub reason: Option<String>,
    pub residuals: NamedResiduals,
    pub conditions_hold: bool,
    pub extraction: Option<KappaMuReport>,
    pub extraction_error: Option<String>,
    /// Conditions hold iff extraction succeeds.
    pub round_trip_consistent: bool,
    /// Agreement between the curvature-side lambda and the eigenspace
    /// splitting that built the connection.
    pub eigenspace_residual: Option<f64>,
}

/// Builds L and Q from the eigenspaces of `h`, assembles the bi-Legendrian
/// connection, and checks the conditions characterizing a nullity space:
/// block preservation, parallel `eta`, `d eta`, `g` and `h`, and both
/// torsion clauses. Independently extracts `(kappa, mu)` from curvature and
/// reports whether the two sides agree.
pub fn nullity_equivalence_suite(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    tol: f64,
) -> Result<EquivalenceReport, BiLegError> {
    let ctxs = model.contexts();
    let alg0 = model.algebra(ctxs[0])?;
    let h = compute_h_from_algebra(&alg0, s);
    if crate::contact::is_k_contact(&h, tol) {
        return Ok(EquivalenceReport {
            applicable: false,
            reason: Some(
                "xi is Killing (h = 0); the characterization requires a non-K-contact structure"
                    .to_string(),
            ),
            residuals: Vec::new(),
            conditions_hold: false,
            extraction: None,
            extraction_error: None,
            round_trip_consistent: true,
            eigenspace_residual: None,
        });
    }

    let split = crate::foliation::eigendistributions(s, &h, tol)?;
    let adapted = adapted_frame(model, s, &split.l, &split.q, tol)?;
    let a_s = &adapted.model.structure;
    let bar = bileg_connection(&adapted.model, a_s)?;
    let tor = torsion(&bar, &adapted.model)?;
    let mut residuals = check_axioms(&bar, &tor, &adapted.model, a_s)?;
    // Parallelism conditions, with h recomputed in the adapted frame.
    let a_alg0 = adapted.model.algebra(adapted.model.contexts()[0])?;
    let a_h = compute_h_from_algebra(&a_alg0, a_s);
    residuals.push((
        "nabla-bar g".to_string(),
        check_parallel(&bar, ParallelTensor::Metric(&a_s.g)),
    ));
    residuals.push((
        "nabla-bar h".to_string(),
        check_parallel(&bar, ParallelTensor::Endomorphism(&a_h)),
    ));
    let conditions_hold = max_residual(&residuals) <= tol;

    let (extraction, extraction_error) = match extract_kappa_mu(model, s, tol) {
        Ok(report) => (Some(report), None),
        Err(e) => (None, Some(e.to_string())),
    };
    if conditions_hold && extraction.is_none() {
        return Err(BiLegError::NotKappaMu {
            message: extraction_error.unwrap_or_default(),
        });
    }
    let round_trip_consistent = conditions_hold == extraction.is_some();

    let eigenspace_residual = extraction.as_ref().map(|rep| {
        let lambda = rep.lambda;
        let mut worst = (split.lambda - lambda).abs();
        for v in &split.l.vectors {
            worst = worst.max((&h * v - v * lambda).amax());
        }
        for v in &split.q.vectors {
            worst = worst.max((&h * v + v * lambda).amax());
        }
        worst
    });

    Ok(EquivalenceReport {
        applicable: true,
        reason: None,
        residuals,
        conditions_hold,
        extraction,
        extraction_error,
        round_trip_consistent,
        eigenspace_residual,
    })
}

/// Tanaka-Webster connection: the bi-Legendrian connection on D-directions,
/// extended along the Reeb field by `nabla-hat_xi W = -phi h W + [xi, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanakaWebster {
    pub per_context: Vec<Connection>,
    pub n: usize,
}

/// Residuals of the canonical-connection identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TanakaWebsterReport {
    pub metric: f64,
    pub phi: f64,
    pub xi: f64,
    pub eta: f64,
    /// `T(Z, Z') = 2 Phi(Z, Z') xi` over D-pairs.
    pub torsion_d: f64,
}

impl TanakaWebsterReport {
    pub fn max_residual(&self) -> f64 {
        self.metric
            .max(self.phi)
            .max(self.xi)
            .max(self.eta)
            .max(self.torsion_d)
    }
}

pub fn tanaka_webster(
    bar: &BiLegConnection,
    model: &ManifoldModel,
    s: &ContactMetricStructure,
) -> Result<TanakaWebster, BiLegError> {
    let blocks = model
        .adapted_blocks
        .clone()
        .expect("tanaka_webster requires an adapted model");
    let dim = model.dim;
    let xi_slot = blocks.xi;
    // The Reeb frame field is c xi; directional derivatives along it scale
    // by 1/c, recovered from the xi components.
    let c_inv = s.xi[xi_slot];
    let mut per_context = Vec::new();
    for (c, ctx) in model.contexts().into_iter().enumerate() {
        let alg = model.algebra(ctx)?;
        let h = compute_h_from_algebra(&alg, s);
        let mut gamma = bar.per_context[c].gamma.clone();
        for j in 0..dim {
            let ej = basis_vector(dim, j);
            gamma[xi_slot][j] =
                -s.apply_phi(&(&h * &ej)) * c_inv + alg.bracket_of(&s.xi, &ej) * c_inv;
        }
        per_context.push(Connection { gamma });
    }
    Ok(TanakaWebster { per_context, n: bar.n })
}

pub fn tanaka_webster_check(
    tw: &TanakaWebster,
    model: &ManifoldModel,
    s: &ContactMetricStructure,
) -> Result<TanakaWebsterReport, BiLegError> {
    let dim = model.dim;
    let phi_form = crate::contact::fundamental_form(s);
    let mut report = TanakaWebsterReport {
        metric: 0.0,
        phi: 0.0,
        xi: 0.0,
        eta: 0.0,
        torsion_d: 0.0,
    };
    for (c, ctx) in model.contexts().into_iter().enumerate() {
        let alg = model.algebra(ctx)?;
        let conn = &tw.per_context[c];
        for i in 0..dim {
            report.metric = report.metric.max(conn.derive_bilinear(i, &s.g).amax());
            report.phi = report.phi.max(conn.derive_endo(i, &s.phi).amax());
            report.xi = report.xi.max(conn.derive_vector(i, &s.xi).amax());
            report.eta = report.eta.max(conn.derive_covector(i, &s.eta).amax());
        }
        for i in 0..2 * tw.n {
            let ei = basis_vector(dim, i);
            for j in 0..2 * tw.n {
                let ej = basis_vector(dim, j);
                let t = &conn.gamma[i][j] - &conn.gamma[j][i] - alg.bracket(i, j);
                let expected = &s.xi * (2.0 * phi_form.eval(&ei, &ej));
                report.torsion_d = report.torsion_d.max((t - expected).amax());
            }
        }
    }
    Ok(report)
}

/// Max entrywise change of the bi-Legendrian coefficients under a
/// D-homothetic deformation with factor `a`, compared in one and the same
/// adapted frame.
pub fn connection_deformation_invariance(
    model: &ManifoldModel,
    s: &ContactMetricStructure,
    a: f64,
    tol: f64,
) -> Result<f64, BiLegError> {
    let ctxs = model.contexts();
    let alg0 = model.algebra(ctxs[0])?;
    let h = compute_h_from_algebra(&alg0, s);
    let split = crate::foliation::eigendistributions(s, &h, tol)?;
    let adapted = adapted_frame(model, s, &split.l, &split.q, tol)?;
    let before = bileg_connection(&adapted.model, &adapted.model.structure)?;
    let deformed = crate::contact::deform(&adapted.model.structure, a)?;
    let after = bileg_connection(&adapted.model, &deformed)?;
    let mut worst: f64 = 0.0;
    for (b, aft) in before.per_context.iter().zip(after.per_context.iter()) {
        for (row_b, row_a) in b.gamma.iter().zip(aft.gamma.iter()) {
            for (v_b, v_a) in row_b.iter().zip(row_a.iter()) {
                worst = worst.max((v_a - v_b).amax());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::compute_h;
    use crate::foliation::{eigendistributions, DistributionLabel};
    use crate::model::{make_kmu_model, make_s3_model, PointContext};
    use crate::DEFAULT_TOL;
    use approx::assert_abs_diff_eq;

    fn adapted_generator(kappa: f64, mu: f64) -> AdaptedModel {
        let model = make_kmu_model(kappa, mu).unwrap();
        let h = compute_h(&model, &model.structure, PointContext::Lie).unwrap();
        let split = eigendistributions(&model.structure, &h, DEFAULT_TOL).unwrap();
        adapted_frame(&model, &model.structure, &split.l, &split.q, DEFAULT_TOL).unwrap()
    }

    fn adapted_sphere() -> AdaptedModel {
        let s3 = make_s3_model();
        let l = DistributionBasis::new(DistributionLabel::User, vec![basis_vector(3, 0)]);
        let q = DistributionBasis::new(DistributionLabel::User, vec![basis_vector(3, 1)]);
        adapted_frame(&s3, &s3.structure, &l, &q, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn projectors_satisfy_their_identities() {
        let adapted = adapted_generator(0.75, 1.0);
        assert!(adapted.projectors.identity_residual() <= 1e-15);
        // Transformed structure stays orthonormal for eigenvector bases.
        let g = &adapted.model.structure.g;
        assert!((g - FrameMatrix::identity(3, 3)).amax() <= 1e-12);
    }

    #[test]
    fn equal_distributions_are_rejected() {
        let model = make_kmu_model(0.0, 0.0).unwrap();
        let h = compute_h(&model, &model.structure, PointContext::Lie).unwrap();
        let split = eigendistributions(&model.structure, &h, DEFAULT_TOL).unwrap();
        match adapted_frame(&model, &model.structure, &split.l, &split.l, DEFAULT_TOL) {
            Err(BiLegError::NotComplementary { sigma_min }) => assert!(sigma_min <= 1e-12),
            other => panic!("expected NotComplementary, got {other:?}"),
        }
    }

    #[test]
    fn chart_frame_must_be_adapted() {
        let s3 = make_s3_model();
        let mut diag = FrameVector::zeros(3);
        diag[0] = 1.0;
        diag[1] = 1.0;
        let l = DistributionBasis::new(DistributionLabel::User, vec![diag.clone()]);
        let mut anti = FrameVector::zeros(3);
        anti[0] = 1.0;
        anti[1] = -1.0;
        let q = DistributionBasis::new(DistributionLabel::User, vec![anti]);
        match adapted_frame(&s3, &s3.structure, &l, &q, DEFAULT_TOL) {
            Err(BiLegError::ChartFrameNotAdapted { field }) => assert_eq!(field, 0),
            other => panic!("expected ChartFrameNotAdapted, got {other:?}"),
        }
    }

    #[test]
    fn h_operator_vanishes_on_generator_diagonal() {
        let adapted = adapted_generator(0.75, 1.0);
        let s = &adapted.model.structure;
        let h00 = h_operator(&adapted.model, s, &basis_vector(3, 0), &basis_vector(3, 0), PointContext::Lie)
            .unwrap();
        assert!(h00.amax() <= 1e-15);
    }

    #[test]
    fn h_operator_is_additive_in_w() {
        let adapted = adapted_generator(0.5, -3.0);
        let s = &adapted.model.structure;
        let v = basis_vector(3, 1);
        let w1 = basis_vector(3, 0);
        let w2 = basis_vector(3, 1);
        let combined = h_operator(&adapted.model, s, &v, &(&w1 * 2.0 + &w2), PointContext::Lie).unwrap();
        let separate = h_operator(&adapted.model, s, &v, &w1, PointContext::Lie).unwrap() * 2.0
            + h_operator(&adapted.model, s, &v, &w2, PointContext::Lie).unwrap();
        assert!((combined - separate).amax() <= 1e-12);
    }

    #[test]
    fn generator_connection_vanishes() {
        for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0), (-1.0, 2.0), (0.5, -3.0)] {
            let adapted = adapted_generator(kappa, mu);
            let bar = bileg_connection(&adapted.model, &adapted.model.structure).unwrap();
            assert!(
                bar.max_coefficient() <= 1e-12,
                "({kappa}, {mu}): {}",
                bar.max_coefficient()
            );
        }
    }

    #[test]
    fn sphere_connection_vanishes_at_every_point() {
        let adapted = adapted_sphere();
        let bar = bileg_connection(&adapted.model, &adapted.model.structure).unwrap();
        assert_eq!(bar.per_context.len(), 20);
        assert!(bar.max_coefficient() <= 1e-9);
    }

    #[test]
    fn generator_torsion_values() {
        let adapted = adapted_generator(0.75, 1.0);
        let s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, s).unwrap();
        let tor = torsion(&bar, &adapted.model).unwrap();
        assert!(tor.antisymmetry_residual() <= 1e-15);
        // T(e, f) = -[e, f] = -2 xi in the adapted frame.
        let t_ef = tor.eval(0, &basis_vector(3, 0), &basis_vector(3, 1));
        assert!((t_ef + &s.xi * 2.0).amax() <= 1e-12);
        // T(e, xi) = -[e, xi] = [xi, e], which lies in the Q-block.
        let t_exi = tor.eval(0, &basis_vector(3, 0), &s.xi);
        let beta = 0.5 + 1.0 - 0.5; // lambda + 1 - mu/2
        assert_abs_diff_eq!(t_exi[1].abs(), beta, epsilon = 1e-12);
        assert_abs_diff_eq!(t_exi[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t_exi[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn axioms_hold_on_fixtures() {
        for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0), (0.5, -3.0)] {
            let adapted = adapted_generator(kappa, mu);
            let s = &adapted.model.structure;
            let bar = bileg_connection(&adapted.model, s).unwrap();
            let tor = torsion(&bar, &adapted.model).unwrap();
            let residuals = check_axioms(&bar, &tor, &adapted.model, s).unwrap();
            assert!(
                max_residual(&residuals) <= 1e-9,
                "({kappa}, {mu}): {residuals:?}"
            );
        }
        let adapted = adapted_sphere();
        let s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, s).unwrap();
        let tor = torsion(&bar, &adapted.model).unwrap();
        let residuals = check_axioms(&bar, &tor, &adapted.model, s).unwrap();
        assert!(max_residual(&residuals) <= 1e-9, "{residuals:?}");
    }

    #[test]
    fn parallelism_on_fixtures() {
        for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0), (-1.0, 2.0)] {
            let adapted = adapted_generator(kappa, mu);
            let s = &adapted.model.structure;
            let alg = adapted.model.algebra(PointContext::Lie).unwrap();
            let h = crate::contact::compute_h_from_algebra(&alg, s);
            let bar = bileg_connection(&adapted.model, s).unwrap();
            assert!(check_parallel(&bar, ParallelTensor::Metric(&s.g)) <= 1e-12);
            assert!(check_parallel(&bar, ParallelTensor::Endomorphism(&s.phi)) <= 1e-12);
            assert!(check_parallel(&bar, ParallelTensor::Endomorphism(&h)) <= 1e-12);
            assert!(check_parallel(&bar, ParallelTensor::Covector(&s.eta)) <= 1e-12);
        }
    }

    #[test]
    fn levi_civita_relation_on_fixtures() {
        for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0), (0.5, -3.0)] {
            let adapted = adapted_generator(kappa, mu);
            let s = &adapted.model.structure;
            let bar = bileg_connection(&adapted.model, s).unwrap();
            let alg = adapted.model.algebra(PointContext::Lie).unwrap();
            let lc = vec![levi_civita(&alg, &s.g).unwrap()];
            assert!(levi_civita_relation(&bar, &lc, s, adapted.n) <= 1e-12);
        }
    }

    #[test]
    fn wrong_connection_violates_block_preservation() {
        // The Levi-Civita connection leaves the Q-block on any generator
        // with lambda != 1: nabla_e f = (1 + lambda) xi.
        let adapted = adapted_generator(0.75, 1.0);
        let s = &adapted.model.structure;
        let alg = adapted.model.algebra(PointContext::Lie).unwrap();
        let lc = levi_civita(&alg, &s.g).unwrap();
        let fake = BiLegConnection {
            per_context: vec![lc],
            n: adapted.n,
        };
        let tor = torsion(&fake, &adapted.model).unwrap();
        let residuals = check_axioms(&fake, &tor, &adapted.model, s).unwrap();
        let block = residuals
            .iter()
            .find(|(name, _)| name == "blocks preserved")
            .unwrap();
        assert!(block.1 > 1e-3);
    }

    #[test]
    fn uniqueness_probe_rejects_perturbed_coefficients() {
        let adapted = adapted_generator(0.75, 1.0);
        let s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, s).unwrap();
        // Perturb one coefficient per block direction; some defining
        // condition must move by at least a tenth of the perturbation.
        for (i, j, k) in [(0usize, 0usize, 0usize), (0, 1, 1), (2, 0, 0), (1, 1, 2)] {
            let mut perturbed = bar.clone();
            perturbed.per_context[0].gamma[i][j][k] += 1e-3;
            let tor = torsion(&perturbed, &adapted.model).unwrap();
            let mut residuals = check_axioms(&perturbed, &tor, &adapted.model, s).unwrap();
            residuals.push((
                "nabla-bar g".to_string(),
                check_parallel(&perturbed, ParallelTensor::Metric(&s.g)),
            ));
            assert!(
                max_residual(&residuals) >= 1e-4,
                "perturbing gamma[{i}][{j}][{k}] went unnoticed"
            );
        }
    }

    #[test]
    fn metric_equivalence_on_fixtures() {
        for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0)] {
            let adapted = adapted_generator(kappa, mu);
            let eq = metric_equivalence_suite(&adapted.model, &adapted.model.structure, DEFAULT_TOL)
                .unwrap();
            assert!(eq.metric_parallel && eq.phi_parallel);
            assert!(eq.explicit_formulas && eq.totally_geodesic);
            assert!(eq.consistent);
        }
        let adapted = adapted_sphere();
        let eq = metric_equivalence_suite(&adapted.model, &adapted.model.structure, DEFAULT_TOL)
            .unwrap();
        assert!(eq.consistent && eq.metric_parallel);
    }

    #[test]
    fn equivalence_suite_on_generator() {
        for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0), (-1.0, 2.0)] {
            let model = make_kmu_model(kappa, mu).unwrap();
            let report = nullity_equivalence_suite(&model, &model.structure, DEFAULT_TOL).unwrap();
            assert!(report.applicable);
            assert!(report.conditions_hold, "({kappa}, {mu}): {:?}", report.residuals);
            assert!(report.round_trip_consistent);
            let ext = report.extraction.unwrap();
            assert_abs_diff_eq!(ext.kappa, kappa, epsilon = 1e-12);
            assert_abs_diff_eq!(ext.mu.unwrap(), mu, epsilon = 1e-12);
            assert!(report.eigenspace_residual.unwrap() <= 1e-12);
        }
    }

    #[test]
    fn equivalence_suite_not_applicable_on_sphere() {
        let s3 = make_s3_model();
        let report = nullity_equivalence_suite(&s3, &s3.structure, DEFAULT_TOL).unwrap();
        assert!(!report.applicable);
        assert!(report.reason.unwrap().contains("Killing"));
    }

    #[test]
    fn equivalence_suite_fails_both_ways_on_perturbed_control() {
        let s = crate::model::standard_structure_3d();
        let entries = vec![
            (0usize, 1usize, vec![0.1, 0.0, 2.0]),
            (2, 0, vec![0.0, 2.0, 0.0]),
        ];
        let model = ManifoldModel::lie("perturbed", 3, &entries, s, None).unwrap();
        let report = nullity_equivalence_suite(&model, &model.structure, DEFAULT_TOL).unwrap();
        assert!(report.applicable);
        assert!(!report.conditions_hold);
        assert!(max_residual(&report.residuals) > 1e-3);
        assert!(report.extraction.is_none());
        assert!(report.extraction_error.is_some());
        assert!(report.round_trip_consistent);
    }

    #[test]
    fn tanaka_webster_on_sphere() {
        let adapted = adapted_sphere();
        let s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, s).unwrap();
        let tw = tanaka_webster(&bar, &adapted.model, s).unwrap();
        // nabla-hat_xi X = -phi h X + [xi, X] = 2Y.
        let col = &tw.per_context[0].gamma[2][0];
        assert_abs_diff_eq!(col[1], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(col[0], 0.0, epsilon = 1e-9);
        let report = tanaka_webster_check(&tw, &adapted.model, s).unwrap();
        assert!(report.max_residual() <= 1e-9, "{report:?}");
    }

    #[test]
    fn tanaka_webster_on_generator() {
        let adapted = adapted_generator(0.75, 1.0);
        let s = &adapted.model.structure;
        let bar = bileg_connection(&adapted.model, s).unwrap();
        let tw = tanaka_webster(&bar, &adapted.model, s).unwrap();
        // nabla-hat_xi e = (1 - mu/2) f up to the eigenbasis orientation.
        let col = &tw.per_context[0].gamma[2][0];
        assert_abs_diff_eq!(col[1].abs(), 0.5, epsilon = 1e-12);
        let report = tanaka_webster_check(&tw, &adapted.model, s).unwrap();
        assert!(report.max_residual() <= 1e-12, "{report:?}");
    }

    #[test]
    fn connection_is_deformation_invariant() {
        for a in [0.5, 2.0, 3.0] {
            for (kappa, mu) in [(0.0, 0.0), (0.75, 1.0)] {
                let model = make_kmu_model(kappa, mu).unwrap();
                let res =
                    connection_deformation_invariance(&model, &model.structure, a, DEFAULT_TOL)
                        .unwrap();
                assert!(res <= 1e-12, "a = {a}, ({kappa}, {mu}): {res}");
            }
        }
    }
}
