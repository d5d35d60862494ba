//! Manifold models: a global frame with constant-component tensors,
//! backed either by Lie structure constants or by chart expressions.
//!
//! Everything downstream (connections, curvature, foliations) consumes the
//! same data: the table of frame brackets `[e_i, e_j]` expressed in frame
//! components, together with the structure tensors. For the Lie backend the
//! table is the given structure constants; for the chart backend it is
//! computed per sample point from 2-jets and re-expressed against the frame
//! by least squares, with an out-of-span gate.

mod schema;

pub use schema::{load_model, model_from_json, model_to_json};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contact::ContactMetricStructure;
use crate::expr::{eval_jet2, Expr, Jet2};
use crate::{DEFAULT_SEED, DEFAULT_TOL};

/// Vector field written in frame components (length `dim`).
pub type FrameVector = DVector<f64>;
/// Endomorphism or bilinear form written in frame components (`dim x dim`).
pub type FrameMatrix = DMatrix<f64>;

/// The frame field `e_i` as a frame vector.
pub fn basis_vector(dim: usize, i: usize) -> FrameVector {
    let mut v = FrameVector::zeros(dim);
    v[i] = 1.0;
    v
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("failed to read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("constraint {constraint} violated at sample point {point}: residual {residual:.3e}")]
    ConstraintViolated {
        constraint: usize,
        point: usize,
        residual: f64,
    },
    #[error("frame rank deficient at sample point {point}: smallest singular value {sigma_min:.3e}")]
    FrameRankDeficient { point: usize, sigma_min: f64 },
    #[error(
        "bracket [e{i}, e{j}] leaves the frame span at sample point {point}: residual {residual:.3e}"
    )]
    SpanResidualExceeded {
        i: usize,
        j: usize,
        point: usize,
        residual: f64,
    },
    #[error("kappa = {kappa} lies in the Sasakian limit (kappa >= 1 - 1e-9): lambda degenerates")]
    SasakianLimit { kappa: f64 },
}

/// Frame values and jets cached at one chart sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPointData {
    pub point: Vec<f64>,
    /// `m x dim`; column `j` holds the ambient components of frame field `j`.
    pub frame_values: DMatrix<f64>,
    /// `jets[field][component]`, each over the `m` chart coordinates.
    pub frame_jets: Vec<Vec<Jet2>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    /// Structure constants `[e_i, e_j] = constants[i][j]`, antisymmetric by
    /// construction.
    Lie { constants: Vec<Vec<FrameVector>> },
    Chart {
        /// Number of ambient chart coordinates `m >= dim`.
        coordinates: usize,
        /// `frame[field][component]` as expressions in `x1..xm`.
        frame: Vec<Vec<Expr>>,
        /// Scalar expressions required to vanish at every sample point.
        constraints: Vec<Expr>,
        points: Vec<ChartPointData>,
    },
}

impl Backend {
    pub fn kind(&self) -> &'static str {
        match self {
            Backend::Lie { .. } => "lie",
            Backend::Chart { .. } => "chart",
        }
    }
}

/// Which frame fields span L, Q and the Reeb direction, when the model
/// declares them. Indices are zero-based frame positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedBlocks {
    pub l: Vec<usize>,
    pub q: Vec<usize>,
    pub xi: usize,
}

/// Evaluation context: the Lie backend is position independent, the chart
/// backend owns one context per sample point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointContext {
    Lie,
    Chart { point: usize },
}

impl PointContext {
    pub fn label(&self) -> String {
        match self {
            PointContext::Lie => "lie".to_string(),
            PointContext::Chart { point } => format!("point {point}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldModel {
    pub name: String,
    /// Odd manifold dimension `2n + 1`.
    pub dim: usize,
    pub backend: Backend,
    pub structure: ContactMetricStructure,
    pub adapted_blocks: Option<AdaptedBlocks>,
}

/// Bracket table of one context: `[e_i, e_j]` in frame components.
///
/// Under the constant-components restriction every vector field handled by
/// the crate is a constant-coefficient combination of frame fields, so the
/// bracket extends bilinearly with no derivative terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlgebra {
    pub dim: usize,
    table: Vec<Vec<FrameVector>>,
}

impl FrameAlgebra {
    pub fn new(table: Vec<Vec<FrameVector>>) -> Self {
        let dim = table.len();
        FrameAlgebra { dim, table }
    }

    pub fn bracket(&self, i: usize, j: usize) -> &FrameVector {
        &self.table[i][j]
    }

    /// `[u, v]` for constant-coefficient frame vectors.
    pub fn bracket_of(&self, u: &FrameVector, v: &FrameVector) -> FrameVector {
        let mut out = FrameVector::zeros(self.dim);
        for i in 0..self.dim {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                if v[j] == 0.0 {
                    continue;
                }
                out += &self.table[i][j] * (u[i] * v[j]);
            }
        }
        out
    }

    /// Max cyclic-sum residual `[e_i,[e_j,e_k]] + [e_j,[e_k,e_i]] + [e_k,[e_i,e_j]]`.
    pub fn jacobi_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let basis: Vec<FrameVector> = (0..self.dim)
            .map(|i| {
                let mut v = FrameVector::zeros(self.dim);
                v[i] = 1.0;
                v
            })
            .collect();
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let cyc = self.bracket_of(&basis[i], &self.table[j][k])
                        + self.bracket_of(&basis[j], &self.table[k][i])
                        + self.bracket_of(&basis[k], &self.table[i][j]);
                    worst = worst.max(cyc.amax());
                }
            }
        }
        worst
    }

    /// Max entrywise difference of the two tables.
    pub fn table_distance(&self, other: &FrameAlgebra) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((&self.table[i][j] - &other.table[i][j]).amax());
            }
        }
        worst
    }
}

impl ManifoldModel {
    /// Builds a Lie-backend model from bracket entries `(i, j, [e_i, e_j])`.
    /// Each unordered pair may appear once in either orientation; the table
    /// is completed by antisymmetry.
    pub fn lie(
        name: impl Into<String>,
        dim: usize,
        entries: &[(usize, usize, Vec<f64>)],
        structure: ContactMetricStructure,
        adapted_blocks: Option<AdaptedBlocks>,
    ) -> Result<Self, ModelError> {
        let schema_err = |path: &str, message: String| ModelError::Schema {
            path: path.to_string(),
            message,
        };
        check_dim(dim)?;
        structure.check_shapes(dim).map_err(|message| schema_err("tensors", message))?;
        let mut constants = vec![vec![FrameVector::zeros(dim); dim]; dim];
        let mut seen = vec![vec![false; dim]; dim];
        for (idx, (i, j, v)) in entries.iter().enumerate() {
            let path = format!("structure_constants[{idx}]");
            if *i >= dim || *j >= dim {
                return Err(schema_err(&path, format!("frame index out of range: ({i}, {j})")));
            }
            if i == j {
                return Err(schema_err(&path, "bracket of a field with itself must be omitted".into()));
            }
            if v.len() != dim {
                return Err(schema_err(&path, format!("expected {dim} components, got {}", v.len())));
            }
            let vec = FrameVector::from_column_slice(v);
            if seen[*i][*j] {
                return Err(schema_err(&path, format!("duplicate entry for pair ({i}, {j})")));
            }
            if seen[*j][*i] && (&constants[*j][*i] + &vec).amax() > 0.0 {
                return Err(schema_err(
                    &path,
                    format!("entry for ({i}, {j}) contradicts the one for ({j}, {i})"),
                ));
            }
            constants[*i][*j] = vec.clone();
            constants[*j][*i] = -vec;
            seen[*i][*j] = true;
        }
        Ok(ManifoldModel {
            name: name.into(),
            dim,
            backend: Backend::Lie { constants },
            structure,
            adapted_blocks,
        })
    }

    /// Builds a chart-backend model, evaluating jets and validating every
    /// sample point (constraints vanish, frame has full rank).
    #[allow(clippy::too_many_arguments)]
    pub fn chart(
        name: impl Into<String>,
        dim: usize,
        coordinates: usize,
        frame: Vec<Vec<Expr>>,
        constraints: Vec<Expr>,
        sample_points: Vec<Vec<f64>>,
        structure: ContactMetricStructure,
        adapted_blocks: Option<AdaptedBlocks>,
    ) -> Result<Self, ModelError> {
        let schema_err = |path: String, message: String| ModelError::Schema { path, message };
        check_dim(dim)?;
        structure
            .check_shapes(dim)
            .map_err(|message| schema_err("tensors".into(), message))?;
        if coordinates < dim {
            return Err(schema_err(
                "coordinates".into(),
                format!("need at least dim = {dim} coordinates, got {coordinates}"),
            ));
        }
        if frame.len() != dim {
            return Err(schema_err(
                "frame".into(),
                format!("expected {dim} frame fields, got {}", frame.len()),
            ));
        }
        for (f, components) in frame.iter().enumerate() {
            if components.len() != coordinates {
                return Err(schema_err(
                    format!("frame[{f}]"),
                    format!("expected {coordinates} components, got {}", components.len()),
                ));
            }
        }
        if sample_points.is_empty() {
            return Err(schema_err("sample_points".into(), "at least one sample point required".into()));
        }

        let mut points = Vec::with_capacity(sample_points.len());
        for (pidx, point) in sample_points.iter().enumerate() {
            if point.len() != coordinates {
                return Err(schema_err(
                    format!("sample_points[{pidx}]"),
                    format!("expected {coordinates} coordinates, got {}", point.len()),
                ));
            }
            for (cidx, constraint) in constraints.iter().enumerate() {
                let value = eval_jet2(constraint, point)
                    .map_err(|e| schema_err(format!("constraints[{cidx}]"), e.to_string()))?
                    .value;
                if value.abs() > DEFAULT_TOL {
                    return Err(ModelError::ConstraintViolated {
                        constraint: cidx,
                        point: pidx,
                        residual: value.abs(),
                    });
                }
            }
            let mut frame_values = DMatrix::zeros(coordinates, dim);
            let mut frame_jets = Vec::with_capacity(dim);
            for (f, components) in frame.iter().enumerate() {
                let mut jets = Vec::with_capacity(coordinates);
                for (c, component) in components.iter().enumerate() {
                    let jet = eval_jet2(component, point)
                        .map_err(|e| schema_err(format!("frame[{f}][{c}]"), e.to_string()))?;
                    frame_values[(c, f)] = jet.value;
                    jets.push(jet);
                }
                frame_jets.push(jets);
            }
            let sigma_min = smallest_singular_value(&frame_values);
            if sigma_min <= DEFAULT_TOL {
                return Err(ModelError::FrameRankDeficient {
                    point: pidx,
                    sigma_min,
                });
            }
            points.push(ChartPointData {
                point: point.clone(),
                frame_values,
                frame_jets,
            });
        }

        Ok(ManifoldModel {
            name: name.into(),
            dim,
            backend: Backend::Chart {
                coordinates,
                frame,
                constraints,
                points,
            },
            structure,
            adapted_blocks,
        })
    }

    /// One context for the Lie backend, one per sample point for the chart
    /// backend.
    pub fn contexts(&self) -> Vec<PointContext> {
        match &self.backend {
            Backend::Lie { .. } => vec![PointContext::Lie],
            Backend::Chart { points, .. } => (0..points.len())
                .map(|point| PointContext::Chart { point })
                .collect(),
        }
    }

    /// `[e_i, e_j]` in frame components at the given context.
    pub fn bracket(
        &self,
        ctx: PointContext,
        i: usize,
        j: usize,
    ) -> Result<FrameVector, ModelError> {
        match (&self.backend, ctx) {
            (Backend::Lie { constants }, PointContext::Lie) => Ok(constants[i][j].clone()),
            (Backend::Chart { points, .. }, PointContext::Chart { point }) => {
                chart_bracket(&points[point], point, i, j)
            }
            _ => panic!("context does not belong to this model's backend"),
        }
    }

    /// Full bracket table at one context.
    pub fn algebra(&self, ctx: PointContext) -> Result<FrameAlgebra, ModelError> {
        match (&self.backend, ctx) {
            (Backend::Lie { constants }, PointContext::Lie) => {
                Ok(FrameAlgebra::new(constants.clone()))
            }
            (Backend::Chart { points, .. }, PointContext::Chart { point }) => {
                let data = &points[point];
                let mut table = vec![vec![FrameVector::zeros(self.dim); self.dim]; self.dim];
                for i in 0..self.dim {
                    for j in (i + 1)..self.dim {
                        let v = chart_bracket(data, point, i, j)?;
                        table[j][i] = -&v;
                        table[i][j] = v;
                    }
                }
                Ok(FrameAlgebra::new(table))
            }
            _ => panic!("context does not belong to this model's backend"),
        }
    }

    /// Bracket tables at every context, plus the largest entrywise spread
    /// between them. Downstream stages require the spread to stay inside the
    /// tolerance: the crate's tensor calculus assumes constant components.
    pub fn algebras(&self) -> Result<(Vec<FrameAlgebra>, f64), ModelError> {
        let contexts = self.contexts();
        let mut algebras = Vec::with_capacity(contexts.len());
        for ctx in contexts {
            algebras.push(self.algebra(ctx)?);
        }
        let mut spread: f64 = 0.0;
        for other in algebras.iter().skip(1) {
            spread = spread.max(algebras[0].table_distance(other));
        }
        Ok((algebras, spread))
    }
}

/// Max Jacobi cyclic-sum residual over contexts; zero for an honest Lie
/// algebra, and the first thing that blows up on a perturbed constants table.
pub fn jacobi_check(model: &ManifoldModel) -> Result<f64, ModelError> {
    let (algebras, _) = model.algebras()?;
    Ok(algebras
        .iter()
        .map(|a| a.jacobi_residual())
        .fold(0.0, f64::max))
}

fn check_dim(dim: usize) -> Result<(), ModelError> {
    if dim < 3 || dim % 2 == 0 {
        return Err(ModelError::Schema {
            path: "dim".to_string(),
            message: format!("dim must be an odd integer >= 3, got {dim}"),
        });
    }
    Ok(())
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |acc, s| acc.min(*s))
}

/// Ambient bracket `(De_j)e_i - (De_i)e_j` from the cached jets, solved back
/// into frame components by least squares.
fn chart_bracket(
    data: &ChartPointData,
    point: usize,
    i: usize,
    j: usize,
) -> Result<FrameVector, ModelError> {
    let m = data.frame_values.nrows();
    let ei = data.frame_values.column(i);
    let ej = data.frame_values.column(j);
    let mut ambient = DVector::zeros(m);
    for c in 0..m {
        ambient[c] = data.frame_jets[j][c].gradient.dot(&ei.clone_owned())
            - data.frame_jets[i][c].gradient.dot(&ej.clone_owned());
    }
    let svd = data.frame_values.clone().svd(true, true);
    let coeffs = svd
        .solve(&ambient, 0.0)
        .expect("svd requested with both factors");
    let residual = (&data.frame_values * &coeffs - &ambient).amax();
    if residual > DEFAULT_TOL {
        return Err(ModelError::SpanResidualExceeded {
            i,
            j,
            point,
            residual,
        });
    }
    Ok(coeffs)
}

/// The three-dimensional nullity model with constants `(kappa, mu)`:
/// orthonormal frame `{e, f, xi}` with `phi e = f`, brackets
/// `[e,f] = 2 xi`, `[xi,e] = (lambda+1-mu/2) f`, `[xi,f] = (lambda-1+mu/2) e`,
/// where `lambda = sqrt(1 - kappa)`.
pub fn make_kmu_model(kappa: f64, mu: f64) -> Result<ManifoldModel, ModelError> {
    if kappa >= 1.0 - 1e-9 {
        return Err(ModelError::SasakianLimit { kappa });
    }
    let lambda = (1.0 - kappa).sqrt();
    let beta = lambda + 1.0 - mu / 2.0;
    let gamma = lambda - 1.0 + mu / 2.0;
    let entries = vec![
        (0usize, 1usize, vec![0.0, 0.0, 2.0]),
        (2, 0, vec![0.0, beta, 0.0]),
        (2, 1, vec![gamma, 0.0, 0.0]),
    ];
    ManifoldModel::lie(
        format!("kmu-generator({kappa}, {mu})"),
        3,
        &entries,
        standard_structure_3d(),
        None,
    )
}

/// Orthonormal `{e, f, xi}` tensors shared by the three-dimensional Lie
/// fixtures: `phi e = f`, `phi f = -e`, `eta` dual to `xi`.
pub fn standard_structure_3d() -> ContactMetricStructure {
    ContactMetricStructure {
        phi: DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        xi: DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        eta: DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        g: DMatrix::identity(3, 3),
    }
}

/// Five-dimensional analogue of `standard_structure_3d`: two phi-pairs
/// `(e1, e2)` and `(e3, e4)` plus the Reeb field `e5`, orthonormal.
pub fn standard_structure_5d() -> ContactMetricStructure {
    let mut phi = DMatrix::zeros(5, 5);
    phi[(1, 0)] = 1.0;
    phi[(0, 1)] = -1.0;
    phi[(3, 2)] = 1.0;
    phi[(2, 3)] = -1.0;
    ContactMetricStructure {
        phi,
        xi: basis_vector(5, 4),
        eta: basis_vector(5, 4),
        g: DMatrix::identity(5, 5),
    }
}

/// The unit three-sphere with its standard Sasakian structure, as a chart
/// model in the ambient coordinates `x1..x4`: frame
/// `X = (x2, -x1, -x4, x3)`, `Y = (x4, -x3, x2, -x1)`,
/// `xi = (x3, x4, -x1, -x2)`, evaluated at 20 seeded sample points.
pub fn make_s3_model() -> ManifoldModel {
    let parse = |src: &str| crate::expr::parse(src, 4).expect("fixture expression parses");
    let frame = vec![
        vec![parse("x2"), parse("-x1"), parse("-x4"), parse("x3")],
        vec![parse("x4"), parse("-x3"), parse("x2"), parse("-x1")],
        vec![parse("x3"), parse("x4"), parse("-x1"), parse("-x2")],
    ];
    let constraints = vec![parse("x1^2 + x2^2 + x3^2 + x4^2 - 1")];
    let structure = ContactMetricStructure {
        phi: DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        xi: DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        eta: DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        g: DMatrix::identity(3, 3),
    };
    ManifoldModel::chart(
        "s3-sasakian",
        3,
        4,
        frame,
        constraints,
        sphere_points(20, DEFAULT_SEED),
        structure,
        Some(AdaptedBlocks {
            l: vec![0],
            q: vec![1],
            xi: 2,
        }),
    )
    .expect("the sphere fixture satisfies its own constraints")
}

/// Deterministic points on the unit sphere in R^4: rejection-sampled cubes,
/// normalized. Reproducible across platforms for a given seed.
pub fn sphere_points(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 0.1 {
            continue;
        }
        points.push(raw.into_iter().map(|x| x / norm).collect());
    }
    points
}
