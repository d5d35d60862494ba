//! JSON model files.
//!
//! ```json
//! {
//!   "name": "flat-kappa0",
//!   "dim": 3,
//!   "backend": "lie",
//!   "structure_constants": [ {"i": 0, "j": 1, "v": [0.0, 0.0, 2.0]} ],
//!   "tensors": {
//!     "phi": [[0,-1,0],[1,0,0],[0,0,0]],
//!     "xi": [0,0,1], "eta": [0,0,1],
//!     "g": [[1,0,0],[0,1,0],[0,0,1]]
//!   },
//!   "adapted_blocks": {"l": [0], "q": [1], "xi": 2}
//! }
//! ```
//!
//! Chart models replace `structure_constants` with `coordinates`, `frame`
//! (expression strings per ambient component), optional `constraints`, and
//! `sample_points`. Frame indices are zero-based; expression variables are
//! the one-based chart coordinates `x1..xm`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{AdaptedBlocks, Backend, ManifoldModel, ModelError};
use crate::contact::ContactMetricStructure;
use crate::expr::{parse, Expr};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    dim: usize,
    backend: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coordinates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    structure_constants: Option<Vec<ConstantEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_points: Option<Vec<Vec<f64>>>,
    tensors: TensorsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adapted_blocks: Option<BlocksFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantEntry {
    i: usize,
    j: usize,
    v: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorsFile {
    phi: Vec<Vec<f64>>,
    xi: Vec<f64>,
    eta: Vec<f64>,
    g: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlocksFile {
    l: Vec<usize>,
    q: Vec<usize>,
    xi: usize,
}

fn schema(path: &str, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Reads and validates a model file; see the module docs for the layout.
pub fn load_model(path: impl AsRef<Path>) -> Result<ManifoldModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    model_from_json(&text, &fallback)
}

/// Parses a model from JSON text; `fallback_name` applies when the file
/// carries no `name` field.
pub fn model_from_json(text: &str, fallback_name: &str) -> Result<ManifoldModel, ModelError> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let name = file.name.clone().unwrap_or_else(|| fallback_name.to_string());
    let dim = file.dim;
    let structure = tensors_from_file(&file.tensors, dim)?;
    let blocks = file
        .adapted_blocks
        .as_ref()
        .map(|b| blocks_from_file(b, dim))
        .transpose()?;

    match file.backend.as_str() {
        "lie" => {
            for (field, present) in [
                ("coordinates", file.coordinates.is_some()),
                ("frame", file.frame.is_some()),
                ("constraints", file.constraints.is_some()),
                ("sample_points", file.sample_points.is_some()),
            ] {
                if present {
                    return Err(schema(field, "not allowed for the lie backend"));
                }
            }
            let constants = file
                .structure_constants
                .as_ref()
                .ok_or_else(|| schema("structure_constants", "required for the lie backend"))?;
            let entries: Vec<(usize, usize, Vec<f64>)> = constants
                .iter()
                .map(|e| (e.i, e.j, e.v.clone()))
                .collect();
            ManifoldModel::lie(name, dim, &entries, structure, blocks)
        }
        "chart" => {
            if file.structure_constants.is_some() {
                return Err(schema("structure_constants", "not allowed for the chart backend"));
            }
            let coordinates = file
                .coordinates
                .ok_or_else(|| schema("coordinates", "required for the chart backend"))?;
            let frame_src = file
                .frame
                .as_ref()
                .ok_or_else(|| schema("frame", "required for the chart backend"))?;
            let sample_points = file
                .sample_points
                .clone()
                .ok_or_else(|| schema("sample_points", "required for the chart backend"))?;
            let mut frame = Vec::with_capacity(frame_src.len());
            for (f, components) in frame_src.iter().enumerate() {
                let mut parsed = Vec::with_capacity(components.len());
                for (c, src) in components.iter().enumerate() {
                    parsed.push(parse_at(src, coordinates, &format!("frame[{f}][{c}]"))?);
                }
                frame.push(parsed);
            }
            let mut constraints = Vec::new();
            for (c, src) in file.constraints.clone().unwrap_or_default().iter().enumerate() {
                constraints.push(parse_at(src, coordinates, &format!("constraints[{c}]"))?);
            }
            ManifoldModel::chart(
                name,
                dim,
                coordinates,
                frame,
                constraints,
                sample_points,
                structure,
                blocks,
            )
        }
        other => Err(schema("backend", format!("unknown backend `{other}` (expected `lie` or `chart`)"))),
    }
}

/// Renders a model back to the file schema. Chart expressions are printed in
/// canonical form, which re-parses to the same tree.
pub fn model_to_json(model: &ManifoldModel) -> serde_json::Value {
    let tensors = TensorsFile {
        phi: matrix_rows(&model.structure.phi),
        xi: model.structure.xi.iter().copied().collect(),
        eta: model.structure.eta.iter().copied().collect(),
        g: matrix_rows(&model.structure.g),
    };
    let adapted_blocks = model.adapted_blocks.as_ref().map(|b| BlocksFile {
        l: b.l.clone(),
        q: b.q.clone(),
        xi: b.xi,
    });
    let file = match &model.backend {
        Backend::Lie { constants } => {
            let mut entries = Vec::new();
            for i in 0..model.dim {
                for j in (i + 1)..model.dim {
                    if constants[i][j].amax() > 0.0 {
                        entries.push(ConstantEntry {
                            i,
                            j,
                            v: constants[i][j].iter().copied().collect(),
                        });
                    }
                }
            }
            ModelFile {
                name: Some(model.name.clone()),
                dim: model.dim,
                backend: "lie".to_string(),
                coordinates: None,
                frame: None,
                structure_constants: Some(entries),
                constraints: None,
                sample_points: None,
                tensors,
                adapted_blocks,
            }
        }
        Backend::Chart {
            coordinates,
            frame,
            constraints,
            points,
        } => ModelFile {
            name: Some(model.name.clone()),
            dim: model.dim,
            backend: "chart".to_string(),
            coordinates: Some(*coordinates),
            frame: Some(
                frame
                    .iter()
                    .map(|f| f.iter().map(Expr::to_string).collect())
                    .collect(),
            ),
            structure_constants: None,
            constraints: if constraints.is_empty() {
                None
            } else {
                Some(constraints.iter().map(Expr::to_string).collect())
            },
            sample_points: Some(points.iter().map(|p| p.point.clone()).collect()),
            tensors,
            adapted_blocks,
        },
    };
    serde_json::to_value(file).expect("model schema serializes")
}

fn parse_at(src: &str, vars: usize, path: &str) -> Result<Expr, ModelError> {
    parse(src, vars).map_err(|e| schema(path, e.to_string()))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, path: &str) -> Result<DMatrix<f64>, ModelError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(schema(path, format!("expected a {dim}x{dim} matrix")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn tensors_from_file(t: &TensorsFile, dim: usize) -> Result<ContactMetricStructure, ModelError> {
    if t.xi.len() != dim {
        return Err(schema("tensors.xi", format!("expected {dim} components")));
    }
    if t.eta.len() != dim {
        return Err(schema("tensors.eta", format!("expected {dim} components")));
    }
    Ok(ContactMetricStructure {
        phi: matrix_from_rows(&t.phi, dim, "tensors.phi")?,
        xi: DVector::from_column_slice(&t.xi),
        eta: DVector::from_column_slice(&t.eta),
        g: matrix_from_rows(&t.g, dim, "tensors.g")?,
    })
}

fn blocks_from_file(b: &BlocksFile, dim: usize) -> Result<AdaptedBlocks, ModelError> {
    let n = dim / 2;
    if b.l.len() != n || b.q.len() != n {
        return Err(schema(
            "adapted_blocks",
            format!("expected {n} indices in each of `l` and `q` for dim {dim}"),
        ));
    }
    let mut seen = vec![false; dim];
    for &idx in b.l.iter().chain(b.q.iter()).chain(std::iter::once(&b.xi)) {
        if idx >= dim {
            return Err(schema("adapted_blocks", format!("frame index {idx} out of range")));
        }
        if seen[idx] {
            return Err(schema("adapted_blocks", format!("frame index {idx} listed twice")));
        }
        seen[idx] = true;
    }
    Ok(AdaptedBlocks {
        l: b.l.clone(),
        q: b.q.clone(),
        xi: b.xi,
    })
}
