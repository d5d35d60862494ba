//! Built-in models, embedded as the same JSON documents `load_model` accepts.
//!
//! Each fixture exists twice: as a builder function (the source of truth) and
//! as an embedded JSON file. Golden tests in this module keep the two in sync,
//! so the shipped JSON is always loadable and always matches the builder.

use crate::model::{
    model_from_json, standard_structure_3d, AdaptedBlocks, ManifoldModel, ModelError,
};

/// Catalog entry for one built-in model.
#[derive(Debug, Clone)]
pub struct FixtureInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Parametric fixtures need extra arguments and cannot be constructed by
    /// name alone.
    pub parametric: bool,
}

/// Every built-in model, in presentation order.
pub fn catalog() -> Vec<FixtureInfo> {
    vec![
        FixtureInfo {
            name: "s3-sasakian",
            summary: "unit three-sphere with its standard Sasakian structure (chart backend)",
            parametric: false,
        },
        FixtureInfo {
            name: "flat-kappa0",
            summary: "flat model with nullity constants (0, 0)",
            parametric: false,
        },
        FixtureInfo {
            name: "kmu-generator",
            summary: "three-dimensional model with prescribed nullity constants; requires kappa < 1",
            parametric: true,
        },
        FixtureInfo {
            name: "perturbed-negative-control",
            summary: "flat model with one bracket entry corrupted; every nullity check must fail",
            parametric: false,
        },
    ]
}

const FLAT_KAPPA0_JSON: &str = include_str!("../fixtures/flat-kappa0.json");
const PERTURBED_CONTROL_JSON: &str = include_str!("../fixtures/perturbed-negative-control.json");
const S3_SASAKIAN_JSON: &str = include_str!("../fixtures/s3-sasakian.json");

/// Look up a non-parametric fixture by name. Returns `None` for unknown names
/// and for `kmu-generator`, which needs explicit constants.
pub fn by_name(name: &str) -> Option<Result<ManifoldModel, ModelError>> {
    let json = match name {
        "s3-sasakian" => S3_SASAKIAN_JSON,
        "flat-kappa0" => FLAT_KAPPA0_JSON,
        "perturbed-negative-control" => PERTURBED_CONTROL_JSON,
        _ => return None,
    };
    Some(model_from_json(json, name))
}

/// The (0, 0) model written out directly: [e, f] = 2 xi, [xi, e] = 2 f,
/// [xi, f] = 0.
pub fn flat_kappa0_model() -> ManifoldModel {
    lie_model_3d(
        "flat-kappa0",
        &[(0, 1, [0.0, 0.0, 2.0]), (2, 0, [0.0, 2.0, 0.0])],
    )
}

/// The flat model with `[e, f]` given a spurious `0.1 e` component. The frame
/// still satisfies the pointwise structure identities, so the corruption
/// surfaces only in the curvature and connection checks.
pub fn perturbed_control_model() -> ManifoldModel {
    lie_model_3d(
        "perturbed-negative-control",
        &[(0, 1, [0.1, 0.0, 2.0]), (2, 0, [0.0, 2.0, 0.0])],
    )
}

fn lie_model_3d(name: &str, entries: &[(usize, usize, [f64; 3])]) -> ManifoldModel {
    let entries: Vec<(usize, usize, Vec<f64>)> =
        entries.iter().map(|&(i, j, v)| (i, j, v.to_vec())).collect();
    ManifoldModel::lie(
        name,
        3,
        &entries,
        standard_structure_3d(),
        Some(AdaptedBlocks { l: vec![0], q: vec![1], xi: 2 }),
    )
    .expect("valid built-in table")
}
