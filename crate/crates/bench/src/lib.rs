//! Shared setup for the pipeline benchmarks.

use kmu_core::model::{make_kmu_model, make_s3_model, ManifoldModel};

/// The generator model the benchmarks run against.
pub fn generator() -> ManifoldModel {
    make_kmu_model(0.75, 1.0).expect("kappa < 1")
}

/// The 20-point chart model the benchmarks run against.
pub fn sphere() -> ManifoldModel {
    make_s3_model()
}
