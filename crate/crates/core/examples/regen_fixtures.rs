//! Rewrites the embedded fixture JSON files from their builder functions.
//! Run after changing a builder: `cargo run -p kmu-core --example regen_fixtures`.

use std::fs;
use std::path::Path;

use kmu_core::fixtures::{flat_kappa0_model, perturbed_control_model};
use kmu_core::model::{make_s3_model, model_to_json};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let models = [
        ("flat-kappa0", flat_kappa0_model()),
        ("perturbed-negative-control", perturbed_control_model()),
        ("s3-sasakian", make_s3_model()),
    ];
    for (name, model) in models {
        let path = dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(&model_to_json(&model)).expect("serialize");
        text.push('\n');
        fs::write(&path, text).expect("write fixture");
        println!("wrote {}", path.display());
    }
}
