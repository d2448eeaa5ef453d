#![allow(dead_code)]

use std::path::PathBuf;

use anosov::scenario::Scenario;
use anosov::NsdsFamily;

pub const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

pub fn bundled(name: &str) -> Scenario {
    Scenario::from_toml(&std::fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}

pub fn bundled_names() -> [&'static str; 4] {
    ["cat_linear", "cat_perturbed", "scaled_eigen", "skewed_eigen"]
}

pub fn family_of(s: &Scenario) -> NsdsFamily {
    s.family().unwrap()
}

/// `(3 − √5)/2`.
pub fn golden_lambda() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

/// Unit expanding and contracting eigenvectors of the cat matrix.
pub fn cat_eigenvectors() -> ([f64; 2], [f64; 2]) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let n = (1.0 + 1.0 / (phi * phi)).sqrt();
    ([1.0 / n, 1.0 / (phi * n)], [1.0 / n, -phi / n])
}
