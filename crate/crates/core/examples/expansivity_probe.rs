//! Metric-dependent expansivity: the cat map with the shrinking metric
//! `g_i = a^{2i} P_s + b^{2i} P_u` has distinct points whose distance decays
//! in both time directions, while the flat cat map has none at this scale.

use anosov::orbit::{expansivity_probe, ProbeConfig};
use anosov::scenario::Scenario;
use anosov::TorusPoint;

const SCENARIO: &str = include_str!("../scenarios/scaled_eigen.toml");

fn main() -> anosov::Result<()> {
    let scenario = Scenario::from_toml(SCENARIO)?;
    let cfg = ProbeConfig {
        horizon: 40,
        ..ProbeConfig::default()
    };
    let start = TorusPoint::new(0, 0.2, 0.3);

    let shrinking = scenario.family_with_window(80)?;
    let res = expansivity_probe(&shrinking, &start, &cfg)?;
    match &res.witness {
        Some(w) => println!(
            "shrinking metric: witness at separation {:.3}, forward slope {:.4}, backward slope {:.4}",
            w.separation, w.forward_slope, w.backward_slope
        ),
        None => println!("shrinking metric: no witness"),
    }

    let mut flat = scenario.clone();
    flat.family.metric = anosov::scenario::MetricLaw::Constant {
        matrix: [[1.0, 0.0], [0.0, 1.0]],
    };
    let res = expansivity_probe(&flat.family_with_window(80)?, &start, &cfg)?;
    println!("flat metric: witness found = {}", res.witness.is_some());
    Ok(())
}
