//! Forward and backward decay of nearby orbits of the perturbed cat map.
//! Points taken from the computed local manifolds decay; an offset along the
//! linear stable line does not, since the nonlinear term bends the manifold.

use anosov::graph::{stable_manifold, unstable_manifold, ChartedOrbit};
use anosov::orbit::{decay_report, Companion};
use anosov::scenario::Scenario;
use anosov::TorusPoint;

const SCENARIO: &str = include_str!("../scenarios/cat_perturbed.toml");

fn main() -> anosov::Result<()> {
    let scenario = Scenario::from_toml(SCENARIO)?;
    let cfg = scenario.manifold_config();
    let family = scenario.family()?;
    let p = TorusPoint::new(0, 0.0, 0.0);
    let horizon = cfg.window as usize;
    let charts = ChartedOrbit::new(&family, &p, cfg.window, cfg.split_depth, cfg.split_tolerance)?;

    let ws = stable_manifold(&family, &p, &cfg)?;
    let wu = unstable_manifold(&family, &p, &cfg)?;
    let on = |cloud: &anosov::graph::ManifoldCloud| {
        let [x, y] = cloud.lifted[3 * (cloud.w.len() - 1) / 4];
        Companion::Tangent { dx: x, dy: y }
    };
    // stable-side schedule is stored in reflected indexing
    let radius = |n: i64| {
        let s = ws.schedule.delta_at(-n).unwrap_or(0.0);
        let u = wu.schedule.delta_at(n).unwrap_or(0.0);
        2.0 * s.max(u)
    };
    let pairs = [
        ("on W^s", on(ws.cloud(0)?)),
        ("on W^u", on(wu.cloud(0)?)),
        ("linear E^s offset", Companion::Frame { v: 0.02, w: 0.0 }),
        ("generic point", Companion::Point { x: 0.3, y: 0.7 }),
    ];
    let fmt = |x: Option<f64>| x.map_or("  n/a  ".to_string(), |v| format!("{v:+.4}"));
    for (label, q) in pairs {
        let r = decay_report(&family, &charts, q, radius, horizon)?;
        println!(
            "{label:>17}: forward slope {}, backward slope {}, stable set {}, unstable set {}",
            fmt(r.theta_estimate),
            fmt(r.omega_estimate),
            r.in_stable_set,
            r.in_unstable_set
        );
    }
    Ok(())
}
