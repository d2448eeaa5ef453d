//! Stable manifold through the origin, computed on the reflected inverse family,
//! written as CSV and SVG for index 0.

use anosov::cli::{manifold_csv, manifold_svg};
use anosov::graph::{stable_manifold, ManifoldConfig};
use anosov::{MetricTensor, NsdsFamily, PerturbationTerm, TorusMap, TorusPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = TorusMap::new(
        [[2, 1], [1, 1]],
        vec![PerturbationTerm {
            amplitude: 1.0,
            frequency: [1, 0],
            target: 1,
            phase: 0.0,
        }],
        0.05,
    )?;
    let cfg = ManifoldConfig::default();
    let family = NsdsFamily::constant(map.into(), MetricTensor::identity(0), cfg.required_family_window())?;
    let res = stable_manifold(&family, &TorusPoint::new(0, 0.0, 0.0), &cfg)?;
    let cloud = res.cloud(0)?;
    println!("{} nodes at n = 0, radius {:.4}", cloud.w.len(), cloud.w.last().copied().unwrap_or(0.0));
    println!("tangency {:.3e}, sweeps {}", res.properties.tangency, res.run.sweeps);

    let dir = std::env::temp_dir().join("anosov-stable-manifold");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("manifold_s.csv"), manifold_csv(&res))?;
    std::fs::write(dir.join("manifold_s_n0.svg"), manifold_svg(cloud))?;
    println!("wrote {}", dir.display());
    Ok(())
}
