//! Local unstable manifolds of a perturbed cat-map family.

use anosov::graph::{unstable_manifold, ManifoldConfig};
use anosov::{MetricTensor, NsdsFamily, PerturbationTerm, TorusMap, TorusPoint};

fn main() -> anosov::Result<()> {
    let map = TorusMap::new(
        [[2, 1], [1, 1]],
        vec![PerturbationTerm {
            amplitude: 1.0,
            frequency: [1, 0],
            target: 0,
            phase: 0.0,
        }],
        0.05,
    )?;
    let cfg = ManifoldConfig::default();
    let family = NsdsFamily::constant(map.into(), MetricTensor::identity(0), cfg.required_family_window())?;
    let p = TorusPoint::new(0, 0.0, 0.0);
    let res = unstable_manifold(&family, &p, &cfg)?;

    println!("lambda = {:.6}, alpha = {:.6}", res.params.lambda, res.alpha);
    println!("sweeps = {}, max contraction = {:.4}", res.run.sweeps, res.run.max_contraction);
    for row in &res.schedule.rows {
        let r = res.rates.at(row.index)?;
        println!(
            "n = {:>3}  delta = {:.5}  sigma = {:.4}  omega = {:.4}  tau = {:.4}",
            row.index, row.delta, row.sigma, row.omega, r.tau
        );
    }
    let pr = &res.properties;
    println!("tangency |phi'(0)|      = {:.3e}", pr.tangency);
    println!("backward invariance     = {:.3e} (grid spacing {:.3e})", pr.backward_invariance, pr.grid_spacing);
    println!("forward residual        = {:.3e}", pr.forward_residual);
    println!("contraction bound ratio = {:.3e}", pr.contraction_ratio);
    Ok(())
}
