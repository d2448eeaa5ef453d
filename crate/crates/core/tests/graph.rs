mod common;

use std::sync::Arc;

use anosov::graph::{
    estimate_sigma, prepare, unstable_manifold, ChartedStep, GraphFamily, LipschitzGraph, SigmaConfig,
};
use anosov::{Error, TorusPoint};
use approx::assert_relative_eq;
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn origin() -> TorusPoint {
    TorusPoint::new(0, 0.0, 0.0)
}

#[test]
fn cat_rates_are_the_eigenvalue_at_every_index() {
    let s = bundled("cat_linear");
    let prep = prepare(&s.family().unwrap(), &origin(), &s.manifold_config()).unwrap();
    for row in &prep.ctx.rates.rows {
        assert_relative_eq!(row.mu, golden_lambda(), max_relative = 1e-12);
        assert_relative_eq!(row.kappa, golden_lambda(), max_relative = 1e-12);
    }
    assert!(prep.schedule.rows.iter().all(|r| r.sigma == 0.0));
}

#[test]
fn perturbed_remainder_has_no_linear_part_at_the_anchor() {
    let s = bundled("cat_perturbed");
    let prep = prepare(&s.family().unwrap(), &origin(), &s.manifold_config()).unwrap();
    let h = 1e-6;
    for n in [-3, 0, 3] {
        let step = prep.ctx.step(n).unwrap();
        assert_eq!(step.remainder(0.0, 0.0).unwrap(), (0.0, 0.0));
        let d = |dv: f64, dw: f64| {
            let (a1, b1) = step.remainder(dv, dw).unwrap();
            let (a0, b0) = step.remainder(-dv, -dw).unwrap();
            ((a1 - a0) / (2.0 * h)).abs().max(((b1 - b0) / (2.0 * h)).abs())
        };
        let jac = d(h, 0.0).max(d(0.0, h));
        assert!(jac <= 1e-9, "n = {n}: {jac:e}");
    }
}

#[test]
fn sigma_of_a_sine_remainder() {
    let eps = 0.05;
    let r: anosov::graph::Remainder = Arc::new(move |_v, w| (0.0, eps * (std::f64::consts::TAU * w).sin()));
    let step = ChartedStep::synthetic(0, 0.4, 2.5, Some(r));
    let cfg = SigmaConfig::default();
    let sigma = estimate_sigma(&step, 0.1, cfg.grid_density, cfg.safety).unwrap();
    assert_relative_eq!(sigma, std::f64::consts::TAU * eps * cfg.safety, max_relative = 1e-6);
}

#[test]
fn sigma_does_not_grow_when_delta_shrinks() {
    let s = bundled("cat_perturbed");
    let prep = prepare(&s.family().unwrap(), &origin(), &s.manifold_config()).unwrap();
    let cfg = SigmaConfig::default();
    for step in &prep.ctx.charted.steps {
        let mut delta = prep.schedule.delta_at(step.index).unwrap();
        let mut last = estimate_sigma(step, delta, cfg.grid_density, cfg.safety).unwrap();
        for _ in 0..4 {
            delta *= 0.5;
            let next = estimate_sigma(step, delta, cfg.grid_density, cfg.safety).unwrap();
            assert!(next <= last * (1.0 + 1e-6), "index {}: {next} > {last}", step.index);
            last = next;
        }
    }
}

#[test]
fn scaled_eigen_schedule_shrinks_with_the_metric() {
    let s = bundled("scaled_eigen");
    let prep = prepare(&s.family().unwrap(), &origin(), &s.manifold_config()).unwrap();
    let n_max = prep.schedule.hi();
    for n in 0..n_max {
        let ratio = prep.schedule.delta_at(n + 1).unwrap() / prep.schedule.delta_at(n).unwrap();
        assert_relative_eq!(ratio, 0.9, max_relative = 1e-9);
    }
}

#[test]
fn doubling_epsilon_eventually_fails() {
    let mut s = bundled("cat_perturbed");
    let mut outcome = None;
    for _ in 0..6 {
        s.family.epsilon *= 2.0;
        let family = match s.family() {
            Ok(f) => f,
            Err(e) => {
                outcome = Some(e);
                break;
            }
        };
        if let Err(e) = prepare(&family, &origin(), &s.manifold_config()) {
            outcome = Some(e);
            break;
        }
    }
    // the map gate (ε·Lip(P) below the smallest singular value of A) trips
    // before the schedule does for a single sine term
    let e = outcome.expect("some doubling of epsilon fails");
    assert!(
        matches!(
            e,
            Error::ScheduleInfeasible { .. } | Error::HyperbolicityMargin { .. } | Error::InvalidMap(_)
        ),
        "{e}"
    );
}

#[test]
fn random_initial_families_reach_the_same_fixed_point() {
    let s = bundled("cat_perturbed");
    let cfg = s.manifold_config();
    let prep = prepare(&s.family().unwrap(), &origin(), &cfg).unwrap();
    let alpha = prep.ctx.rates.alpha;
    let random = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fam = GraphFamily::zero(&prep.schedule, cfg.intervals);
        for g in fam.graphs.iter_mut() {
            *g = LipschitzGraph::random(g.index, g.radius, cfg.intervals, alpha, &mut rng);
        }
        fam
    };
    let a = prep.run(random(1), &cfg).unwrap();
    let b = prep.run(random(2), &cfg).unwrap();
    let gamma = prep.ctx.rates.params.gamma;
    let gap = a.family.distance(&b.family);
    assert!(gap <= 2.0 * cfg.tol / (1.0 - gamma), "{gap:e}");
}

#[test]
fn perturbed_sweeps_contract_at_gamma() {
    let s = bundled("cat_perturbed");
    let res = unstable_manifold(&s.family().unwrap(), &origin(), &s.manifold_config()).unwrap();
    assert!(res.run.max_contraction <= res.params.gamma + 0.05, "{}", res.run.max_contraction);
    let min_delta = res.schedule.min_delta();
    assert!(res.properties.backward_invariance <= 2.0 * (2.0 * min_delta / res.intervals as f64));
}
