//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;

use anosov::cli::{run, Command};
use anosov::graph::{
    apply_operator, graph_transform_step, interpolation_defect, prepare, stable_manifold, unstable_manifold,
    ChartedOrbit, GraphFamily, LipschitzGraph, ManifoldConfig, Side,
};
use anosov::hyperbolicity::{angles_sequence, property_of_angles, verify_anosov, FramedOrbit, SplittingFrame};
use anosov::laws::ZetaLaw;
use anosov::map::IDENTITY;
use anosov::orbit::{decay_report, expansivity_probe, manifold_subset_check, Companion, ProbeConfig};
use anosov::scenario::{MetricLaw, Scenario};
use anosov::{MetricTensor, NsdsFamily, Result, StepMap, TorusMap, TorusPoint};
use common::*;
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn origin() -> TorusPoint {
    TorusPoint::new(0, 0.0, 0.0)
}

fn with_grid(mut s: Scenario, m: usize) -> Scenario {
    s.run.grid = m;
    s
}

fn criterion1() -> Outcome {
    let s = with_grid(bundled("cat_linear"), 128);
    let family = s.family()?;
    let res = unstable_manifold(&family, &origin(), &s.manifold_config())?;
    let sup = res.run.family.graphs.iter().map(|g| g.sup_norm()).fold(0.0, f64::max);
    let art = run(Command::Manifold(Side::Unstable), &s)?;
    let (eu, _) = cat_eigenvectors();
    let mut residual = 0.0f64;
    for line in art.files["manifold_u.csv"].lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        // anchors are the origin at every index
        residual = residual.max((cols[3] * eu[1] - cols[4] * eu[0]).abs());
    }
    Ok((
        sup <= 1e-12 && residual <= 1e-10,
        format!("graph sup-norm {sup:.2e} (≤ 1e-12), eigenline residual {residual:.2e} (≤ 1e-10)"),
    ))
}

fn criterion2() -> Outcome {
    let s = bundled("cat_linear");
    let family = s.family()?;
    let orbit = FramedOrbit::new(&family, &TorusPoint::new(0, 0.3, 0.6), -8, 8, 30, 1e-6)?;
    let cert = verify_anosov(&family, orbit.frames(), 1.0, golden_lambda(), 10)?;
    let ident = NsdsFamily::constant(
        StepMap::from(TorusMap::linear(IDENTITY)?),
        MetricTensor::identity(0),
        4,
    )?;
    let p = TorusPoint::new(0, 0.1, 0.2);
    let frame = SplittingFrame::from_directions(&ident, 0, &p, Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0))?;
    let id_cert = verify_anosov(&ident, &[frame], 1.0, 0.5, 1)?;
    Ok((
        cert.passes && cert.max_violation <= 1e-9 && !id_cert.passes,
        format!(
            "cat map passes = {} with max violation {:.2e}; identity passes = {}",
            cert.passes, cert.max_violation, id_cert.passes
        ),
    ))
}

fn criterion3() -> Outcome {
    let s = bundled("cat_perturbed");
    let family = s.family()?;
    let cfg = s.manifold_config();
    let prep = prepare(&family, &origin(), &cfg)?;
    let rates = &prep.ctx.rates;
    let steps = &prep.ctx.charted.steps;
    let gamma = rates.params.gamma;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let random_family = |rng: &mut ChaCha8Rng| GraphFamily {
        lo: prep.schedule.lo,
        graphs: prep
            .schedule
            .rows
            .iter()
            .map(|r| LipschitzGraph::random(r.index, r.delta, cfg.intervals, rates.alpha, rng))
            .collect(),
        metric_value: f64::INFINITY,
    };
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = random_family(&mut rng);
        let b = random_family(&mut rng);
        let (ga, _) = apply_operator(&a, steps, &rates.rows, rates.alpha)?;
        let (gb, _) = apply_operator(&b, steps, &rates.rows, rates.alpha)?;
        worst = worst.max(ga.distance(&gb) / a.distance(&b));
    }
    // slack: interpolation defect of the piecewise-linear transform, at M and 2M
    let defect = |m: usize| -> Result<f64> {
        let mut d = 0.0f64;
        for (k, row) in prep.schedule.rows.iter().enumerate().take(prep.schedule.rows.len() - 1) {
            let next = prep.schedule.rows[k + 1].delta;
            let a = 0.5 * rates.alpha;
            let phi = LipschitzGraph::from_fn(row.index, row.delta, m, |w| a * w * w / row.delta);
            let (psi, _) = graph_transform_step(&phi, &steps[k], &rates.rows[k], rates.alpha, next)?;
            d = d.max(interpolation_defect(&phi, &psi, &steps[k])?);
        }
        Ok(d)
    };
    let (d1, d2) = (defect(cfg.intervals)?, defect(2 * cfg.intervals)?);
    Ok((
        worst <= gamma + 0.05 && d1 >= 2.0 * d2,
        format!(
            "worst ratio {worst:.4} (≤ γ + 0.05 = {:.4}); slack {d1:.3e} at M = {}, {d2:.3e} at M = {} (shrink {:.2}×)",
            gamma + 0.05,
            cfg.intervals,
            2 * cfg.intervals,
            d1 / d2
        ),
    ))
}

fn criterion4() -> Outcome {
    let s = bundled("cat_perturbed");
    let family = s.family()?;
    let cfg = s.manifold_config();
    let res = unstable_manifold(&family, &origin(), &cfg)?;
    let fine = unstable_manifold(
        &family,
        &origin(),
        &ManifoldConfig {
            intervals: 2 * cfg.intervals,
            ..cfg.clone()
        },
    )?;
    let p = &res.properties;
    let ratio = fine.properties.tangency / p.tangency;
    let min_delta = res.schedule.min_delta();
    let inv_bound = 2.0 * (2.0 * min_delta / cfg.intervals as f64);
    let ok = p.anchor_exact
        && p.tangency <= 1e-3
        && ratio <= 0.6
        && p.backward_invariance <= inv_bound
        && p.contraction_ok;
    Ok((
        ok,
        format!(
            "anchor exact = {}; tangency {:.2e}, refinement ratio {ratio:.3} (≤ 0.6); backward invariance {:.2e} (≤ {inv_bound:.2e}); contraction ratio {:.3} (≤ 1 + 1e-6)",
            p.anchor_exact, p.tangency, p.backward_invariance, p.contraction_ratio
        ),
    ))
}

/// One-sided set distance from `a` to the piecewise-linear curve through `b`.
fn set_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let seg = |p: &[f64; 2], q: &[f64; 2], x: &[f64; 2]| {
        let d = [q[0] - p[0], q[1] - p[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]) / len2).clamp(0.0, 1.0)
        };
        ((x[0] - p[0] - t * d[0]).powi(2) + (x[1] - p[1] - t * d[1]).powi(2)).sqrt()
    };
    a.iter()
        .map(|x| b.windows(2).map(|w| seg(&w[0], &w[1], x)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn criterion5() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    let (_, es) = cat_eigenvectors();
    for name in ["cat_linear", "cat_perturbed"] {
        let s = bundled(name);
        let family = s.family()?;
        let cfg = s.manifold_config();
        let stable = stable_manifold(&family, &origin(), &cfg)?;
        let reflected = unstable_manifold(&family.reflected()?, &origin(), &cfg)?;
        let mut worst = 0.0f64;
        for c in &stable.clouds {
            let other = reflected.cloud(-c.index)?;
            let h = (c.w[1] - c.w[0]).abs().max(1e-300);
            let d = set_distance(&c.lifted, &other.lifted).max(set_distance(&other.lifted, &c.lifted));
            worst = worst.max(d / h);
        }
        // independent checks: the contracting eigenline, and forward decay of samples
        let charts = ChartedOrbit::new(&family, &origin(), cfg.window, cfg.split_depth, cfg.split_tolerance)?;
        let members = manifold_subset_check(&family, &charts, &stable, 50, cfg.window as usize)?;
        let mut line = 0.0f64;
        if name == "cat_linear" {
            for c in &stable.clouds {
                for z in &c.lifted {
                    line = line.max((z[0] * es[1] - z[1] * es[0]).abs());
                }
            }
        }
        ok &= worst <= 1.0 && line <= 1e-10 && members.all_members;
        details.push(format!(
            "{name}: {worst:.2e} spacings apart, eigenline residual {line:.1e}, {}/{} forward members",
            members.members, members.samples
        ));
    }
    Ok((ok, details.join("; ")))
}

fn criterion6() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for name in ["cat_linear", "cat_perturbed"] {
        let s = bundled(name);
        let family = s.family()?;
        let cfg = s.manifold_config();
        let res = unstable_manifold(&family, &origin(), &cfg)?;
        let charts = ChartedOrbit::new(&family, &origin(), cfg.window, cfg.split_depth, cfg.split_tolerance)?;
        let check = manifold_subset_check(&family, &charts, &res, 50, cfg.window as usize)?;
        let cloud = res.cloud(0)?;
        let k = 3 * (cloud.w.len() - 1) / 4;
        let h = cloud.w[1] - cloud.w[0];
        let control = Companion::Frame {
            v: cloud.phi[k] + 10.0 * h,
            w: cloud.w[k],
        };
        let radius = |n: i64| res.schedule.delta_at(n).map(|d| 2.0 * d).unwrap_or(0.0);
        let rep = decay_report(&family, &charts, control, radius, cfg.window as usize)?;
        ok &= check.all_members && check.slopes_ok && check.samples == 50 && !rep.in_unstable_set;
        details.push(format!(
            "{name}: {}/{} members, worst slope {:.3} (≤ log λ̃ = {:.3}), control member = {}",
            check.members, check.samples, check.worst_slope, check.log_lambda_tilde, rep.in_unstable_set
        ));
    }
    Ok((ok, details.join("; ")))
}

fn criterion7() -> Outcome {
    let base = bundled("skewed_eigen");
    let margin = 1e-3;
    let mut ok = true;
    let mut worst_err = 0.0f64;
    let mut verdicts = Vec::new();
    for (limit, rate) in [(0.5, 0.7), (1.0, 0.5), (1.0, 0.4), (0.9995, 0.3), (0.998, 0.3)] {
        let mut s = base.clone();
        let law = ZetaLaw::Converging { base: 0.2, limit, rate };
        s.family.metric = MetricLaw::SkewedEigen { zeta: law };
        let n = s.run.window;
        // just enough room for the frames, so ζ stays below 1 in f64
        let family = s.family_with_window(n + 21)?;
        let orbit = FramedOrbit::new(&family, &TorusPoint::new(0, 0.3, 0.6), -n, n, 20, 1e-6)?;
        let mut by_index: BTreeMap<i64, Vec<SplittingFrame>> = BTreeMap::new();
        for f in orbit.frames() {
            by_index.entry(f.point.component).or_default().push(*f);
        }
        let seq = angles_sequence(&by_index);
        for (i, c) in seq.indices.iter().zip(&seq.cosines) {
            worst_err = worst_err.max((c - law.at(*i)).abs());
        }
        let tail_max = (-n..=n).map(|i| law.at(i)).fold(f64::NEG_INFINITY, f64::max);
        let (holds, _) = property_of_angles(&seq.cosines, margin);
        ok &= holds == (tail_max < 1.0 - margin);
        verdicts.push(format!("ζ→{limit}: {holds}"));
    }
    ok &= worst_err <= 1e-12;
    Ok((
        ok,
        format!("max |cos θ_i − ζ_i| = {worst_err:.2e}; property (margin {margin}): {}", verdicts.join(", ")),
    ))
}

fn criterion8() -> Outcome {
    let mut s = bundled("scaled_eigen");
    s.family.metric = MetricLaw::ScaledEigen { a: 0.3, b: 0.3 };
    s.run.horizon = 20;
    let rate = 0.3 * (3.0 + 5f64.sqrt()) / 2.0;
    let cfg = ProbeConfig {
        horizon: 20,
        ..ProbeConfig::default()
    };
    let start = TorusPoint::new(0, 0.2, 0.3);
    let found = expansivity_probe(&s.family_with_window(60)?, &start, &cfg)?;
    let flat = bundled("cat_linear");
    let none = expansivity_probe(&flat.family_with_window(60)?, &start, &cfg)?;
    let (ok, detail) = match &found.witness {
        Some(w) => (
            w.forward_slope < 0.0 && w.backward_slope < 0.0 && none.witness.is_none(),
            format!(
                "a = 0.3 (rate {rate:.3}): witness with slopes {:.3} forward, {:.3} backward; flat cat witness = {}",
                w.forward_slope,
                w.backward_slope,
                none.witness.is_some()
            ),
        ),
        None => (false, format!("a = 0.3 (rate {rate:.3}): no witness")),
    };
    Ok((ok, detail))
}

/// `d_Γ` restricted to nodes inside both domains.
fn common_distance(a: &LipschitzGraph, b: &LipschitzGraph) -> f64 {
    let r = a.radius.min(b.radius);
    a.nodes()
        .iter()
        .zip(&a.values)
        .filter(|(x, _)| **x != 0.0 && x.abs() <= r)
        .map(|(x, v)| (v - b.eval(*x)).abs() / x.abs())
        .fold(0.0, f64::max)
}

fn criterion9() -> Outcome {
    let s = bundled("cat_perturbed");
    let family = s.family_with_window(100)?;
    let cfg8 = s.manifold_config();
    let cfg12 = ManifoldConfig {
        window: 12,
        ..cfg8.clone()
    };
    let r8 = unstable_manifold(&family, &origin(), &cfg8)?;
    let r12 = unstable_manifold(&family, &origin(), &cfg12)?;
    let gamma = r8.params.gamma;
    let bound = 3.0 * cfg8.tol / (1.0 - gamma);
    let mut worst = 0.0f64;
    for n in -4..=4 {
        let a = r8.run.family.at(n)?;
        let b = r12.run.family.at(n)?;
        worst = worst.max(common_distance(a, b)).max(common_distance(b, a));
    }
    Ok((
        worst <= bound,
        format!("max d_Γ on [-4, 4] between N = 8 and N = 12: {worst:.3e} (bound 3·tol/(1−γ) = {bound:.3e})"),
    ))
}

fn criterion10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_anosov");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = 0;
    for name in bundled_names() {
        let path = scenario_path(name);
        for d in &dirs {
            let out = d.path().join(name);
            let runs: [&[&str]; 7] = [
                &["--command", "verify"],
                &["--command", "schedule"],
                &["--command", "manifold", "--side", "u"],
                &["--command", "manifold", "--side", "s"],
                &["--command", "decay"],
                &["--command", "coincidence"],
                &["--command", "probe-expansivity"],
            ];
            for args in runs {
                let status = std::process::Command::new(bin)
                    .args(args)
                    .arg("--scenario")
                    .arg(&path)
                    .arg("--out")
                    .arg(&out)
                    .arg("--quiet")
                    .status()
                    .unwrap();
                if !status.success() {
                    return Ok((false, format!("{name} {args:?} exited with {status}")));
                }
            }
        }
        let list = |d: &std::path::Path| {
            let mut v: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
            v.sort();
            v
        };
        let (a, b) = (dirs[0].path().join(name), dirs[1].path().join(name));
        if list(&a) != list(&b) {
            return Ok((false, format!("{name}: different file sets")));
        }
        for f in list(&a) {
            if std::fs::read(a.join(&f)).unwrap() != std::fs::read(b.join(&f)).unwrap() {
                return Ok((false, format!("{name}: {f:?} differs")));
            }
            files += 1;
        }
    }
    Ok((true, format!("{files} files byte-identical across two runs of 4 scenarios")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("linear exactness", criterion1),
        ("Anosov certificate", criterion2),
        ("graph-transform contraction", criterion3),
        ("unstable manifold properties", criterion4),
        ("stable/unstable duality", criterion5),
        ("unstable manifold inside the unstable set", criterion6),
        ("angle sequence of the ζ metric", criterion7),
        ("expansivity probe", criterion8),
        ("finite-window stability", criterion9),
        ("determinism", criterion10),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!("criterion {:>2} {} [{name}]: {detail}", k + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
