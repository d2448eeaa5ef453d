//! Command dispatch and artifact rendering for the `anosov` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::graph::{
    adapted_deltas, prepare, stable_manifold, unstable_manifold, AnchorContext, ChartedOrbit, ManifoldResult, Side,
};
use crate::hyperbolicity::{
    angles_sequence, property_of_angles, stretch_factors, verify_anosov, FramedOrbit, SplittingFrame,
};
use crate::orbit::{
    coincidence_quantities, decay_report, expansivity_probe, manifold_subset_check, DecayReport, ProbeConfig,
};
use crate::scenario::Scenario;
use crate::torus::TorusPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Schedule,
    Manifold(Side),
    Decay,
    Coincidence,
    ProbeExpansivity,
}

impl Command {
    pub fn parse(name: &str, side: Option<&str>) -> Result<Self> {
        let side = match side {
            None | Some("u") => Side::Unstable,
            Some("s") => Side::Stable,
            Some(other) => return Err(Error::InvalidArgument(format!("--side must be u or s, got {other}"))),
        };
        Ok(match name {
            "verify" => Command::Verify,
            "schedule" => Command::Schedule,
            "manifold" => Command::Manifold(side),
            "decay" => Command::Decay,
            "coincidence" => Command::Coincidence,
            "probe-expansivity" => Command::ProbeExpansivity,
            other => return Err(Error::InvalidArgument(format!("unknown command {other}"))),
        })
    }

    pub fn all() -> [Command; 7] {
        [
            Command::Verify,
            Command::Schedule,
            Command::Manifold(Side::Unstable),
            Command::Manifold(Side::Stable),
            Command::Decay,
            Command::Coincidence,
            Command::ProbeExpansivity,
        ]
    }

    fn stem(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Schedule => "schedule",
            Command::Manifold(Side::Unstable) => "manifold_u",
            Command::Manifold(Side::Stable) => "manifold_s",
            Command::Decay => "decay",
            Command::Coincidence => "coincidence",
            Command::ProbeExpansivity => "probe_expansivity",
        }
    }
}

/// Rendered outputs, keyed by file name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub summary: String,
}

impl Artifacts {
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidMetric(_)
        | Error::InvalidMap(_)
        | Error::WindowExceeded { .. }
        | Error::ComponentMismatch { .. }
        | Error::NotUniformlyEquivalent(_) => 2,
        Error::ScheduleInfeasible { .. }
        | Error::Coverage { .. }
        | Error::CapViolation { .. }
        | Error::HyperbolicityMargin { .. } => 3,
        Error::NonConvergence { .. }
        | Error::InversionFailure { .. }
        | Error::InsufficientDepth { .. }
        | Error::TruncationDepth { .. } => 4,
        Error::ContractViolation { .. } => 5,
    }
}

pub fn run(command: Command, scenario: &Scenario) -> Result<Artifacts> {
    scenario.validate()?;
    let family = scenario.family()?;
    let stem = command.stem();
    let mut out = Artifacts::default();
    let (report, summary) = match command {
        Command::Verify => verify(scenario, &family, &mut out)?,
        Command::Schedule => schedule(scenario, &family, &mut out)?,
        Command::Manifold(side) => manifold(scenario, &family, side, &mut out)?,
        Command::Decay => decay(scenario, &family, &mut out)?,
        Command::Coincidence => coincidence(scenario, &family, &mut out)?,
        Command::ProbeExpansivity => probe(scenario, &family, &mut out)?,
    };
    let doc = json!({
        "command": stem,
        "scenario": scenario,
        "report": report,
    });
    let body = serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    out.files.insert(format!("{stem}.json"), body + "\n");
    out.summary = summary;
    Ok(out)
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

/// Anchor orbit plus `angle_orbits` seeded orbits, framed on `[-N, N]`.
fn sample_orbits(s: &Scenario, family: &NsdsFamily) -> Result<Vec<FramedOrbit>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut starts = vec![s.anchor()];
    for _ in 0..s.run.angle_orbits {
        starts.push(TorusPoint::new(0, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)));
    }
    let n = s.run.window;
    starts
        .par_iter()
        .map(|p| FramedOrbit::new(family, p, -n, n, s.run.split_depth, s.tolerances.splitting_residual))
        .collect()
}

fn verify(s: &Scenario, family: &NsdsFamily, out: &mut Artifacts) -> Result<(serde_json::Value, String)> {
    let orbits = sample_orbits(s, family)?;
    let frames: Vec<SplittingFrame> = orbits.iter().flat_map(|o| o.frames().iter().cloned()).collect();
    let h = s.run.horizon;
    let lambda = match s.params.lambda {
        Some(l) => l,
        None => {
            let rates = frames
                .par_iter()
                .map(|f| -> Result<f64> {
                    let i = f.point.component;
                    let fw = stretch_factors(family, i, &f.point, h, s.run.split_depth, true)?;
                    let bw = stretch_factors(family, i, &f.point, h, s.run.split_depth, false)?;
                    Ok(fw.into_iter().chain(bw).fold(0.0, f64::max))
                })
                .collect::<Result<Vec<_>>>()?;
            rates.into_iter().fold(0.0, f64::max)
        }
    };
    let certificate = verify_anosov(family, &frames, s.params.c, lambda, h)?;
    let mut by_index: BTreeMap<i64, Vec<SplittingFrame>> = BTreeMap::new();
    for f in frames {
        by_index.entry(f.point.component).or_default().push(f);
    }
    let angles = angles_sequence(&by_index);
    let (angles_ok, mu) = property_of_angles(&angles.cosines, s.tolerances.angle_margin);
    let mut csv = String::from("n,theta,cos_theta\n");
    for ((n, t), c) in angles.indices.iter().zip(&angles.thetas).zip(&angles.cosines) {
        writeln!(csv, "{n},{t},{c}").unwrap();
    }
    out.files.insert("verify_angles.csv".into(), csv);
    let summary = format!(
        "verify: lambda = {:.6}, c = {}, passes = {}, max violation = {:.3e}; property of angles = {angles_ok} (mu = {mu:.6})",
        certificate.lambda, certificate.c, certificate.passes, certificate.max_violation
    );
    Ok((
        json!({
            "certificate": to_value(&certificate),
            "angles": to_value(&angles),
            "property_of_angles": { "holds": angles_ok, "mu": mu, "margin": s.tolerances.angle_margin },
        }),
        summary,
    ))
}

fn schedule(s: &Scenario, family: &NsdsFamily, out: &mut Artifacts) -> Result<(serde_json::Value, String)> {
    let prep = prepare(family, &s.anchor(), &s.manifold_config())?;
    let mut csv = String::from("n,mu,kappa,omega,tau,growth,delta,cap,sigma\n");
    for (r, d) in prep.ctx.rates.rows.iter().zip(&prep.schedule.rows) {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.index, r.mu, r.kappa, r.omega, r.tau, r.growth, d.delta, d.cap, d.sigma
        )
        .unwrap();
    }
    out.files.insert("schedule.csv".into(), csv);
    let summary = format!(
        "schedule: alpha = {:.6}, min delta = {:.6e}, certified = {}",
        prep.ctx.rates.alpha,
        prep.schedule.min_delta(),
        prep.schedule.certified
    );
    Ok((
        json!({ "rates": to_value(&prep.ctx.rates), "schedule": to_value(&prep.schedule) }),
        summary,
    ))
}

/// One polyline per index; the unit square maps to the 1000×1000 view box, `y` pointing up.
pub fn manifold_svg(cloud: &crate::graph::ManifoldCloud) -> String {
    let mut pts = String::new();
    for (k, z) in cloud.lifted.iter().enumerate() {
        if k > 0 {
            pts.push(' ');
        }
        write!(pts, "{:.6},{:.6}", 1000.0 * z[0], 1000.0 * (1.0 - z[1])).unwrap();
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\">\n\
         <rect x=\"0\" y=\"0\" width=\"1000\" height=\"1000\" fill=\"none\" stroke=\"gray\"/>\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"{pts}\"/>\n</svg>\n"
    )
}

pub fn manifold_csv(res: &ManifoldResult) -> String {
    let mut csv = String::from("n,w,phi,x,y\n");
    for c in &res.clouds {
        for ((w, phi), z) in c.w.iter().zip(&c.phi).zip(&c.lifted) {
            writeln!(csv, "{},{w},{phi},{},{}", c.index, z[0], z[1]).unwrap();
        }
    }
    csv
}

fn manifold(
    s: &Scenario,
    family: &NsdsFamily,
    side: Side,
    out: &mut Artifacts,
) -> Result<(serde_json::Value, String)> {
    let cfg = s.manifold_config();
    let p = s.anchor();
    let res = match side {
        Side::Unstable => unstable_manifold(family, &p, &cfg)?,
        Side::Stable => stable_manifold(family, &p, &cfg)?,
    };
    let charts = ChartedOrbit::new(family, &p, cfg.window, cfg.split_depth, cfg.split_tolerance)?;
    let subset = manifold_subset_check(family, &charts, &res, s.run.samples, cfg.window as usize)?;
    let tag = if side == Side::Unstable { "u" } else { "s" };
    out.files.insert(format!("manifold_{tag}.csv"), manifold_csv(&res));
    for c in &res.clouds {
        out.files.insert(format!("manifold_{tag}_n{}.svg", c.index), manifold_svg(c));
    }
    let pr = &res.properties;
    let summary = format!(
        "manifold {tag}: sweeps = {}, tangency = {:.3e}, backward invariance = {:.3e}, contraction ok = {}, members = {}/{}",
        res.run.sweeps, pr.tangency, pr.backward_invariance, pr.contraction_ok, subset.members, subset.samples
    );
    let mut subset_json = to_value(&subset);
    if let Some(obj) = subset_json.as_object_mut() {
        obj.remove("reports");
    }
    Ok((json!({ "manifold": to_value(&res), "membership": subset_json }), summary))
}

fn trace_csv(r: &DecayReport) -> String {
    let mut csv = String::from("n,log_distance\n");
    for (k, l) in r.backward.log_distances.iter().enumerate().skip(1).rev() {
        writeln!(csv, "-{k},{l}").unwrap();
    }
    for (k, l) in r.forward.log_distances.iter().enumerate() {
        writeln!(csv, "{k},{l}").unwrap();
    }
    csv
}

fn decay(s: &Scenario, family: &NsdsFamily, out: &mut Artifacts) -> Result<(serde_json::Value, String)> {
    let h = s.run.horizon;
    let charts = ChartedOrbit::new(
        family,
        &s.anchor(),
        h as i64,
        s.run.split_depth,
        s.tolerances.splitting_residual,
    )?;
    let eps = |n: i64| family.metric_at(n).map(|g| g.injectivity_radius()).unwrap_or(0.0);
    let reports = s
        .pairs
        .par_iter()
        .map(|&c| decay_report(family, &charts, c, eps, h))
        .collect::<Result<Vec<_>>>()?;
    for (k, r) in reports.iter().enumerate() {
        out.files.insert(format!("decay_pair{k}.csv"), trace_csv(r));
    }
    let stable = reports.iter().filter(|r| r.in_stable_set).count();
    let unstable = reports.iter().filter(|r| r.in_unstable_set).count();
    let summary = format!(
        "decay: {} pairs, {stable} in the stable set, {unstable} in the unstable set",
        reports.len()
    );
    Ok((json!({ "reports": to_value(&reports) }), summary))
}

fn coincidence(s: &Scenario, family: &NsdsFamily, out: &mut Artifacts) -> Result<(serde_json::Value, String)> {
    let cfg = s.manifold_config();
    let ctx = AnchorContext::new(family, &s.anchor(), &cfg)?;
    let deltas_vec = adapted_deltas(family, &ctx, &cfg)?;
    let n = cfg.window;
    let deltas: BTreeMap<i64, f64> = (-n..=n).zip(deltas_vec).collect();
    let thetas: BTreeMap<i64, f64> = (-n..=n)
        .map(|k| Ok((k, ctx.orbit().frame(k)?.theta)))
        .collect::<Result<_>>()?;
    let report = coincidence_quantities(&ctx.rates, &thetas, &deltas, n, s.tolerances.coincidence)?;
    let mut csv = String::from("n,theta,delta,tau,varsigma\n");
    for k in -n..=n {
        let r = ctx.rates.at(k)?;
        writeln!(csv, "{k},{},{},{},{}", thetas[&k], deltas[&k], r.tau, r.varsigma).unwrap();
    }
    out.files.insert("coincidence.csv".into(), csv);
    let summary = format!(
        "coincidence: omega~ = {:.6}, theta~ = {:.6}, satisfied = {}",
        report.omega_tilde, report.theta_tilde, report.cccc_satisfied
    );
    Ok((to_value(&report), summary))
}

fn probe(s: &Scenario, family: &NsdsFamily, out: &mut Artifacts) -> Result<(serde_json::Value, String)> {
    let cfg = ProbeConfig {
        horizon: s.run.horizon,
        split_depth: s.run.split_depth,
        split_tolerance: s.tolerances.splitting_residual,
        seed: s.seed,
        ..ProbeConfig::default()
    };
    let res = expansivity_probe(family, &s.anchor(), &cfg)?;
    if let Some(w) = &res.witness {
        let mut csv = String::from("n,log_distance\n");
        for (k, l) in w.backward_log_distances.iter().enumerate().skip(1).rev() {
            writeln!(csv, "-{k},{l}").unwrap();
        }
        for (k, l) in w.forward_log_distances.iter().enumerate() {
            writeln!(csv, "{k},{l}").unwrap();
        }
        out.files.insert("probe_expansivity.csv".into(), csv);
    }
    let summary = match &res.witness {
        Some(w) => format!(
            "probe-expansivity: witness after {} samples, slopes {:.4} forward, {:.4} backward",
            res.samples_tried, w.forward_slope, w.backward_slope
        ),
        None => format!("probe-expansivity: no witness in {} samples", res.samples_tried),
    };
    Ok((to_value(&res), summary))
}
