//! Angles between the stable and unstable lines under `cos θ_i = ζ_i`:
//! bounded away from zero when `ζ_i` stays below 1, degenerate when it tends to 1.

use std::collections::BTreeMap;

use anosov::hyperbolicity::{angles_sequence, property_of_angles, FramedOrbit};
use anosov::laws::ZetaLaw;
use anosov::scenario::{MetricLaw, Scenario};
use anosov::TorusPoint;

const SCENARIO: &str = include_str!("../scenarios/skewed_eigen.toml");

fn main() -> anosov::Result<()> {
    let base = Scenario::from_toml(SCENARIO)?;
    let n = 12;
    let laws = [
        ZetaLaw::Constant { value: 0.5 },
        ZetaLaw::Converging { base: 0.2, limit: 0.5, rate: 0.7 },
        ZetaLaw::Converging { base: 0.0, limit: 1.0, rate: 0.5 },
    ];
    for zeta in laws {
        let mut s = base.clone();
        s.family.metric = MetricLaw::SkewedEigen { zeta };
        let family = s.family_with_window(n + 21)?;
        let orbit = FramedOrbit::new(&family, &TorusPoint::new(0, 0.2, 0.3), -n, n, 20, 1e-6)?;
        let by_index: BTreeMap<i64, Vec<_>> = orbit.frames().iter().map(|f| (f.point.component, vec![*f])).collect();
        let seq = angles_sequence(&by_index);
        let (ok, worst) = property_of_angles(&seq.cosines, 1e-3);
        println!("{zeta:?}: max cos = {worst:.9}, angles bounded = {ok}");
    }
    Ok(())
}
