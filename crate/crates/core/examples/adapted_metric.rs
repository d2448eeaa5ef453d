//! Adapted metric along an orbit of the perturbed cat map: the splitting becomes
//! orthogonal and the comparison constant with the original metric is reported.

use anosov::hyperbolicity::{AdaptedMetric, FramedOrbit};
use anosov::scenario::Scenario;
use anosov::TorusPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SCENARIO: &str = include_str!("../scenarios/cat_perturbed.toml");

fn main() -> anosov::Result<()> {
    let family = Scenario::from_toml(SCENARIO)?.family_with_window(120)?;
    let orbit = FramedOrbit::new(&family, &TorusPoint::new(0, 0.2, 0.3), -4, 4, 30, 1e-6)?;
    let lambda = 0.5316;
    let zeta = (1.0 - lambda) / 2.0;
    let star = AdaptedMetric::build(&family, &orbit, 1.0, lambda, zeta, 40, 30, 1e-8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!("{:>3} {:>10} {:>12} {:>10} {:>10} {:>6}", "n", "delta", "<es,eu>_*", "min", "max", "holds");
    for n in -4..=4 {
        let c = star.check_equivalence(&family, n, 1000, &mut rng)?;
        println!(
            "{n:>3} {:>10.4e} {:>12.2e} {:>10.4} {:>10.4} {:>6}",
            c.delta,
            star.frame_inner(n)?,
            c.exact_min,
            c.exact_max,
            c.holds
        );
    }
    Ok(())
}
