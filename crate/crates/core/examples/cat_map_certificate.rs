//! Hyperbolicity certificate for the linear cat map and the smallest gathering
//! length that brings the decay constant down to 1.

use anosov::hyperbolicity::{minimal_gathering_length, verify_anosov, FramedOrbit};
use anosov::{MetricTensor, NsdsFamily, TorusMap, TorusPoint};

fn main() -> anosov::Result<()> {
    let family = NsdsFamily::constant(TorusMap::linear([[2, 1], [1, 1]])?.into(), MetricTensor::identity(0), 60)?;
    let p = TorusPoint::new(0, 0.2, 0.3);
    let orbit = FramedOrbit::new(&family, &p, -5, 5, 30, 1e-6)?;
    let frame = orbit.frame(0)?;
    println!("E^s = {:?}", frame.stable().as_slice());
    println!("E^u = {:?}", frame.unstable().as_slice());
    println!("angle = {:.12} rad", frame.cos_theta.acos());

    let lambda = (3.0 - 5f64.sqrt()) / 2.0;
    for (label, lam) in [("golden rate", lambda), ("too small", 0.9 * lambda)] {
        let cert = verify_anosov(&family, orbit.frames(), 1.0, lam, 20)?;
        println!(
            "{label:>11}: lambda = {lam:.6}, passes = {}, max violation = {:.3e}",
            cert.passes, cert.max_violation
        );
    }
    for (c, lam) in [(1.0, 0.5), (3.0, 0.5), (10.0, 0.8)] {
        println!("c = {c}, lambda = {lam}: gathering length {}", minimal_gathering_length(c, lam)?);
    }
    Ok(())
}
