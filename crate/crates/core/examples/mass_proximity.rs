//! Gaussian mass of R Z^d at x against its distance to the lattice.
use intersective::lattice::ThetaConfig;
use intersective::recurrence::mass_proximity_check;

fn main() -> anyhow::Result<()> {
    let cfg = ThetaConfig { tol: 1e-60, ..ThetaConfig::default() };
    for (x, r) in [(vec![0.3], 4.0), (vec![2.0, 0.1], 4.0), (vec![1.5, 2.5, 3.5], 7.0), (vec![0.01, 8.99], 9.0)] {
        let m = mass_proximity_check(&x, r, &cfg)?;
        println!(
            "x = {x:?}, R = {r}: mass {:.3e}, threshold {:.3e}, dist {:.3} (sqrt R = {:.3}), consistent {}",
            m.mass,
            m.threshold,
            m.dist,
            r.sqrt(),
            m.consistent
        );
    }
    Ok(())
}
