//! Theta sums on a skew lattice, checked against the dual side.
use intersective::lattice::{a_const, poisson_check, theta, ThetaConfig};
use intersective::Lattice;

fn main() -> anyhow::Result<()> {
    let cfg = ThetaConfig::default();
    let lattice = Lattice::from_row_major(2, &[1.0, 0.5, 0.0, 1.3])?;
    println!("det = {:.6}, shortest vector = {:.6}", lattice.det(), lattice.min_norm());
    for (t, x) in [(1.0, [0.0, 0.0]), (0.5, [0.3, -0.2]), (2.0, [0.5, 0.65])] {
        let v = theta(&lattice, t, &x, &cfg)?;
        let p = poisson_check(&lattice, t, &x, &cfg)?;
        println!(
            "t = {t}, x = {x:?}: theta = {:.15} ({} points, tail <= {:.1e}), dual side = {:.15}, gap {:.1e}",
            v.value, v.points, v.tail_bound, p.rhs, p.gap
        );
    }
    let a = a_const(&lattice, &cfg)?;
    println!("A_L = {:.15} (routes differ by {:.1e})", a.value, a.rel_gap);
    Ok(())
}
