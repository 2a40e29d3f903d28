//! Contraction, dilation and stability of the averaged theta quantity.
use intersective::lattice::{contraction_check, dilation_chain, stability_check, ThetaConfig};
use intersective::{padic::primes_up_to, HpReal, IntPoly, Lattice, RootSystem};

fn main() -> anyhow::Result<()> {
    let cfg = ThetaConfig::default();
    let h = IntPoly::parse("x^2-2x")?;
    let lattice = Lattice::from_row_major(2, &[1.0, 0.3, 0.0, 0.8])?;
    let alpha = [HpReal::sqrt(2), HpReal::phi()];

    let c = contraction_check(&h, &lattice, &alpha, 2000, 0.37, &cfg)?;
    println!("contraction: F(N) = {:.6} >= (M/N) F(M) = {:.6}: {}", c.f_n, c.bound, c.holds);

    let roots = RootSystem::choose(&h, &primes_up_to(10), 4)?;
    let d = dilation_chain(&roots, 2, 3, &lattice, &alpha, 2000, &cfg)?;
    println!(
        "dilation q = 2, q' = 3: full {:.6} >= restricted {:.6} = {:.6} x {:.6}: {}",
        d.full, d.restricted, d.factor, d.f_dilated, d.holds()
    );

    let s = stability_check(&h, &lattice, &alpha, &[1.0, -0.5], 0.05, 2000, &cfg)?;
    println!("stability eps = 0.05: F = {:.6}, perturbed {:.6}, ratio {:.4}", s.f, s.f_perturbed, s.ratio);
    Ok(())
}
