//! Polynomial recurrence: how close h(n) alpha gets to an integer.
use intersective::recurrence::{best_recurrence, system_recurrence};
use intersective::{HpReal, IntPoly};

fn main() -> anyhow::Result<()> {
    let h = IntPoly::parse("x^2")?;
    for n in [1_000, 10_000, 100_000, 1_000_000] {
        let r = best_recurrence(&h, &[HpReal::sqrt(2)], n, true)?;
        println!("x^2 sqrt2, N = {n:>7}: n* = {:>7}, ||h(n*) alpha|| = {:.3e}", r.n_star, r.max_norm);
    }

    let polys = [IntPoly::parse("x")?, IntPoly::parse("x^2")?];
    let alpha = [HpReal::sqrt(2), HpReal::sqrt(3)];
    for n in [1_000, 10_000, 100_000] {
        let r = system_recurrence(&polys, &alpha, n)?;
        println!("(x, x^2) (sqrt2, sqrt3), N = {n:>6}: n* = {:>6}, values {:.3?}", r.n_star, r.values);
    }
    Ok(())
}
