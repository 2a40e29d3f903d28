//! Large Weyl sums force a good rational approximation.
use intersective::exp_sums::{weyl_certificate, WeylOutcome, CERTIFICATE_MARGIN};
use intersective::{HpReal, IntPoly};

fn main() -> anyhow::Result<()> {
    let h = IntPoly::parse("x^2")?;
    for (name, theta) in [("3/7", HpReal::ratio(3, 7)), ("1/5 + 1e-10", HpReal::ratio(2_000_000_001, 10_000_000_000)), ("sqrt2", HpReal::sqrt(2))] {
        match weyl_certificate(&h, &theta, 10_000, 0.1, CERTIFICATE_MARGIN) {
            WeylOutcome::Certificate(c) => println!(
                "{name:>12}: |S| = {:.4}, q' = {}, ||q' theta|| = {:.3e}, verified {}",
                c.sum_modulus,
                c.q_prime,
                c.dist,
                c.verify(&h, &theta)
            ),
            WeylOutcome::NotApplicable { sum_modulus } => println!("{name:>12}: |S| = {sum_modulus:.4} < delta"),
        }
    }
    Ok(())
}
