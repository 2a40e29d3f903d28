//! Build the root system of an intersective polynomial and list h_q.
use intersective::{padic::primes_up_to, IntPoly, RootSystem};

fn main() -> anyhow::Result<()> {
    let h = IntPoly::parse("(x^3-19)(x^2+x+1)")?;
    let roots = RootSystem::choose(&h, &primes_up_to(20), 4)?;
    for q in [1, 2, 3, 4, 6, 7, 9, 19, 21] {
        let aux = roots.auxiliary(q)?;
        println!("q = {q:>3}  r_q = {:>6}  lambda = {:>5}  h_q = {}", aux.r_q, aux.lambda_q, aux.h_q);
    }
    Ok(())
}
