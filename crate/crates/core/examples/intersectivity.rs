//! Certify or refute intersectivity for a few polynomials.
use intersective::{certify_intersective, IntPoly};

fn main() -> anyhow::Result<()> {
    for s in ["x^2-2x", "x^2+1", "(x^3-19)(x^2+x+1)", "x^3-x-1"] {
        let h = IntPoly::parse(s)?;
        let verdict = certify_intersective(&h, 100, 6)?;
        println!("{s:>20}: {}", serde_json::to_string(&verdict)?);
    }
    Ok(())
}
