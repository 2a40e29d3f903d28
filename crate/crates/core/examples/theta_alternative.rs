//! The averaged theta quantity F and the large-or-structured dichotomy.
use intersective::lattice::{alternative_check, f_avg, AlternativeSearch, ThetaConfig};
use intersective::{HpReal, IntPoly, Lattice};

fn main() -> anyhow::Result<()> {
    let cfg = ThetaConfig::default();
    let search = AlternativeSearch { xi_radius: 1.5, qprime_max: 200, norm_tol: 0.01 };

    let z = Lattice::scaled_integer(1.0, 1)?;
    let x2 = IntPoly::parse("x^2")?;
    for n in [100, 1000, 10000] {
        let f = f_avg(&x2, &z, &[HpReal::sqrt(2)], n, &cfg)?;
        println!("F(x^2, Z, sqrt2, {n}) = {:.6} at {} bits", f.value, f.precision_bits);
    }

    let wide = Lattice::scaled_integer(10.0, 1)?;
    let report = alternative_check(&IntPoly::parse("2x+1")?, &wide, &[HpReal::integer(5)], 1, 100, &search, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&report.dichotomy)?);

    let report = alternative_check(&IntPoly::x(), &z, &[HpReal::phi()], 1, 1000, &search, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&report.dichotomy)?);
    Ok(())
}
