//! Shared factors between coefficients and modulus keep Gauss sums large.
use intersective::exp_sums::gauss_obstruction;

fn main() {
    println!("{:>6} {:>4} {:>10} {:>10} {:>12} {:>12}", "q", "g", "shared", "coprime", "(q/g)^-1/2", "q^-1/2");
    for (q, g) in [(243, 1), (243, 9), (2187, 81), (625, 25)] {
        let r = gauss_obstruction(q, g, q);
        println!(
            "{:>6} {:>4} {:>10.5} {:>10.5} {:>12.5} {:>12.5}",
            r.q, r.g, r.shared, r.coprime, r.reduced_scale, r.generic_scale
        );
    }
}
