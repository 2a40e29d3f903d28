//! Polynomial exponential sums, best rational approximation, and the
//! large-sum-implies-near-rational certificate.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hp::{Frac, HpReal, dist_to_nearest_int, required_bits};
use crate::poly::IntPoly;

const BLOCK: u64 = 4096;

/// Default factor in the denominator bound `margin * delta^{-k}`.
pub const CERTIFICATE_MARGIN: f64 = 1e3;

/// `e^{2 pi i f}`, exact at quarter turns.
fn unit_phase(f: &Frac) -> Complex64 {
    let bits = f.bits();
    if bits >= 2 {
        let low: BigInt = f.numerator() & ((BigInt::one() << (bits - 2)) - 1);
        if low.is_zero() {
            let quarter = (f.numerator() >> (bits - 2)).to_u8().unwrap_or(0);
            return quarter_turn(quarter);
        }
    } else if f.is_zero() {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::cis(TAU * f.centered())
}

fn quarter_turn(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Default)]
struct ComplexSum {
    re: crate::lattice::Neumaier,
    im: crate::lattice::Neumaier,
}

impl ComplexSum {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Sum of `term(n)` over `1..=n_max` in fixed blocks, combined in order.
fn block_sum<F>(n_max: u64, term: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let blocks = n_max.div_ceil(BLOCK);
    let partials: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut s = ComplexSum::default();
            for n in b * BLOCK + 1..=((b + 1) * BLOCK).min(n_max) {
                s.add(term(n));
            }
            s.value()
        })
        .collect();
    let mut total = ComplexSum::default();
    for z in partials {
        total.add(z);
    }
    total.value()
}

/// `(1/N) sum_{n=1}^{N} e^{2 pi i p(n) theta}`, with `p(n) theta` reduced mod 1
/// in fixed point.
pub fn weyl_sum(p: &IntPoly, theta: &HpReal, n_max: u64) -> Complex64 {
    assert!(n_max >= 1, "N must be positive");
    let t = theta.fixed(required_bits(p, n_max));
    block_sum(n_max, |n| unit_phase(&t.frac_of_product(&p.eval(&BigInt::from(n))))) / n_max as f64
}

/// `sum_{n=1}^{N} e^{2 pi i (sum_i h_i(n) a_i) / q}`, phases reduced exactly mod `q`.
pub fn gauss_sum_multi(polys: &[IntPoly], a: &[i64], q: u64, n_max: u64) -> Complex64 {
    assert_eq!(polys.len(), a.len(), "one coefficient per polynomial");
    assert!(q >= 1, "q must be positive");
    let qb = BigInt::from(q);
    block_sum(n_max, |n| {
        let nb = BigInt::from(n);
        let r = polys
            .iter()
            .zip(a)
            .fold(BigInt::zero(), |acc, (p, &ai)| acc + p.eval_mod(&nb, &qb) * ai)
            .mod_floor(&qb);
        let r = r.to_u64().expect("residue below q");
        if (4 * r as u128) % q as u128 == 0 {
            quarter_turn(((4 * r as u128) / q as u128) as u8)
        } else {
            let c = if 2 * r >= q { r as f64 - q as f64 } else { r as f64 };
            Complex64::cis(TAU * c / q as f64)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRational {
    pub q_prime: u64,
    /// `||q' theta||`.
    pub dist: f64,
}

/// Denominators of the continued-fraction convergents of `theta` up to `q_max`.
pub fn convergent_denominators(theta: &HpReal, q_max: u64) -> Vec<u64> {
    // Twice the bits of q_max plus a guard keeps the expansion of the
    // truncation identical to that of theta up to denominators past q_max.
    let bits = 2 * (64 - q_max.leading_zeros()) + 96;
    let f = theta.fixed(bits);
    let mut num = f.mantissa().clone();
    let mut den = BigInt::one() << bits;
    let (mut q_prev, mut q_cur) = (BigInt::zero(), BigInt::one());
    let mut out = vec![1u64];
    let limit = BigInt::from(q_max);
    loop {
        let r = num.mod_floor(&den);
        if r.is_zero() {
            break;
        }
        num = std::mem::replace(&mut den, r);
        let q_next = num.div_floor(&den) * &q_cur + &q_prev;
        if q_next > limit {
            break;
        }
        if q_next == q_cur {
            // a leading partial quotient of 1 repeats the denominator 1
            q_prev = std::mem::replace(&mut q_cur, q_next);
            continue;
        }
        q_prev = std::mem::replace(&mut q_cur, q_next);
        out.push(q_cur.to_u64().expect("bounded by q_max"));
    }
    out
}

/// The `q' <= q_max` minimizing `||q' theta||`: the largest convergent
/// denominator not exceeding `q_max`. Ties go to the smaller `q'`.
pub fn best_rational(theta: &HpReal, q_max: u64) -> BestRational {
    assert!(q_max >= 1, "Q must be positive");
    let dens = convergent_denominators(theta, q_max);
    dens.into_iter()
        .map(|q| BestRational {
            q_prime: q,
            dist: dist_to_nearest_int(&theta.mul_int(&BigInt::from(q))),
        })
        .min_by(|a, b| a.dist.total_cmp(&b.dist).then(a.q_prime.cmp(&b.q_prime)))
        .expect("1 is always a convergent denominator")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylCertificate {
    pub delta: f64,
    pub degree: usize,
    pub n: u64,
    pub q_prime: u64,
    /// `||q' theta||`.
    pub dist: f64,
    pub sum_modulus: f64,
    /// Denominators up to this bound were searched.
    pub search_bound: u64,
    /// `q' delta^k`.
    pub q_ratio: f64,
    /// `||q' theta|| (delta N)^k`.
    pub dist_ratio: f64,
}

impl WeylCertificate {
    /// Recomputes the sum and the distance and checks the stored values.
    pub fn verify(&self, h_q: &IntPoly, theta: &HpReal) -> bool {
        let modulus = weyl_sum(h_q, theta, self.n).norm();
        let dist = dist_to_nearest_int(&theta.mul_int(&BigInt::from(self.q_prime)));
        modulus >= self.delta
            && modulus == self.sum_modulus
            && dist == self.dist
            && self.q_prime >= 1
            && self.q_prime <= self.search_bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WeylOutcome {
    Certificate(WeylCertificate),
    /// `|sum| < delta`: nothing to certify.
    NotApplicable { sum_modulus: f64 },
}

/// If `|E_{n<=N} e(h_q(n) theta)| >= delta`, finds `q' <= margin * delta^{-k}`
/// with `||q' theta||` minimal.
pub fn weyl_certificate(h_q: &IntPoly, theta: &HpReal, n_max: u64, delta: f64, margin: f64) -> WeylOutcome {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let sum_modulus = weyl_sum(h_q, theta, n_max).norm();
    if sum_modulus < delta {
        return WeylOutcome::NotApplicable { sum_modulus };
    }
    let k = h_q.degree().unwrap_or(0);
    let bound = (margin * delta.powi(-(k as i32))).ceil().clamp(1.0, u64::MAX as f64 / 4.0) as u64;
    let best = best_rational(theta, bound);
    WeylOutcome::Certificate(WeylCertificate {
        delta,
        degree: k,
        n: n_max,
        q_prime: best.q_prime,
        dist: best.dist,
        sum_modulus,
        search_bound: bound,
        q_ratio: best.q_prime as f64 * delta.powi(k as i32),
        dist_ratio: best.dist * (delta * n_max as f64).powi(k as i32),
    })
}

/// One row of the shared-factor Gauss sum comparison for `x^2 a_1 + x^3 a_2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussObstruction {
    pub q: u64,
    pub g: u64,
    pub n: u64,
    /// `|S| / N` with `a = (g, g)`: the phases live mod `q / g`.
    pub shared: f64,
    /// `|S| / N` with `a = (1, 1)`.
    pub coprime: f64,
    pub reduced_scale: f64,
    pub generic_scale: f64,
}

/// Compares the normalized sums when every coefficient shares the factor `g`
/// with `q` against the coprime case. The shared case only sees modulus
/// `q/g`, so it decays like `(q/g)^{-1/2}` rather than `q^{-1/2}`.
pub fn gauss_obstruction(q: u64, g: u64, n_max: u64) -> GaussObstruction {
    assert!(g >= 1 && q % g == 0, "g must divide q");
    let polys = [IntPoly::monomial(2), IntPoly::monomial(3)];
    let gi = g as i64;
    let shared = gauss_sum_multi(&polys, &[gi, gi], q, n_max).norm() / n_max as f64;
    let coprime = gauss_sum_multi(&polys, &[1, 1], q, n_max).norm() / n_max as f64;
    GaussObstruction {
        q,
        g,
        n: n_max,
        shared,
        coprime,
        reduced_scale: ((q / g) as f64).powf(-0.5),
        generic_scale: (q as f64).powf(-0.5),
    }
}

/// True if `q` is a convergent denominator of the exact rational `num/den`.
pub fn is_convergent_denominator_of_rational(num: &BigInt, den: &BigInt, q: u64) -> bool {
    let (mut a, mut b) = (num.clone(), den.abs());
    let (mut q_prev, mut q_cur) = (BigInt::zero(), BigInt::one());
    let target = BigInt::from(q);
    if q_cur == target {
        return true;
    }
    let (_, r) = a.div_mod_floor(&b);
    if r.is_zero() {
        return false;
    }
    a = std::mem::replace(&mut b, r);
    loop {
        let (c, r) = a.div_mod_floor(&b);
        let next = &c * &q_cur + &q_prev;
        if next == target {
            return true;
        }
        if next > target || r.is_zero() {
            return false;
        }
        q_prev = std::mem::replace(&mut q_cur, next);
        a = std::mem::replace(&mut b, r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn weyl_examples() {
        let z = weyl_sum(&IntPoly::parse("x^3+2").unwrap(), &HpReal::zero(), 37);
        assert_eq!(z, Complex64::new(1.0, 0.0));
        assert_eq!(weyl_sum(&IntPoly::x(), &HpReal::ratio(1, 2), 2), Complex64::new(0.0, 0.0));
        let s = weyl_sum(&IntPoly::monomial(2), &HpReal::ratio(1, 4), 4);
        assert_eq!(s, Complex64::new(0.5, 0.5));
    }

    #[test]
    fn weyl_matches_direct_sum_for_small_values() {
        let p = IntPoly::parse("x^2+3x").unwrap();
        let theta = HpReal::sqrt(7);
        let t = 7f64.sqrt();
        let direct: Complex64 = (1..=500u64)
            .map(|n| {
                let v = (n * n + 3 * n) as f64;
                Complex64::cis(TAU * (v * t).fract())
            })
            .sum::<Complex64>()
            / 500.0;
        // f64 loses about log2(250000 * 2.6) bits of the product
        assert!(close(weyl_sum(&p, &theta, 500), direct, 1e-9));
    }

    #[test]
    fn gauss_examples() {
        let x = [IntPoly::x()];
        assert_eq!(gauss_sum_multi(&x, &[0], 7, 13), Complex64::new(13.0, 0.0));
        assert_eq!(gauss_sum_multi(&x, &[1], 2, 2), Complex64::new(0.0, 0.0));
        // quadratic Gauss sum over a full period of an odd prime has modulus sqrt(p)
        let g = gauss_sum_multi(&[IntPoly::monomial(2)], &[1], 101, 101);
        assert!((g.norm() - 101f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn gauss_agrees_with_weyl_on_rationals() {
        let p = IntPoly::parse("x^3-x+5").unwrap();
        for (a, q) in [(1i64, 7u64), (3, 10), (5, 12)] {
            let g = gauss_sum_multi(std::slice::from_ref(&p), &[a], q, 300) / 300.0;
            let w = weyl_sum(&p, &HpReal::ratio(a, q as i64), 300);
            assert!(close(g, w, 1e-12));
        }
    }

    #[test]
    fn best_rational_examples() {
        let r = best_rational(&HpReal::ratio(1, 3), 10);
        assert_eq!((r.q_prime, r.dist), (3, 0.0));
        let r = best_rational(&HpReal::sqrt(2), 100);
        assert_eq!(r.q_prime, 70);
        assert!((r.dist - 0.005_050_633_883_346_584).abs() < 1e-15);
        let r = best_rational(&HpReal::phi(), 13);
        assert_eq!(r.q_prime, 13);
        assert!((r.dist - 0.034_441_853_748_633_03).abs() < 1e-15);
        assert_eq!(best_rational(&HpReal::integer(4), 50).q_prime, 1);
        assert_eq!(best_rational(&HpReal::ratio(1, 2), 50).q_prime, 2);
    }

    #[test]
    fn convergents_of_sqrt2_are_pell_numbers() {
        assert_eq!(
            convergent_denominators(&HpReal::sqrt(2), 10_000),
            vec![1, 2, 5, 12, 29, 70, 169, 408, 985, 2378, 5741]
        );
        assert_eq!(convergent_denominators(&HpReal::phi(), 100), vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    }

    #[test]
    fn best_rational_matches_brute_force() {
        for s in 0..30u64 {
            let theta = HpReal::random(11, s);
            let q_max = 200 + 37 * s;
            let brute = (1..=q_max)
                .map(|q| (dist_to_nearest_int(&theta.mul_int(&BigInt::from(q))), q))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap();
            let fast = best_rational(&theta, q_max);
            assert_eq!((fast.dist, fast.q_prime), brute);
        }
    }

    #[test]
    fn rational_convergent_oracle() {
        // 415/93 = [4; 2, 6, 7]: denominators 1, 2, 13, 93
        let (n, d) = (BigInt::from(415), BigInt::from(93));
        for q in [1, 2, 13, 93] {
            assert!(is_convergent_denominator_of_rational(&n, &d, q));
        }
        for q in [3, 7, 14, 92] {
            assert!(!is_convergent_denominator_of_rational(&n, &d, q));
        }
    }

    #[test]
    fn certificate_examples() {
        let sq = IntPoly::monomial(2);
        match weyl_certificate(&sq, &HpReal::zero(), 100, 0.5, CERTIFICATE_MARGIN) {
            WeylOutcome::Certificate(c) => assert_eq!((c.q_prime, c.dist), (1, 0.0)),
            other => panic!("{other:?}"),
        }
        let theta = HpReal::rational(BigInt::from(200_000_000_001i64), BigInt::from(1_000_000_000_000i64)).unwrap();
        match weyl_certificate(&sq, &theta, 10_000, 0.1, CERTIFICATE_MARGIN) {
            WeylOutcome::Certificate(c) => {
                assert_eq!(c.q_prime % 5, 0);
                assert!((c.dist - c.q_prime as f64 * 1e-12).abs() < 1e-18);
                assert!(c.verify(&sq, &theta));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            weyl_certificate(&sq, &HpReal::sqrt(2), 10_000, 0.9, CERTIFICATE_MARGIN),
            WeylOutcome::NotApplicable { sum_modulus } if sum_modulus < 0.1
        ));
    }

    #[test]
    fn shared_factor_keeps_sums_large() {
        // full period of q = 3^7 with g = 3^4
        let row = gauss_obstruction(2187, 81, 2187);
        assert!(row.shared > 5.0 * row.coprime, "{row:?}");
        assert!((row.shared - row.reduced_scale).abs() < 1e-9);
        assert!((row.coprime - row.generic_scale).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn integer_shift_invariance(seed in 0u64..1000, shift in -5i64..5, n in 1u64..300) {
            let p = IntPoly::parse("x^3-2x").unwrap();
            let theta = HpReal::random(seed, 3);
            let a = weyl_sum(&p, &theta, n);
            let b = weyl_sum(&p, &theta.add_int(&BigInt::from(shift)), n);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn conjugate_symmetry(seed in 0u64..1000, n in 1u64..300) {
            let p = IntPoly::parse("x^2+x+1").unwrap();
            let theta = HpReal::random(seed, 4);
            let a = weyl_sum(&p, &theta, n);
            let b = weyl_sum(&p, &theta.neg(), n);
            prop_assert!(close(a, b.conj(), 1e-13));
            prop_assert!(a.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn best_rational_returns_convergents(num in 1i64..100_000, den in 1i64..100_000, q_max in 1u64..5000) {
            let theta = HpReal::ratio(num, den);
            let r = best_rational(&theta, q_max);
            prop_assert!(is_convergent_denominator_of_rational(&BigInt::from(num), &BigInt::from(den), r.q_prime));
        }
    }
}
