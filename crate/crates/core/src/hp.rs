//! High-precision reals reduced modulo 1.
//!
//! A [`HpReal`] is a recipe (a symbolic constant, an exact rational, or a
//! seeded random stream) that can be materialized at any number of fractional
//! bits as a [`Fixed`] value `mant / 2^bits`. Products `v * alpha` with huge
//! integers `v` are computed exactly on the mantissa and reduced modulo 1 by
//! masking, so no fractional information is lost however large `v` gets.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::IntPoly;

/// Guard bits kept beyond the size of the integers a value gets multiplied by.
pub const GUARD_BITS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HpError {
    #[error("cannot parse real number {0:?}")]
    Parse(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Source {
    Rational { num: BigInt, den: BigInt },
    Sqrt(u64),
    Phi,
    Pi,
    E,
    Random { seed: u64, stream: u64 },
}

/// A real number `scale * source + shift` that can be expanded to arbitrary
/// fixed-point precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HpReal {
    source: Source,
    scale: BigInt,
    shift: BigInt,
}

impl HpReal {
    fn from_source(source: Source) -> Self {
        HpReal {
            source,
            scale: BigInt::one(),
            shift: BigInt::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn integer(v: i64) -> Self {
        Self::rational(BigInt::from(v), BigInt::one()).expect("nonzero denominator")
    }

    pub fn rational(num: BigInt, den: BigInt) -> Result<Self, HpError> {
        if den.is_zero() {
            return Err(HpError::ZeroDenominator);
        }
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let g = num.gcd(&den);
        let (num, den) = if g.is_zero() || g.is_one() {
            (num, den)
        } else {
            (num / &g, den / &g)
        };
        Ok(Self::from_source(Source::Rational { num, den }))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::rational(BigInt::from(num), BigInt::from(den)).expect("nonzero denominator")
    }

    /// `sqrt(n)`.
    pub fn sqrt(n: u64) -> Self {
        let r = n.sqrt();
        if r * r == n {
            return Self::integer(r as i64);
        }
        Self::from_source(Source::Sqrt(n))
    }

    /// The golden ratio.
    pub fn phi() -> Self {
        Self::from_source(Source::Phi)
    }

    pub fn pi() -> Self {
        Self::from_source(Source::Pi)
    }

    pub fn e() -> Self {
        Self::from_source(Source::E)
    }

    /// Uniform in `[0, 1)`; the binary expansion is drawn most significant
    /// bit first from a ChaCha stream, so higher precisions extend lower ones.
    pub fn random(seed: u64, stream: u64) -> Self {
        Self::from_source(Source::Random { seed, stream })
    }

    pub fn neg(&self) -> Self {
        HpReal {
            source: self.source.clone(),
            scale: -&self.scale,
            shift: -&self.shift,
        }
    }

    pub fn add_int(&self, k: &BigInt) -> Self {
        HpReal {
            source: self.source.clone(),
            scale: self.scale.clone(),
            shift: &self.shift + k,
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        HpReal {
            source: self.source.clone(),
            scale: &self.scale * k,
            shift: &self.shift * k,
        }
    }

    /// True when the value is exactly a dyadic rational of at most `bits`
    /// fractional bits (so every materialization is exact).
    pub fn is_exact_at(&self, bits: u32) -> bool {
        match &self.source {
            Source::Rational { den, .. } => {
                let tz = den.trailing_zeros().unwrap_or(0);
                (den >> tz).is_one() && tz <= bits as u64
            }
            _ => false,
        }
    }

    /// Floor of `value * 2^bits`, up to a few units in the last place for the
    /// transcendental sources.
    pub fn fixed(&self, bits: u32) -> Fixed {
        let base = match &self.source {
            Source::Rational { num, den } => {
                // exact floor of the whole affine value
                let top = (&self.scale * num + &self.shift * den) << bits;
                return Fixed::new(top.div_floor(den), bits);
            }
            Source::Sqrt(n) => (BigInt::from(*n) << (2 * bits)).sqrt(),
            Source::Phi => ((BigInt::from(5u8) << (2 * bits)).sqrt() + (BigInt::one() << bits)) >> 1,
            Source::Pi => pi_fixed(bits),
            Source::E => e_fixed(bits),
            Source::Random { seed, stream } => random_fixed(*seed, *stream, bits),
        };
        let mant = &self.scale * base + (&self.shift << bits);
        Fixed::new(mant, bits)
    }

    pub fn to_f64(&self) -> f64 {
        self.fixed(128).to_f64()
    }

    /// `(num, den)` with `den > 0` when the value is rational.
    pub fn as_rational(&self) -> Option<(BigInt, BigInt)> {
        match &self.source {
            Source::Rational { num, den } => Some((&self.scale * num + &self.shift * den, den.clone())),
            _ => None,
        }
    }
}

/// `a / b` for `b > 0`, to about 64 significant bits.
pub fn ratio_to_f64(a: &BigInt, b: &BigInt) -> f64 {
    let k = b.bits() as i64 + 66;
    ldexp_big(&((a << k as usize) / b), -k)
}

/// `||v num / den||`, computed exactly before the final rounding.
pub fn rational_multiple_dist(v: &BigInt, num: &BigInt, den: &BigInt) -> f64 {
    let r = (v * num).mod_floor(den);
    let d = (den - &r).min(r);
    ratio_to_f64(&d, den)
}

fn pi_fixed(bits: u32) -> BigInt {
    // Machin: pi = 16 atan(1/5) - 4 atan(1/239).
    let work = bits + 32;
    let pi = BigInt::from(16) * atan_inv(5, work) - BigInt::from(4) * atan_inv(239, work);
    pi >> 32
}

fn atan_inv(x: u64, work: u32) -> BigInt {
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut power = (BigInt::one() << work) / &x;
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
    sum
}

fn e_fixed(bits: u32) -> BigInt {
    let work = bits + 32;
    let mut term = BigInt::one() << work;
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    while !term.is_zero() {
        sum += &term;
        term /= BigInt::from(k);
        k += 1;
    }
    sum >> 32
}

fn random_fixed(seed: u64, stream: u64, bits: u32) -> BigInt {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let words = bits.div_ceil(64);
    let mut acc = BigInt::zero();
    for _ in 0..words {
        acc = (acc << 64) + BigInt::from(rng.next_u64());
    }
    acc >> (words * 64 - bits)
}

impl fmt::Display for HpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match &self.source {
            Source::Rational { num, den } if den.is_one() => num.to_string(),
            Source::Rational { num, den } => format!("{num}/{den}"),
            Source::Sqrt(n) => format!("sqrt{n}"),
            Source::Phi => "phi".into(),
            Source::Pi => "pi".into(),
            Source::E => "e".into(),
            Source::Random { seed, stream } => format!("random({seed},{stream})"),
        };
        if self.scale.is_one() && self.shift.is_zero() {
            return write!(f, "{base}");
        }
        write!(f, "{}*({base})", self.scale)?;
        if !self.shift.is_zero() {
            write!(f, "{:+}", self.shift)?;
        }
        Ok(())
    }
}

impl FromStr for HpReal {
    type Err = HpError;

    /// Accepts `sqrtN`, `sqrt(N)`, `phi`, `pi`, `e`, `random(seed,stream)`,
    /// a fraction `a/b`, or a decimal such as `-1.25e-3`; an optional leading
    /// minus sign applies to the symbolic forms too.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || HpError::Parse(s.to_string());
        // affine wrapper `k*(base)+m`
        if let Some((k, rest)) = t.split_once("*(") {
            let k: BigInt = k.trim().parse().map_err(|_| err())?;
            let close = rest.rfind(')').ok_or_else(err)?;
            let base: HpReal = rest[..close].parse()?;
            let tail = rest[close + 1..].trim();
            let m: BigInt = if tail.is_empty() {
                BigInt::zero()
            } else {
                tail.trim_start_matches('+').parse().map_err(|_| err())?
            };
            return Ok(HpReal {
                source: base.source,
                scale: base.scale * &k,
                shift: base.shift * k + m,
            });
        }
        if let Some(rest) = t.strip_prefix('-') {
            if rest.starts_with(|c: char| c.is_ascii_alphabetic()) {
                return Ok(rest.parse::<HpReal>()?.neg());
            }
        }
        let lower = t.to_ascii_lowercase();
        match lower.as_str() {
            "phi" => return Ok(Self::phi()),
            "pi" => return Ok(Self::pi()),
            "e" => return Ok(Self::e()),
            _ => {}
        }
        if let Some(arg) = lower.strip_prefix("sqrt") {
            let arg = arg.trim_start_matches('(').trim_end_matches(')');
            let n: u64 = arg.trim().parse().map_err(|_| err())?;
            return Ok(Self::sqrt(n));
        }
        if let Some(arg) = lower.strip_prefix("random(") {
            let arg = arg.strip_suffix(')').ok_or_else(err)?;
            let (a, b) = arg.split_once(',').ok_or_else(err)?;
            let seed = a.trim().parse().map_err(|_| err())?;
            let stream = b.trim().parse().map_err(|_| err())?;
            return Ok(Self::random(seed, stream));
        }
        if let Some((a, b)) = t.split_once('/') {
            let num: BigInt = a.trim().parse().map_err(|_| err())?;
            let den: BigInt = b.trim().parse().map_err(|_| err())?;
            return Self::rational(num, den);
        }
        parse_decimal(t).ok_or_else(err)
    }
}

fn parse_decimal(t: &str) -> Option<HpReal> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let (num, den) = if scale >= 0 {
        (num * num_traits::pow(ten, scale as usize), BigInt::one())
    } else {
        (num, num_traits::pow(ten, (-scale) as usize))
    };
    HpReal::rational(num, den).ok()
}

impl Serialize for HpReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HpReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A materialized value `mant / 2^bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixed {
    mant: BigInt,
    bits: u32,
    modulus: BigInt,
}

impl Fixed {
    pub fn new(mant: BigInt, bits: u32) -> Self {
        Fixed {
            mant,
            bits,
            modulus: BigInt::one() << bits,
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn to_f64(&self) -> f64 {
        ldexp_big(&self.mant, -(self.bits as i64))
    }

    /// Fractional part of `v * self`, exactly.
    pub fn frac_of_product(&self, v: &BigInt) -> Frac {
        Frac {
            num: (v * &self.mant).mod_floor(&self.modulus),
            bits: self.bits,
        }
    }

    /// Fractional part of the value itself.
    pub fn frac(&self) -> Frac {
        Frac {
            num: self.mant.mod_floor(&self.modulus),
            bits: self.bits,
        }
    }
}

/// An exact fraction `num / 2^bits` in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Frac {
    num: BigInt,
    bits: u32,
}

impl Frac {
    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Value in `[0, 1)`.
    pub fn to_f64(&self) -> f64 {
        ldexp_big(&self.num, -(self.bits as i64))
    }

    /// Representative in `[-1/2, 1/2)`.
    pub fn centered(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        if self.num.bit(self.bits as u64 - 1) {
            -ldexp_big(&((BigInt::one() << self.bits) - &self.num), -(self.bits as i64))
        } else {
            self.to_f64()
        }
    }

    /// Exact numerator of the distance to the nearest integer.
    pub fn dist_numerator(&self) -> BigInt {
        if self.bits == 0 {
            return BigInt::zero();
        }
        if self.num.bit(self.bits as u64 - 1) {
            (BigInt::one() << self.bits) - &self.num
        } else {
            self.num.clone()
        }
    }

    /// Distance to the nearest integer, in `[0, 1/2]`.
    pub fn dist(&self) -> f64 {
        ldexp_big(&self.dist_numerator(), -(self.bits as i64))
    }
}

/// `v * 2^exp` as the nearest-below `f64` of the top 64 significant bits.
pub fn ldexp_big(v: &BigInt, exp: i64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let bits = v.bits() as i64;
    let (m, e) = if bits > 64 {
        let s = bits - 64;
        ((v.abs() >> s as usize), exp + s)
    } else {
        (v.abs(), exp)
    };
    let mut x = m.to_u64().expect("fits in 64 bits") as f64;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            break;
        }
    }
    x *= 2f64.powi(e as i32);
    if v.sign() == Sign::Minus {
        -x
    } else {
        x
    }
}

/// Fractional bits needed so that `p(n) * alpha` keeps [`GUARD_BITS`] of
/// accuracy for every `|n| <= n_max`.
pub fn required_bits(p: &IntPoly, n_max: u64) -> u32 {
    let bound = p.abs_coeffs().eval(&BigInt::from(n_max));
    bound.bits() as u32 + GUARD_BITS
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_nearest_int(x: &HpReal) -> f64 {
    if let Some((num, den)) = x.as_rational() {
        return rational_multiple_dist(&BigInt::one(), &num, &den);
    }
    let bits = 128 + x.fixed(0).mantissa().bits() as u32;
    x.fixed(bits).frac().dist()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_constants() {
        assert!((HpReal::sqrt(2).to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((HpReal::pi().to_f64() - std::f64::consts::PI).abs() < 1e-15);
        assert!((HpReal::e().to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!((HpReal::phi().to_f64() - 1.618_033_988_749_895).abs() < 1e-15);
        assert_eq!(HpReal::sqrt(9), HpReal::integer(3));
    }

    #[test]
    fn pi_digits_at_high_precision() {
        // pi * 10^40 truncated
        let f = HpReal::pi().fixed(200);
        let scaled: BigInt = (f.mantissa() * num_traits::pow(BigInt::from(10), 40)) >> 200;
        assert_eq!(
            scaled.to_string(),
            "31415926535897932384626433832795028841971"
        );
    }

    #[test]
    fn parse_forms() {
        let cases = [
            ("sqrt2", HpReal::sqrt(2)),
            ("sqrt(3)", HpReal::sqrt(3)),
            ("phi", HpReal::phi()),
            ("-pi", HpReal::pi().neg()),
            ("1/3", HpReal::ratio(1, 3)),
            ("2/-4", HpReal::ratio(-1, 2)),
            ("0.25", HpReal::ratio(1, 4)),
            ("-1.5e-2", HpReal::ratio(-3, 200)),
            ("3e2", HpReal::integer(300)),
            ("random(7,2)", HpReal::random(7, 2)),
        ];
        for (s, want) in cases {
            assert_eq!(s.parse::<HpReal>().unwrap(), want, "{s}");
        }
        assert!("1/0".parse::<HpReal>().is_err());
        assert!("abc".parse::<HpReal>().is_err());
        assert!(".".parse::<HpReal>().is_err());
    }

    #[test]
    fn display_parses_back() {
        for v in [
            HpReal::sqrt(2),
            HpReal::ratio(-5, 7),
            HpReal::random(1, 0),
            HpReal::phi().neg(),
        ] {
            assert_eq!(v.to_string().parse::<HpReal>().unwrap(), v);
        }
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist_to_nearest_int(&HpReal::ratio(1, 2)), 0.5);
        assert!((dist_to_nearest_int(&"3.2".parse().unwrap()) - 0.2).abs() < 1e-15);
        assert!((dist_to_nearest_int(&"-0.7".parse().unwrap()) - 0.3).abs() < 1e-15);
        assert_eq!(dist_to_nearest_int(&HpReal::integer(-4)), 0.0);
    }

    #[test]
    fn product_reduction_survives_huge_integers() {
        // 10^30 * sqrt2 mod 1, precision chosen per the guard-bit contract
        let v = num_traits::pow(BigInt::from(10), 30);
        let bits = v.bits() as u32 + GUARD_BITS;
        let f = HpReal::sqrt(2).fixed(bits).frac_of_product(&v);
        // reference from a much higher precision expansion
        let g = HpReal::sqrt(2).fixed(bits + 200).frac_of_product(&v);
        assert!((f.to_f64() - g.to_f64()).abs() < 1e-15);
        assert!(f.to_f64() > 0.0 && f.to_f64() < 1.0);
    }

    #[test]
    fn integer_shift_and_negation_are_exact() {
        let a = HpReal::random(3, 1);
        let v = BigInt::from(123_456_789u64);
        let f = a.fixed(100).frac_of_product(&v);
        let shifted = a.add_int(&BigInt::from(-17)).fixed(100).frac_of_product(&v);
        assert_eq!(f, shifted);
        let neg = a.neg().fixed(100).frac_of_product(&v);
        assert_eq!(f.dist_numerator(), neg.dist_numerator());
    }

    #[test]
    fn random_prefix_property() {
        let a = HpReal::random(11, 0);
        let lo = a.fixed(70);
        let hi = a.fixed(200);
        assert_eq!(lo.mantissa(), &(hi.mantissa() >> 130));
        assert_ne!(HpReal::random(11, 1).fixed(64), lo.clone());
    }

    #[test]
    fn ldexp_handles_large_and_tiny() {
        let v = BigInt::one() << 2000;
        assert_eq!(ldexp_big(&v, -2000), 1.0);
        assert_eq!(ldexp_big(&BigInt::from(3), -1), 1.5);
        assert_eq!(ldexp_big(&BigInt::from(-3), -2), -0.75);
        assert_eq!(ldexp_big(&BigInt::one(), -3000), 0.0);
    }

    #[test]
    fn centered_representative() {
        let f = HpReal::ratio(3, 4).fixed(10).frac();
        assert_eq!(f.centered(), -0.25);
        assert_eq!(HpReal::ratio(1, 4).fixed(10).frac().centered(), 0.25);
    }

    #[test]
    fn required_bits_tracks_polynomial_growth() {
        let p = IntPoly::from_i64(&[-19, -19, -19, 1, 1, 1]);
        let b = required_bits(&p, 1_000_000);
        // |h|(10^6) is about 10^30, i.e. 100 bits
        assert!((160..=170).contains(&b), "{b}");
    }

    #[test]
    fn integer_multiples_of_rationals_stay_exact() {
        let third = HpReal::ratio(1, 3);
        assert_eq!(dist_to_nearest_int(&third.mul_int(&BigInt::from(3))), 0.0);
        let f = third.mul_int(&BigInt::from(7)).add_int(&BigInt::from(-1)).fixed(20);
        assert_eq!(f.mantissa(), &((BigInt::from(4) << 20) / 3));
    }
}
