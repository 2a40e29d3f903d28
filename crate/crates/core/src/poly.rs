//! Dense integer-coefficient polynomials in one variable.
//!
//! Coefficients are stored lowest degree first and kept normalized: the last
//! stored coefficient is nonzero, and the zero polynomial has no coefficients
//! at all (its degree is `None`).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("coefficient of x^{0} is not divisible by the divisor")]
    NonIntegralDivision(usize),
    #[error("division by zero")]
    ZeroDivisor,
    #[error("cannot parse polynomial: {0}")]
    Parse(String),
}

/// Polynomial with arbitrary-precision integer coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Coeffs", into = "Coeffs")]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

/// Serde proxy: the coefficient list, lowest degree first.
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct Coeffs(#[serde(with = "crate::serde_big::seq")] Vec<BigInt>);

impl IntPoly {
    /// Builds a polynomial from coefficients, lowest degree first.
    /// Trailing zeros are dropped.
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntPoly { coeffs };
        p.normalize();
        p
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    /// The polynomial `x`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    /// `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = BigInt::one();
        IntPoly { coeffs }
    }

    /// Product of the linear factors `(x - r)`.
    pub fn from_roots(roots: &[i64]) -> Self {
        roots
            .iter()
            .fold(Self::from_i64(&[1]), |acc, &r| &acc * &Self::from_i64(&[-r, 1]))
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Coefficient of `x^i` (zero past the degree).
    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn leading_coeff(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn constant_term(&self) -> BigInt {
        self.coeff(0)
    }

    /// Exact value at an integer point (Horner).
    pub fn eval(&self, n: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc *= n;
            acc += c;
        }
        acc
    }

    pub fn eval_i64(&self, n: i64) -> BigInt {
        self.eval(&BigInt::from(n))
    }

    /// Value modulo `m`, reduced into `[0, m)`.
    pub fn eval_mod(&self, n: &BigInt, m: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = (acc * n + c).mod_floor(m);
        }
        acc
    }

    /// The polynomial with every coefficient replaced by its absolute value.
    /// Its value at `N >= 0` bounds `|p(n)|` for all `|n| <= N`.
    pub fn abs_coeffs(&self) -> IntPoly {
        IntPoly {
            coeffs: self.coeffs.iter().map(Signed::abs).collect(),
        }
    }

    /// Hasse derivative `p^{(j)} / j!`: the coefficient of `x^i` becomes
    /// `C(i + j, j) * coeff_{i + j}`.
    pub fn derivative_factorial(&self, j: usize) -> IntPoly {
        if j == 0 {
            return self.clone();
        }
        if self.coeffs.len() <= j {
            return IntPoly::zero();
        }
        let coeffs = (j..self.coeffs.len())
            .map(|src| binomial(src, j) * &self.coeffs[src])
            .collect();
        IntPoly::new(coeffs)
    }

    /// Expansion of `p(r + q x)`.
    pub fn compose_affine(&self, r: &BigInt, q: &BigInt) -> IntPoly {
        // Horner with the linear polynomial r + q x.
        let lin = IntPoly::new(vec![r.clone(), q.clone()]);
        let mut acc = IntPoly::zero();
        for c in self.coeffs.iter().rev() {
            acc = &acc * &lin;
            acc.add_constant(c);
        }
        acc
    }

    fn add_constant(&mut self, c: &BigInt) {
        if self.coeffs.is_empty() {
            self.coeffs.push(c.clone());
        } else {
            self.coeffs[0] += c;
        }
        self.normalize();
    }

    /// `p / m`, provided `m` divides every coefficient.
    pub fn divide_exact(&self, m: &BigInt) -> Result<IntPoly, PolyError> {
        if m.is_zero() {
            return Err(PolyError::ZeroDivisor);
        }
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let (quot, rem) = c.div_rem(m);
            if !rem.is_zero() {
                return Err(PolyError::NonIntegralDivision(i));
            }
            out.push(quot);
        }
        Ok(IntPoly::new(out))
    }

    pub fn scale(&self, m: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c * m).collect())
    }

    /// Coefficient list in the `[c0,c1,...]` text form.
    pub fn to_list_string(&self) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(ToString::to_string).collect();
        format!("[{}]", parts.join(","))
    }

    /// Parses either a coefficient list `"[-19,-19,-19,1,1,1]"` (lowest degree
    /// first) or an expression such as `"x^5+x^4+x^3-19x^2-19x-19"` or
    /// `"(x^3-19)(x^2+x+1)"`.
    pub fn parse(s: &str) -> Result<IntPoly, PolyError> {
        let t = s.trim();
        if t.starts_with('[') {
            parse_list(t)
        } else {
            ExprParser::new(t).parse()
        }
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

impl std::ops::Add for &IntPoly {
    type Output = IntPoly;
    fn add(self, rhs: &IntPoly) -> IntPoly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl std::ops::Sub for &IntPoly {
    type Output = IntPoly;
    fn sub(self, rhs: &IntPoly) -> IntPoly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..len).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl std::ops::Mul for &IntPoly {
    type Output = IntPoly;
    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }
}

impl std::ops::Neg for &IntPoly {
    type Output = IntPoly;
    fn neg(self) -> IntPoly {
        IntPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl From<Coeffs> for IntPoly {
    fn from(c: Coeffs) -> Self {
        IntPoly::new(c.0)
    }
}

impl From<IntPoly> for Coeffs {
    fn from(p: IntPoly) -> Self {
        Coeffs(p.coeffs)
    }
}

impl FromStr for IntPoly {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IntPoly::parse(s)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if c.is_negative() {
                write!(f, "-")?;
            } else if !first {
                write!(f, "+")?;
            }
            first = false;
            let show_mag = i == 0 || !mag.is_one();
            if show_mag {
                write!(f, "{mag}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPoly({self})")
    }
}

fn parse_list(s: &str) -> Result<IntPoly, PolyError> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| PolyError::Parse(format!("unbalanced brackets in {s:?}")))?;
    if inner.trim().is_empty() {
        return Ok(IntPoly::zero());
    }
    let coeffs = inner
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<BigInt>()
                .map_err(|_| PolyError::Parse(format!("bad coefficient {:?}", tok.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IntPoly::new(coeffs))
}

/// Recursive-descent parser for `+ - *`, juxtaposition, parentheses and
/// `^` with a nonnegative integer exponent, in the single variable `x`.
struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> ExprParser<'a> {
    fn new(s: &'a str) -> Self {
        ExprParser {
            src: s.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse(format!(
            "{msg} at offset {} in {:?}",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<IntPoly, PolyError> {
        if self.peek().is_none() {
            return Err(self.err("empty input"));
        }
        let p = self.sum()?;
        if self.peek().is_some() {
            return Err(self.err("unexpected character"));
        }
        Ok(p)
    }

    fn sum(&mut self) -> Result<IntPoly, PolyError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -&self.product()?
            }
            Some(b'+') => {
                self.pos += 1;
                self.product()?
            }
            _ => self.product()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.product()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.product()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<IntPoly, PolyError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = &acc * &self.power()?;
                }
                Some(b'(' | b'x' | b'X' | b'0'..=b'9') => acc = &acc * &self.power()?,
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<IntPoly, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.integer()?;
            let e: usize = e
                .try_into()
                .map_err(|_| self.err("exponent out of range"))?;
            let mut out = IntPoly::from_i64(&[1]);
            for _ in 0..e {
                out = &out * &base;
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<IntPoly, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'x' | b'X') => {
                self.pos += 1;
                Ok(IntPoly::x())
            }
            Some(b'0'..=b'9') => Ok(IntPoly::new(vec![self.integer()?])),
            _ => Err(self.err("expected term")),
        }
    }

    fn integer(&mut self) -> Result<BigInt, PolyError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("validated digits"))
    }
}
