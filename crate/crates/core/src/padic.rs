//! p-adic root systems for intersective polynomials.
//!
//! For every prime `p` a root chain `z_p mod p, z_p mod p^2, ...` is fixed
//! once and for all. Those chains determine, for each modulus `q`, the CRT
//! representative `r_q` in `(-q, 0]`, the completely multiplicative weight
//! `lambda(q)`, and the auxiliary polynomial `h_q(x) = h(r_q + q x) / lambda(q)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{IntPoly, PolyError};

/// Nodes a single root-chain search may visit before giving up.
const CHAIN_NODE_BUDGET: usize = 2_000_000;
/// Largest lifting depth the multiplicity check may escalate to.
const MAX_DEPTH: u32 = 512;
/// Moduli up to this size get a brute-force confirmation when refuted.
const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("no root chain of the requested depth exists modulo powers of {0}")]
    NoRootChain(u64),
    #[error("prime {0} divides q but is not covered by the root system")]
    UncoveredPrime(u64),
    #[error("root chain for {prime} has depth {have}, modulus needs {needed}")]
    InsufficientPrecision { prime: u64, needed: u32, have: u32 },
    #[error("root-chain search for {0} exceeded its node budget")]
    SearchBudget(u64),
    #[error("multiplicity of the root chain for {0} could not be resolved")]
    UnresolvedMultiplicity(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("zero polynomial has no root system")]
    ZeroPolynomial,
    #[error("auxiliary polynomial is not integral: {0}")]
    NonIntegral(#[from] PolyError),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&i| sieve[i]).map(|i| i as u64).collect()
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut q: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= q {
        if q % d == 0 {
            let mut e = 0;
            while q % d == 0 {
                q /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if q > 1 {
        out.push((q, 1));
    }
    out
}

fn valuation(v: &BigInt, p: &BigInt, cap: u32) -> u32 {
    if v.is_zero() {
        return cap;
    }
    let mut v = v.clone();
    let mut k = 0;
    while k < cap && v.is_multiple_of(p) {
        v /= p;
        k += 1;
    }
    k
}

/// All residues `r mod p^j` with `h(r) = 0 mod p^j`, ascending.
///
/// Computed level by level: roots modulo `p^{i+1}` are searched only among the
/// `p` lifts `r + p^i t` of roots modulo `p^i`, which is complete.
pub fn roots_mod_prime_power(h: &IntPoly, p: u64, j: u32) -> Vec<BigInt> {
    assert!(j >= 1, "exponent must be positive");
    let pb = BigInt::from(p);
    let mut modulus = pb.clone();
    let mut roots: Vec<BigInt> = (0..p)
        .map(BigInt::from)
        .filter(|r| h.eval_mod(r, &modulus).is_zero())
        .collect();
    for _ in 1..j {
        let next = &modulus * &pb;
        let mut lifted = Vec::new();
        for r in &roots {
            for t in 0..p {
                let cand = r + &modulus * BigInt::from(t);
                if h.eval_mod(&cand, &next).is_zero() {
                    lifted.push(cand);
                }
            }
        }
        modulus = next;
        roots = lifted;
        if roots.is_empty() {
            break;
        }
    }
    roots.sort();
    roots
}

/// Outcome of a depth-first chain search.
enum Chain {
    /// Residues modulo `p, p^2, ..., p^depth`.
    Found(Vec<BigInt>),
    /// No chain exists; the deepest level that still had a root.
    Dead { deepest: u32 },
}

/// Smallest-residue-first search with backtracking for a chain of roots
/// of depth `depth`.
fn find_chain(h: &IntPoly, p: u64, depth: u32) -> Result<Chain, PadicError> {
    let pb = BigInt::from(p);
    // powers[i] = p^(i+1)
    let powers: Vec<BigInt> = (1..=depth).map(|i| num_traits::pow(pb.clone(), i as usize)).collect();
    // One frame per level: the candidate digit to try next.
    let mut digits: Vec<u64> = vec![0];
    let mut chain: Vec<BigInt> = Vec::new();
    let mut deepest = 0u32;
    let mut visited = 0usize;
    loop {
        let level = digits.len() - 1;
        let t = digits[level];
        if t == p {
            digits.pop();
            if digits.is_empty() {
                return Ok(Chain::Dead { deepest });
            }
            chain.pop();
            *digits.last_mut().unwrap() += 1;
            continue;
        }
        visited += 1;
        if visited > CHAIN_NODE_BUDGET {
            return Err(PadicError::SearchBudget(p));
        }
        let cand = match level {
            0 => BigInt::from(t),
            _ => &chain[level - 1] + &powers[level - 1] * BigInt::from(t),
        };
        if h.eval_mod(&cand, &powers[level]).is_zero() {
            chain.push(cand);
            deepest = deepest.max(level as u32 + 1);
            if chain.len() as u32 == depth {
                return Ok(Chain::Found(chain));
            }
            digits.push(0);
        } else {
            digits[level] += 1;
        }
    }
}

/// The chosen root chain for one prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeRoot {
    pub prime: u64,
    /// `residues[i]` is `z_p mod p^(i+1)`.
    #[serde(with = "crate::serde_big::seq")]
    pub residues: Vec<BigInt>,
    /// Multiplicity `m` of `z_p`, so `lambda(p) = p^m`.
    pub multiplicity: u32,
    /// `v_p` of the Hasse derivatives `h^(j)/j!` at the deepest residue,
    /// for `j = 1..=m`; the last entry is the first unsaturated one.
    pub derivative_valuations: Vec<u32>,
}

impl PrimeRoot {
    pub fn depth(&self) -> u32 {
        self.residues.len() as u32
    }

    /// `z_p mod p^level`.
    pub fn residue(&self, level: u32) -> Option<&BigInt> {
        level.checked_sub(1).and_then(|i| self.residues.get(i as usize))
    }
}

/// Fixes a root chain for `p` of depth at least `depth`, escalating the depth
/// until the multiplicity estimate is trustworthy.
fn choose_prime_root(h: &IntPoly, p: u64, depth: u32) -> Result<PrimeRoot, PadicError> {
    let deg = h.degree().ok_or(PadicError::ZeroPolynomial)?;
    let pb = BigInt::from(p);
    let mut depth = depth.max(1);
    loop {
        let residues = match find_chain(h, p, depth)? {
            Chain::Found(c) => c,
            Chain::Dead { .. } => return Err(PadicError::NoRootChain(p)),
        };
        let z = residues.last().expect("depth >= 1");
        // m = first j whose Hasse derivative at z is nonzero at this
        // precision; a valuation equal to the depth is saturated.
        let mut vals = Vec::new();
        let mut multiplicity = None;
        for j in 1..=deg {
            let v = valuation(&h.derivative_factorial(j).eval(z), &pb, depth);
            vals.push(v);
            if v < depth {
                multiplicity = Some(j as u32);
                break;
            }
        }
        let Some(m) = multiplicity else {
            // Only possible when h vanishes to every tested order, i.e. the
            // depth is too small to see the leading term.
            if depth >= MAX_DEPTH {
                return Err(PadicError::UnresolvedMultiplicity(p));
            }
            depth *= 2;
            continue;
        };
        let observed = *vals.last().unwrap();
        if depth >= 2 * (1 + observed) {
            return Ok(PrimeRoot {
                prime: p,
                residues,
                multiplicity: m,
                derivative_valuations: vals,
            });
        }
        if depth >= MAX_DEPTH {
            return Err(PadicError::UnresolvedMultiplicity(p));
        }
        depth *= 2;
    }
}

/// A consistent choice of p-adic roots `z_p` for a fixed polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootSystem {
    poly: IntPoly,
    roots: BTreeMap<u64, PrimeRoot>,
}

/// `(q, r_q, lambda(q), h_q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxiliaryData {
    pub q: u64,
    #[serde(with = "crate::serde_big")]
    pub r_q: BigInt,
    #[serde(with = "crate::serde_big")]
    pub lambda_q: BigInt,
    pub h_q: IntPoly,
}

impl RootSystem {
    /// Chooses root chains of depth at least `depth` for each listed prime.
    /// Primes are processed in parallel and merged in ascending order.
    pub fn choose(h: &IntPoly, primes: &[u64], depth: u32) -> Result<Self, PadicError> {
        if h.is_zero() {
            return Err(PadicError::ZeroPolynomial);
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(PadicError::NotPrime(p));
        }
        let records: Vec<PrimeRoot> = primes
            .par_iter()
            .map(|&p| choose_prime_root(h, p, depth))
            .collect::<Result<_, _>>()?;
        Ok(RootSystem {
            poly: h.clone(),
            roots: records.into_iter().map(|r| (r.prime, r)).collect(),
        })
    }

    /// A root system deep enough for every modulus `q <= q_max`.
    pub fn covering(h: &IntPoly, q_max: u64) -> Result<Self, PadicError> {
        let primes = primes_up_to(q_max.max(2));
        if h.is_zero() {
            return Err(PadicError::ZeroPolynomial);
        }
        let records: Vec<PrimeRoot> = primes
            .par_iter()
            .map(|&p| {
                let mut depth = 1u32;
                let mut pow = p;
                while let Some(next) = pow.checked_mul(p).filter(|&n| n <= q_max) {
                    pow = next;
                    depth += 1;
                }
                choose_prime_root(h, p, depth)
            })
            .collect::<Result<_, _>>()?;
        Ok(RootSystem {
            poly: h.clone(),
            roots: records.into_iter().map(|r| (r.prime, r)).collect(),
        })
    }

    pub fn poly(&self) -> &IntPoly {
        &self.poly
    }

    pub fn prime_root(&self, p: u64) -> Option<&PrimeRoot> {
        self.roots.get(&p)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.roots.keys().copied()
    }

    /// Completely multiplicative `lambda`, with `lambda(p) = p^m`.
    pub fn lambda(&self, q: u64) -> Result<BigInt, PadicError> {
        if q == 0 {
            return Err(PadicError::ZeroModulus);
        }
        let mut acc = BigInt::one();
        for (p, e) in factorize(q) {
            let rec = self.roots.get(&p).ok_or(PadicError::UncoveredPrime(p))?;
            acc *= num_traits::pow(BigInt::from(p), (rec.multiplicity * e) as usize);
        }
        Ok(acc)
    }

    /// The CRT representative `r_q` in `(-q, 0]` of the chosen roots.
    pub fn r_of(&self, q: u64) -> Result<BigInt, PadicError> {
        if q == 0 {
            return Err(PadicError::ZeroModulus);
        }
        let mut x = BigInt::zero();
        let mut m = BigInt::one();
        for (p, e) in factorize(q) {
            let rec = self.roots.get(&p).ok_or(PadicError::UncoveredPrime(p))?;
            let z = rec.residue(e).ok_or(PadicError::InsufficientPrecision {
                prime: p,
                needed: e,
                have: rec.depth(),
            })?;
            let pe = num_traits::pow(BigInt::from(p), e as usize);
            x = crt_pair(&x, &m, z, &pe);
            m *= pe;
        }
        let qb = BigInt::from(q);
        let x = x.mod_floor(&qb);
        Ok(if x.is_zero() { x } else { x - qb })
    }

    /// `h_q(x) = h(r_q + q x) / lambda(q)`.
    pub fn auxiliary(&self, q: u64) -> Result<AuxiliaryData, PadicError> {
        let r_q = self.r_of(q)?;
        let lambda_q = self.lambda(q)?;
        let h_q = self
            .poly
            .compose_affine(&r_q, &BigInt::from(q))
            .divide_exact(&lambda_q)?;
        Ok(AuxiliaryData {
            q,
            r_q,
            lambda_q,
            h_q,
        })
    }
}

/// Solution of `x = a1 mod m1`, `x = a2 mod m2` for coprime moduli, in `[0, m1 m2)`.
fn crt_pair(a1: &BigInt, m1: &BigInt, a2: &BigInt, m2: &BigInt) -> BigInt {
    let eg = m1.extended_gcd(m2);
    debug_assert!(eg.gcd.is_one(), "moduli must be coprime");
    let t = ((a2 - a1) * eg.x).mod_floor(m2);
    (a1 + m1 * t).mod_floor(&(m1 * m2))
}

/// How a refutation was established.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefutationMethod {
    /// Every residue modulo `q` was evaluated.
    Exhaustive,
    /// Complete level-by-level lifting (modulus too large to enumerate).
    Lifting,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationWitness {
    pub prime: u64,
    pub exponent: u32,
    pub residues_checked: u64,
    pub method: RefutationMethod,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum IntersectivityVerdict {
    /// `q` has no root of `h`: the polynomial is not intersective.
    Refuted {
        #[serde(with = "crate::serde_big")]
        q: BigInt,
        witness: RefutationWitness,
    },
    /// Every prime power `p^j` with `p <= prime_bound`, `j <= depth` has a root.
    /// This is evidence, not a proof.
    NoObstructionFound { prime_bound: u64, depth: u32 },
    /// `h` has an integer root, hence a root modulo every `q`.
    CertifiedByIntegerRoot {
        #[serde(with = "crate::serde_big")]
        r: BigInt,
    },
}

impl IntersectivityVerdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self, IntersectivityVerdict::Refuted { .. })
    }
}

/// Integer roots of `h` among the divisors of its constant term, ordered by
/// absolute value (negative first). Returns `None` when the constant term is
/// too large to factor by trial division.
pub fn integer_roots(h: &IntPoly) -> Option<Vec<BigInt>> {
    if h.is_zero() {
        return Some(vec![BigInt::zero()]);
    }
    let c0 = h.constant_term();
    if c0.is_zero() {
        let mut rest = integer_roots(&IntPoly::new(h.coeffs()[1..].to_vec()))?;
        rest.push(BigInt::zero());
        rest.sort_by(|a, b| a.abs().cmp(&b.abs()).then(a.cmp(b)));
        rest.dedup();
        return Some(rest);
    }
    let n = c0.abs().to_u64().filter(|&n| n <= 1_000_000_000_000)?;
    let mut divisors = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            divisors.push(d);
            if d != n / d {
                divisors.push(n / d);
            }
        }
        d += 1;
    }
    divisors.sort_unstable();
    let mut roots = Vec::new();
    for d in divisors {
        for r in [-(d as i128), d as i128] {
            let r = BigInt::from(r);
            if h.eval(&r).is_zero() {
                roots.push(r);
            }
        }
    }
    Some(roots)
}

/// Deepest level `<= depth` at which `h` still has a root modulo `p^level`.
fn deepest_root_level(h: &IntPoly, p: u64, depth: u32) -> Result<u32, PadicError> {
    Ok(match find_chain(h, p, depth)? {
        Chain::Found(_) => depth,
        Chain::Dead { deepest } => deepest,
    })
}

/// Certifies intersectivity by an integer root, refutes it by a prime power
/// with no root (the smallest such `p^j` with `p <= prime_bound`,
/// `j <= depth`), or reports that no obstruction was found.
pub fn certify_intersective(
    h: &IntPoly,
    prime_bound: u64,
    depth: u32,
) -> Result<IntersectivityVerdict, PadicError> {
    if let Some(r) = integer_roots(h).and_then(|r| r.into_iter().next()) {
        return Ok(IntersectivityVerdict::CertifiedByIntegerRoot { r });
    }
    let primes = primes_up_to(prime_bound);
    let levels: Vec<u32> = primes
        .par_iter()
        .map(|&p| deepest_root_level(h, p, depth))
        .collect::<Result<_, _>>()?;
    let failure = primes
        .iter()
        .zip(&levels)
        .filter(|(_, &lvl)| lvl < depth)
        .map(|(&p, &lvl)| (num_traits::pow(BigInt::from(p), lvl as usize + 1), p, lvl + 1))
        .min();
    let Some((q, prime, exponent)) = failure else {
        return Ok(IntersectivityVerdict::NoObstructionFound { prime_bound, depth });
    };
    let witness = match q.to_u64().filter(|&q| q <= BRUTE_FORCE_LIMIT) {
        Some(qu) => {
            let found = (0..qu).any(|r| h.eval_mod(&BigInt::from(r), &q).is_zero());
            assert!(!found, "lifting missed a root modulo {q}");
            RefutationWitness {
                prime,
                exponent,
                residues_checked: qu,
                method: RefutationMethod::Exhaustive,
            }
        }
        None => RefutationWitness {
            prime,
            exponent,
            residues_checked: 0,
            method: RefutationMethod::Lifting,
        },
    };
    Ok(IntersectivityVerdict::Refuted { q, witness })
}
