use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::average::{FEvaluator, FValue};
use super::theta::ThetaConfig;
use super::{Lattice, LatticeError};
use crate::hp::{Fixed, HpReal, required_bits};
use crate::poly::IntPoly;

/// Dual vectors visited before giving up.
const DUAL_BUDGET: usize = 2_000_000;

/// `log2 K` for `K = 2^{10k}`.
pub fn exponent_budget_log2(degree: usize) -> u64 {
    10 * degree as u64
}

/// A primitive dual vector `xi` and a multiplier `q'` with `||q' xi.alpha||` small.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualWitness {
    /// Coordinates of `xi` in the dual basis.
    pub coords: Vec<i64>,
    pub xi: Vec<f64>,
    pub xi_norm: f64,
    pub q_prime: u64,
    /// `||q' xi.alpha||`.
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Dichotomy {
    /// `F >= 1/2`.
    #[serde(rename = "case_i")]
    CaseI { f: f64 },
    /// `F < 1/2` and a pair meeting the norm tolerance.
    #[serde(rename = "case_ii")]
    CaseII { f: f64, witness: DualWitness },
    /// `F < 1/2` and no pair met the tolerance within the search region.
    Exhausted { f: f64, best: Option<DualWitness> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeReport {
    pub q: u64,
    pub n: u64,
    pub degree: usize,
    /// `log2 K`.
    pub k_log2: u64,
    pub f: FValue,
    pub dichotomy: Dichotomy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSearch {
    pub xi_radius: f64,
    pub qprime_max: u64,
    pub norm_tol: f64,
}

/// Checks the dichotomy for `F_{h_q,L,alpha}(N)`: either `F >= 1/2`, or some
/// primitive `xi` in the dual lattice with `|xi| <= xi_radius` and
/// `1 <= q' <= qprime_max` makes `||q' xi.alpha|| <= norm_tol`.
///
/// Requires `q <= N^{1/K}`. Ties among pairs go to smaller distance, then
/// shorter `xi`, then smaller `q'`.
#[allow(clippy::too_many_arguments)]
pub fn alternative_check(
    h_q: &IntPoly,
    lattice: &Lattice,
    alpha: &[HpReal],
    q: u64,
    n_max: u64,
    search: &AlternativeSearch,
    cfg: &ThetaConfig,
) -> Result<AlternativeReport, LatticeError> {
    let degree = h_q.degree().unwrap_or(0);
    let k_log2 = exponent_budget_log2(degree);
    if q == 0 || n_max == 0 || !within_budget(q, n_max, k_log2) {
        return Err(LatticeError::ModulusTooLarge {
            q,
            n: n_max,
            k_log2,
        });
    }
    if !(search.xi_radius > 0.0 && search.norm_tol >= 0.0) || search.qprime_max == 0 {
        return Err(LatticeError::BadParameter(search.xi_radius));
    }

    let f = super::f_avg(h_q, lattice, alpha, n_max, cfg)?;
    let dichotomy = if f.value >= 0.5 {
        Dichotomy::CaseI { f: f.value }
    } else {
        let best = best_dual_pair(lattice, alpha, search, h_q, n_max, cfg)?;
        match best {
            Some(w) if w.dist <= search.norm_tol => Dichotomy::CaseII { f: f.value, witness: w },
            best => Dichotomy::Exhausted { f: f.value, best },
        }
    };
    Ok(AlternativeReport {
        q,
        n: n_max,
        degree,
        k_log2,
        f,
        dichotomy,
    })
}

/// `q <= N^{1/K}`, i.e. `2^{k_log2} ln q <= ln N`.
fn within_budget(q: u64, n: u64, k_log2: u64) -> bool {
    if q == 1 {
        return true;
    }
    let lhs = (q as f64).ln() * 2f64.powi(k_log2.min(2000) as i32);
    lhs <= (n as f64).ln()
}

fn best_dual_pair(
    lattice: &Lattice,
    alpha: &[HpReal],
    search: &AlternativeSearch,
    h_q: &IntPoly,
    n_max: u64,
    cfg: &ThetaConfig,
) -> Result<Option<DualWitness>, LatticeError> {
    let dual = lattice.dual()?;
    let mut candidates: Vec<(Vec<i64>, f64)> = Vec::new();
    dual.enumerate_ball(&vec![0.0; lattice.dim()], search.xi_radius, DUAL_BUDGET, |k, d2| {
        if is_primitive_representative(k) {
            candidates.push((k.to_vec(), d2.sqrt()));
        }
    })?;

    // xi.alpha = k . (B^{-1} alpha); enough bits for both the F evaluation
    // height and the largest multiplier q' * |k|.
    let max_coord = candidates
        .iter()
        .flat_map(|(k, _)| k.iter().map(|v| v.unsigned_abs()))
        .max()
        .unwrap_or(1);
    let mult_bits = 64 - (search.qprime_max.saturating_mul(max_coord.max(1)) * lattice.dim() as u64).leading_zeros();
    let bits = required_bits(h_q, n_max).max(mult_bits + 64);
    let coords = FEvaluator::new(lattice, alpha, bits, cfg)?.coords().to_vec();

    let mut best: Option<(DualWitness, (f64, f64, u64))> = None;
    for (k, norm) in candidates {
        let dot: BigInt = k
            .iter()
            .zip(&coords)
            .map(|(&ki, c)| c.mantissa() * ki)
            .sum();
        for qp in 1..=search.qprime_max {
            let dist = Fixed::new(&dot * qp, bits).frac().dist();
            let key = (dist, norm, qp);
            if best.as_ref().is_none_or(|(_, b)| key < *b) {
                let xi = (dual.basis() * nalgebra::DVector::from_iterator(k.len(), k.iter().map(|&v| v as f64)))
                    .as_slice()
                    .to_vec();
                best = Some((
                    DualWitness {
                        coords: k.clone(),
                        xi,
                        xi_norm: norm,
                        q_prime: qp,
                        dist,
                    },
                    key,
                ));
            }
        }
    }
    Ok(best.map(|(w, _)| w))
}

/// Nonzero, gcd one, first nonzero coordinate positive.
fn is_primitive_representative(k: &[i64]) -> bool {
    let Some(first) = k.iter().find(|&&v| v != 0) else {
        return false;
    };
    *first > 0 && k.iter().fold(0i64, |g, &v| g.gcd(&v)) == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn search(xi_radius: f64, qprime_max: u64, norm_tol: f64) -> AlternativeSearch {
        AlternativeSearch {
            xi_radius,
            qprime_max,
            norm_tol,
        }
    }

    #[test]
    fn budget() {
        assert_eq!(exponent_budget_log2(2), 20);
        assert!(within_budget(1, 10, 50));
        assert!(!within_budget(2, 1_000_000, 10));
        assert!(within_budget(2, u64::MAX, 5));
        let z = Lattice::scaled_integer(1.0, 1).unwrap();
        let err = alternative_check(&IntPoly::x(), &z, &[HpReal::zero()], 2, 100, &search(1.0, 1, 0.1), &ThetaConfig::default());
        assert!(matches!(err, Err(LatticeError::ModulusTooLarge { k_log2: 10, .. })));
    }

    #[test]
    fn zero_alpha_is_case_one() {
        let l = Lattice::from_row_major(2, &[1.5, 0.2, 0.1, 1.0]).unwrap();
        let r = alternative_check(
            &IntPoly::parse("x^2+x").unwrap(),
            &l,
            &[HpReal::zero(), HpReal::zero()],
            1,
            50,
            &search(2.0, 10, 1e-3),
            &ThetaConfig::default(),
        )
        .unwrap();
        assert!(matches!(r.dichotomy, Dichotomy::CaseI { f } if f >= 1.0));
    }

    #[test]
    fn square_with_half_is_case_one() {
        let z = Lattice::scaled_integer(1.0, 1).unwrap();
        let r = alternative_check(
            &IntPoly::parse("x^2").unwrap(),
            &z,
            &[HpReal::ratio(1, 2)],
            1,
            100,
            &search(1.0, 10, 1e-3),
            &ThetaConfig::default(),
        )
        .unwrap();
        match r.dichotomy {
            Dichotomy::CaseI { f } => assert!((f - 1.000_006_974_684_7).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rational_alpha_on_sparse_lattice_is_case_two() {
        // L = 10Z, alpha = 5, h = 2x+1: h(n) alpha is an odd multiple of 5,
        // always at distance 5 from L, so F is tiny; xi = 1/10, q' = 2 is exact.
        let l = Lattice::scaled_integer(10.0, 1).unwrap();
        let r = alternative_check(
            &IntPoly::parse("2x+1").unwrap(),
            &l,
            &[HpReal::integer(5)],
            1,
            100,
            &search(0.15, 10, 1e-12),
            &ThetaConfig::default(),
        )
        .unwrap();
        match r.dichotomy {
            Dichotomy::CaseII { f, witness } => {
                assert!(f < 0.5);
                assert_eq!(witness.coords, vec![1]);
                assert_eq!(witness.q_prime, 2);
                assert!(witness.dist < 1e-15);
                assert!((witness.xi[0] - 0.1).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn golden_ratio_yields_fibonacci_denominator() {
        // L = 10Z, alpha = 10 phi: xi = 1/10 sees phi itself.
        let l = Lattice::scaled_integer(10.0, 1).unwrap();
        let alpha = [HpReal::phi().mul_int(&BigInt::from(10))];
        let r = alternative_check(&IntPoly::x(), &l, &alpha, 1, 1, &search(0.15, 100, 0.01), &ThetaConfig::default()).unwrap();
        match r.dichotomy {
            Dichotomy::CaseII { witness, .. } => {
                assert_eq!(witness.q_prime, 89);
                assert!((witness.dist - 0.005_025).abs() < 1e-5, "{}", witness.dist);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exhausted_reports_best() {
        let l = Lattice::scaled_integer(10.0, 1).unwrap();
        let alpha = [HpReal::phi().mul_int(&BigInt::from(10))];
        let r = alternative_check(&IntPoly::x(), &l, &alpha, 1, 1, &search(0.15, 5, 1e-9), &ThetaConfig::default()).unwrap();
        match r.dichotomy {
            Dichotomy::Exhausted { best: Some(w), .. } => assert_eq!(w.q_prime, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn primitive_representatives() {
        assert!(is_primitive_representative(&[1, 0]));
        assert!(is_primitive_representative(&[0, 1, -3]));
        assert!(!is_primitive_representative(&[-1, 0]));
        assert!(!is_primitive_representative(&[2, 4]));
        assert!(!is_primitive_representative(&[0, 0]));
    }
}
