use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::theta::{Neumaier, ThetaConfig, ThetaKernel};
use super::{Lattice, LatticeError, decode_f64};
use crate::hp::{Fixed, GUARD_BITS, HpReal, required_bits};
use crate::padic::{PadicError, RootSystem};
use crate::poly::IntPoly;

/// Terms per parallel block; fixed so sums do not depend on the thread count.
const BLOCK: usize = 4096;

/// Evaluates `Theta_L(1, v alpha)` for integers `v` of arbitrary size.
///
/// `alpha` is carried as the fixed-point coordinate vector `B^{-1} alpha`, so
/// `v alpha mod L` is obtained exactly by reducing each coordinate mod 1.
#[derive(Clone, Debug)]
pub struct FEvaluator<'a> {
    kernel: ThetaKernel<'a>,
    coords: Vec<Fixed>,
}

impl<'a> FEvaluator<'a> {
    /// `bits` fractional bits are kept for the coordinates of `alpha`.
    pub fn new(
        lattice: &'a Lattice,
        alpha: &[HpReal],
        bits: u32,
        cfg: &ThetaConfig,
    ) -> Result<Self, LatticeError> {
        let d = lattice.dim();
        if alpha.len() != d {
            return Err(LatticeError::DimensionMismatch {
                got: alpha.len(),
                want: d,
            });
        }
        let wide: Vec<Fixed> = alpha.iter().map(|a| a.fixed(bits + GUARD_BITS)).collect();
        let inv = lattice.inverse();
        let coords = (0..d)
            .map(|i| {
                let mut acc = BigInt::zero();
                for (j, a) in wide.iter().enumerate() {
                    let (m, e) = decode_f64(inv[(i, j)]);
                    let prod = a.mantissa() * m;
                    let shift = e as i64 - GUARD_BITS as i64;
                    acc += if shift >= 0 {
                        prod << shift as usize
                    } else {
                        prod >> (-shift) as usize
                    };
                }
                Fixed::new(acc, bits)
            })
            .collect();
        Ok(FEvaluator {
            kernel: ThetaKernel::new(lattice, 1.0, cfg)?,
            coords,
        })
    }

    /// An evaluator from precomputed basis coordinates of `alpha`.
    pub fn from_coords(
        lattice: &'a Lattice,
        coords: Vec<Fixed>,
        cfg: &ThetaConfig,
    ) -> Result<Self, LatticeError> {
        if coords.len() != lattice.dim() {
            return Err(LatticeError::DimensionMismatch {
                got: coords.len(),
                want: lattice.dim(),
            });
        }
        Ok(FEvaluator {
            kernel: ThetaKernel::new(lattice, 1.0, cfg)?,
            coords,
        })
    }

    /// The evaluator for `k alpha`.
    pub fn scaled(&self, k: &BigInt) -> Self {
        FEvaluator {
            kernel: self.kernel.clone(),
            coords: self
                .coords
                .iter()
                .map(|c| Fixed::new(c.mantissa() * k, c.bits()))
                .collect(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        self.kernel.lattice()
    }

    pub fn kernel(&self) -> &ThetaKernel<'a> {
        &self.kernel
    }

    /// Coordinates of `alpha` in the lattice basis.
    pub fn coords(&self) -> &[Fixed] {
        &self.coords
    }

    /// `Theta_L(1, v alpha)`.
    pub fn theta_at(&self, v: &BigInt) -> Result<f64, LatticeError> {
        let c: Vec<f64> = self
            .coords
            .iter()
            .map(|b| b.frac_of_product(v).centered())
            .collect();
        let x = self.lattice().basis() * nalgebra::DVector::from_vec(c);
        Ok(self.kernel.eval(x.as_slice())?.value)
    }

    /// `Theta_L(1, p(n) alpha)` for each `n`, in order.
    pub fn terms(&self, p: &IntPoly, ns: &[i64]) -> Result<Vec<f64>, LatticeError> {
        let blocks: Vec<Vec<f64>> = ns
            .par_chunks(BLOCK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&n| self.theta_at(&p.eval_i64(n)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(blocks.concat())
    }

    /// `sum_{n=1}^{N} Theta_L(1, p(n) alpha)`; block sums are compensated and
    /// combined in block order.
    pub fn sum(&self, p: &IntPoly, n_max: u64) -> Result<f64, LatticeError> {
        let n_blocks = (n_max as usize).div_ceil(BLOCK);
        let partials: Vec<f64> = (0..n_blocks)
            .into_par_iter()
            .map(|b| {
                let lo = (b * BLOCK) as u64 + 1;
                let hi = (((b + 1) * BLOCK) as u64).min(n_max);
                let mut s = Neumaier::default();
                for n in lo..=hi {
                    s.add(self.theta_at(&p.eval(&BigInt::from(n)))?);
                }
                Ok(s.value())
            })
            .collect::<Result<_, LatticeError>>()?;
        let mut total = Neumaier::default();
        for v in partials {
            total.add(v);
        }
        Ok(total.value())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FValue {
    pub value: f64,
    pub n: u64,
    pub precision_bits: u32,
    pub truncation_radius: f64,
    pub tail_bound: f64,
}

/// `F_{p,L,alpha}(N) = det(L) * E_{1<=n<=N} Theta_L(1, p(n) alpha)`.
pub fn f_avg(
    p: &IntPoly,
    lattice: &Lattice,
    alpha: &[HpReal],
    n_max: u64,
    cfg: &ThetaConfig,
) -> Result<FValue, LatticeError> {
    if n_max == 0 {
        return Err(LatticeError::BadParameter(0.0));
    }
    let bits = required_bits(p, n_max);
    let eval = FEvaluator::new(lattice, alpha, bits, cfg)?;
    let total = eval.sum(p, n_max)?;
    Ok(FValue {
        value: lattice.det() * total / n_max as f64,
        n: n_max,
        precision_bits: bits,
        truncation_radius: eval.kernel().radius(),
        tail_bound: eval.kernel().tail_bound(),
    })
}

/// `F(N)` against `(M/N) F(M)` with `M = floor(c N)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub n: u64,
    pub m: u64,
    pub f_n: f64,
    pub f_m: f64,
    /// `(M / N) F(M)`.
    pub bound: f64,
    pub holds: bool,
}

/// Contraction of `N`: `F(N) >= (floor(cN)/N) F(floor(cN))` for `c` in `(10/N, 1)`.
///
/// Both sides come from one running sum of nonnegative terms, so the
/// comparison `N F(N) >= M F(M)` is exact in floating point.
pub fn contraction_check(
    p: &IntPoly,
    lattice: &Lattice,
    alpha: &[HpReal],
    n_max: u64,
    c: f64,
    cfg: &ThetaConfig,
) -> Result<ContractionCheck, LatticeError> {
    if !(c > 10.0 / n_max as f64 && c < 1.0) {
        return Err(LatticeError::BadParameter(c));
    }
    let m = (c * n_max as f64).floor() as u64;
    let eval = FEvaluator::new(lattice, alpha, required_bits(p, n_max), cfg)?;
    let ns: Vec<i64> = (1..=n_max as i64).collect();
    let terms = eval.terms(p, &ns)?;
    let mut running = 0.0;
    let mut s_m = 0.0;
    for (i, t) in terms.iter().enumerate() {
        running += t;
        if i as u64 + 1 == m {
            s_m = running;
        }
    }
    let det = lattice.det();
    let f_n = det * running / n_max as f64;
    let f_m = det * s_m / m as f64;
    Ok(ContractionCheck {
        n: n_max,
        m,
        f_n,
        f_m,
        bound: m as f64 / n_max as f64 * f_m,
        holds: det * running >= det * s_m,
    })
}

/// The chain of steps behind dilation of `alpha`:
///
/// ```text
/// F_{h_q,L,alpha}(N) >= det/N * sum over n = s + q'n', 1 <= n' <= floor(N/q'), of Theta(h_q(n) alpha)
///                     = det/N * sum over the same n' of Theta(h_{qq'}(n') lambda(q') alpha)
///                     = (floor(N/q')/N) F_{h_{qq'},L,lambda(q') alpha}(floor(N/q'))
/// ```
///
/// where `s = (r_{qq'} - r_q) / q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationChain {
    pub q: u64,
    pub q_prime: u64,
    pub n: u64,
    /// `(r_{qq'} - r_q) / q`.
    pub offset: i64,
    pub full: f64,
    pub restricted: f64,
    pub rescaled: f64,
    /// `floor(N / q') / N`.
    pub factor: f64,
    pub f_dilated: f64,
    /// `full >= restricted` (exact: the restricted terms are a sub-sum).
    pub positivity_holds: bool,
    /// Restricted and rescaled terms agree bit for bit.
    pub identity_holds: bool,
    /// `restricted = factor * f_dilated` up to rounding.
    pub counting_holds: bool,
}

impl DilationChain {
    pub fn holds(&self) -> bool {
        self.positivity_holds && self.identity_holds && self.counting_holds
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DilationError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("q' = {q_prime} exceeds N/10 for N = {n}")]
    QPrimeTooLarge { q_prime: u64, n: u64 },
}

pub fn dilation_chain(
    roots: &RootSystem,
    q: u64,
    q_prime: u64,
    lattice: &Lattice,
    alpha: &[HpReal],
    n_max: u64,
    cfg: &ThetaConfig,
) -> Result<DilationChain, DilationError> {
    if q_prime == 0 || q_prime > n_max / 10 {
        return Err(DilationError::QPrimeTooLarge { q_prime, n: n_max });
    }
    let aux = roots.auxiliary(q)?;
    let aux_qq = roots.auxiliary(q * q_prime)?;
    let lambda_qp = roots.lambda(q_prime)?;
    let diff = &aux_qq.r_q - &aux.r_q;
    let qb = BigInt::from(q);
    assert!((&diff % &qb).is_zero(), "r_qq' must agree with r_q mod q");
    let offset: i64 = (diff / qb).try_into().expect("offset fits in i64");

    let eval = FEvaluator::new(lattice, alpha, required_bits(&aux.h_q, n_max), cfg)?;
    let dilated = eval.scaled(&lambda_qp);
    let count = n_max / q_prime;

    let restricted_ns: Vec<i64> = (1..=count as i64).map(|k| offset + q_prime as i64 * k).collect();
    assert!(
        restricted_ns.iter().all(|&n| n >= 1 && n <= n_max as i64),
        "restricted residue class must stay inside [1, N]"
    );
    let restricted_terms = eval.terms(&aux.h_q, &restricted_ns)?;
    let outer_ns: Vec<i64> = (1..=n_max as i64)
        .filter(|n| {
            let k = n - offset;
            k.rem_euclid(q_prime as i64) != 0 || !(1..=count as i64).contains(&(k / q_prime as i64))
        })
        .collect();
    let outer_terms = eval.terms(&aux.h_q, &outer_ns)?;
    let dilated_ns: Vec<i64> = (1..=count as i64).collect();
    let rescaled_terms = dilated.terms(&aux_qq.h_q, &dilated_ns)?;

    let s_restricted: f64 = restricted_terms.iter().sum();
    let s_full = outer_terms.iter().fold(s_restricted, |acc, t| acc + t);
    let s_rescaled: f64 = rescaled_terms.iter().sum();

    let det = lattice.det();
    let n_f = n_max as f64;
    let full = det * s_full / n_f;
    let restricted = det * s_restricted / n_f;
    let rescaled = det * s_rescaled / n_f;
    let factor = count as f64 / n_f;
    let f_dilated = det * s_rescaled / count as f64;
    Ok(DilationChain {
        q,
        q_prime,
        n: n_max,
        offset,
        full,
        restricted,
        rescaled,
        factor,
        f_dilated,
        positivity_holds: s_full >= s_restricted,
        identity_holds: restricted_terms == rescaled_terms,
        counting_holds: (restricted - factor * f_dilated).abs() <= 1e-12 * restricted.abs(),
    })
}

/// `F_{h,L,alpha}(N)` against `F_{h,(1+eps)L,(1+eps)alpha~}(N)` for a
/// perturbation with `|alpha - alpha~| < eps / max_{n<=N} |h(n)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    pub eps: f64,
    /// The admissible perturbation size `eps / max |h(n)|`.
    pub radius: f64,
    pub f: f64,
    pub f_perturbed: f64,
    pub ratio: f64,
}

impl StabilityCheck {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.f >= tolerance * self.f_perturbed
    }
}

/// `direction` has entries in `[-1, 1]`; `alpha~ = alpha + 0.99 * radius * direction`.
///
/// The basis coordinates of `(1+eps) alpha~` in `(1+eps) L` equal those of
/// `alpha~` in `L`, so only the kernel changes between the two sides.
pub fn stability_check(
    p: &IntPoly,
    lattice: &Lattice,
    alpha: &[HpReal],
    direction: &[f64],
    eps: f64,
    n_max: u64,
    cfg: &ThetaConfig,
) -> Result<StabilityCheck, LatticeError> {
    if !(eps > 0.0 && eps < 1.0) || n_max == 0 {
        return Err(LatticeError::BadParameter(eps));
    }
    if direction.len() != lattice.dim() || direction.iter().any(|v| v.abs() > 1.0) {
        return Err(LatticeError::DimensionMismatch {
            got: direction.len(),
            want: lattice.dim(),
        });
    }
    let height = (1..=n_max)
        .map(|n| crate::hp::ldexp_big(&p.eval(&BigInt::from(n)), 0).abs())
        .fold(1.0f64, f64::max);
    let radius = eps / height;
    let bits = required_bits(p, n_max);
    let eval = FEvaluator::new(lattice, alpha, bits, cfg)?;
    let shift = lattice.inverse()
        * nalgebra::DVector::from_iterator(direction.len(), direction.iter().map(|v| 0.99 * radius * v));
    let coords = eval
        .coords()
        .iter()
        .zip(shift.iter())
        .map(|(c, &s)| {
            let (m, e) = decode_f64(s);
            let e = e as i64 + bits as i64;
            let delta = if e >= 0 {
                BigInt::from(m) << e as usize
            } else {
                BigInt::from(m) >> (-e) as usize
            };
            Fixed::new(c.mantissa() + delta, bits)
        })
        .collect();
    let dilated = lattice.scaled(1.0 + eps)?;
    let perturbed = FEvaluator::from_coords(&dilated, coords, cfg)?;
    let f = lattice.det() * eval.sum(p, n_max)? / n_max as f64;
    let f_perturbed = dilated.det() * perturbed.sum(p, n_max)? / n_max as f64;
    Ok(StabilityCheck {
        eps,
        radius,
        f,
        f_perturbed,
        ratio: f / f_perturbed,
    })
}
