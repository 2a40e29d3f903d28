//! Full-rank real lattices, Gaussian theta sums over them, and the averaged
//! quantity `F_{h,L,alpha}(N)`.
//!
//! Lattices are given by a basis whose columns are the generators. The dual
//! basis is the inverse transpose. Lattice points inside a ball are listed by
//! Fincke-Pohst enumeration on the QR factor of the basis; no basis reduction
//! is performed, which is fine in the low dimensions used here.

mod alternative;
mod average;
mod theta;

pub(crate) use theta::Neumaier;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alternative::{
    AlternativeReport, AlternativeSearch, Dichotomy, DualWitness, alternative_check,
    exponent_budget_log2,
};
pub use average::{
    ContractionCheck, DilationChain, DilationError, FEvaluator, FValue, StabilityCheck,
    contraction_check, dilation_chain, f_avg, stability_check,
};
pub use theta::{
    AConst, PoissonCheck, ThetaConfig, ThetaKernel, ThetaValue, a_const, poisson_check, theta,
    theta_truncated,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("basis must be a nonempty square matrix, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("basis is numerically singular (normalized determinant {0:e})")]
    Singular(f64),
    #[error("point has dimension {got}, lattice has {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("enumeration exceeded the point budget of {0}")]
    TruncationOverflow(usize),
    #[error("A_L routes disagree: dual {dual} vs det*theta {primal}")]
    PoissonMismatch { dual: f64, primal: f64 },
    #[error("t must be positive and finite, got {0}")]
    BadParameter(f64),
    #[error("precondition q <= N^(1/K) fails for q = {q}, N = {n}, K = 2^{k_log2}")]
    ModulusTooLarge { q: u64, n: u64, k_log2: u64 },
}

/// Smallest normalized determinant `|det| / prod |b_i|` accepted as nonsingular.
const MIN_HADAMARD_RATIO: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Lattice {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
    r_factor: DMatrix<f64>,
    q_factor: DMatrix<f64>,
    det: f64,
    min_norm: f64,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
    }
}

impl Lattice {
    /// Lattice generated by the columns of `basis`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self, LatticeError> {
        let (rows, cols) = basis.shape();
        if rows == 0 || rows != cols {
            return Err(LatticeError::Shape { rows, cols });
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::Singular(f64::NAN));
        }
        let det = basis.determinant().abs();
        let col_prod: f64 = basis.column_iter().map(|c| c.norm()).product();
        let ratio = det / col_prod;
        if !(ratio > MIN_HADAMARD_RATIO) {
            return Err(LatticeError::Singular(ratio));
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or(LatticeError::Singular(ratio))?;
        let qr = basis.clone().qr();
        let mut lattice = Lattice {
            q_factor: qr.q(),
            r_factor: qr.r(),
            basis,
            inverse,
            det,
            min_norm: 0.0,
        };
        lattice.min_norm = lattice.shortest_vector_norm()?;
        Ok(lattice)
    }

    /// `R Z^d`.
    pub fn scaled_integer(r: f64, d: usize) -> Result<Self, LatticeError> {
        Self::new(DMatrix::from_diagonal_element(d, d, r))
    }

    /// Basis given row-major, as in the `{dim, basis}` JSON form.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self, LatticeError> {
        if entries.len() != dim * dim {
            return Err(LatticeError::Shape {
                rows: dim,
                cols: entries.len().checked_div(dim).unwrap_or(0),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Dual basis, `(B^{-1})^T`; its columns generate the dual lattice.
    pub fn dual_basis(&self) -> DMatrix<f64> {
        self.inverse.transpose()
    }

    /// `B^{-1}`: maps a point to its coordinates in the basis.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Length of a shortest nonzero lattice vector.
    pub fn min_norm(&self) -> f64 {
        self.min_norm
    }

    pub fn dual(&self) -> Result<Lattice, LatticeError> {
        Lattice::new(self.dual_basis())
    }

    /// `c L`.
    pub fn scaled(&self, c: f64) -> Result<Lattice, LatticeError> {
        Lattice::new(&self.basis * c)
    }

    pub fn point(&self, coords: &[i64]) -> DVector<f64> {
        let k = DVector::from_iterator(coords.len(), coords.iter().map(|&c| c as f64));
        &self.basis * k
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), LatticeError> {
        if x.len() != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                got: x.len(),
                want: self.dim(),
            });
        }
        Ok(())
    }

    /// `x - B round(B^{-1} x)`: a representative of `x mod L` near the origin.
    pub fn reduce(&self, x: &[f64]) -> Result<DVector<f64>, LatticeError> {
        self.check_dim(x)?;
        let x = DVector::from_column_slice(x);
        let coords = (&self.inverse * &x).map(f64::round);
        Ok(x - &self.basis * coords)
    }

    /// Visits every lattice point `B k` with `|B k - center| <= radius`,
    /// passing the integer coordinates `k` and the squared distance.
    pub fn enumerate_ball<F>(
        &self,
        center: &[f64],
        radius: f64,
        budget: usize,
        mut visit: F,
    ) -> Result<usize, LatticeError>
    where
        F: FnMut(&[i64], f64),
    {
        self.check_dim(center)?;
        let y = self.q_factor.transpose() * DVector::from_column_slice(center);
        let d = self.dim();
        let mut e = Enumerator {
            r: &self.r_factor,
            y: y.as_slice(),
            radius2: radius * radius,
            budget,
            visited: 0,
            k: vec![0; d],
        };
        e.descend(d - 1, 0.0, &mut visit)?;
        Ok(e.visited)
    }

    fn shortest_vector_norm(&self) -> Result<f64, LatticeError> {
        let bound = self
            .basis
            .column_iter()
            .map(|c| c.norm())
            .fold(f64::INFINITY, f64::min);
        let mut best = bound * bound;
        let origin = vec![0.0; self.dim()];
        self.enumerate_ball(&origin, bound * (1.0 + 1e-9), 50_000_000, |k, d2| {
            if k.iter().any(|&c| c != 0) && d2 < best {
                best = d2;
            }
        })?;
        Ok(best.sqrt())
    }
}

struct Enumerator<'a> {
    r: &'a DMatrix<f64>,
    y: &'a [f64],
    radius2: f64,
    budget: usize,
    visited: usize,
    k: Vec<i64>,
}

impl Enumerator<'_> {
    fn descend<F: FnMut(&[i64], f64)>(
        &mut self,
        level: usize,
        partial: f64,
        visit: &mut F,
    ) -> Result<(), LatticeError> {
        let rii = self.r[(level, level)];
        let mut shift = self.y[level];
        for j in level + 1..self.k.len() {
            shift -= self.r[(level, j)] * self.k[j] as f64;
        }
        let center = shift / rii;
        let rem = self.radius2 - partial;
        if rem < 0.0 {
            return Ok(());
        }
        let half = rem.sqrt() / rii.abs();
        let lo = (center - half).ceil() as i64;
        let hi = (center + half).floor() as i64;
        for ki in lo..=hi {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(LatticeError::TruncationOverflow(self.budget));
            }
            let diff = rii * (ki as f64 - center);
            let total = partial + diff * diff;
            if total > self.radius2 {
                continue;
            }
            self.k[level] = ki;
            if level == 0 {
                visit(&self.k, total);
            } else {
                self.descend(level - 1, total, visit)?;
            }
        }
        self.k[level] = 0;
        Ok(())
    }
}

/// `{dim, basis}` with the basis row-major.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeJson {
    dim: usize,
    basis: Vec<f64>,
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let d = self.dim();
        let basis = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.basis[(i, j)])
            .collect();
        LatticeJson { dim: d, basis }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = LatticeJson::deserialize(d)?;
        Lattice::from_row_major(j.dim, &j.basis).map_err(serde::de::Error::custom)
    }
}

/// Splits a finite `f64` into `(mantissa, exponent)` with `x = mantissa * 2^exponent`.
pub(crate) fn decode_f64(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & 0x000f_ffff_ffff_ffff;
    let (mant, exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | 0x0010_0000_0000_0000, exp_bits - 1075)
    };
    (sign * mant as i64, exp)
}
