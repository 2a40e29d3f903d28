//! Exhaustive recurrence searches `min_n max_j ||h_j(n) alpha_j||`, the
//! Gaussian-mass proximity test, and power-law scaling experiments.

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exp_sums::best_rational;
use crate::hp::{Fixed, GUARD_BITS, HpReal, dist_to_nearest_int, rational_multiple_dist, required_bits};
use crate::lattice::{Lattice, LatticeError, ThetaConfig, a_const, theta};
use crate::poly::IntPoly;

/// Candidates per parallel block.
const BLOCK: u64 = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecurrenceError {
    #[error("h vanishes at every n in [1, {0}]")]
    AllRootsInRange(u64),
    #[error("polynomial {0} has a nonzero constant term")]
    ConstantTermViolation(usize),
    #[error("{polys} polynomials but {alphas} alpha values")]
    DimensionMismatch { polys: usize, alphas: usize },
    #[error("N must be positive")]
    EmptyRange,
    #[error("N grid must be strictly increasing with at least 3 points")]
    BadGrid,
    #[error("fewer than two nonzero grid values to fit")]
    DegenerateFit,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceResult {
    pub n_star: u64,
    /// `||h_j(n*) alpha_j||` per coordinate.
    pub values: Vec<f64>,
    pub max_norm: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub nonzero_constraint: bool,
    pub precision_bits: u32,
}

/// One coordinate target `||h(n) alpha||`.
struct Target {
    poly: IntPoly,
    alpha: Repr,
}

enum Repr {
    Exact { num: BigInt, den: BigInt },
    /// Extra guard bits beyond the shared contract keep the rounded distance
    /// independent of `N`, so results for nested ranges compare exactly.
    Fixed(Fixed),
}

impl Target {
    fn new(poly: IntPoly, alpha: &HpReal, n_max: u64) -> Self {
        let alpha = match alpha.as_rational() {
            Some((num, den)) => Repr::Exact { num, den },
            None => Repr::Fixed(alpha.fixed(required_bits(&poly, n_max) + GUARD_BITS)),
        };
        Target { alpha, poly }
    }

    fn norm_at(&self, v: &BigInt) -> f64 {
        match &self.alpha {
            Repr::Exact { num, den } => rational_multiple_dist(v, num, den),
            Repr::Fixed(f) => f.frac_of_product(v).dist(),
        }
    }
}

/// Lexicographic minimum of `(score, n)` over `1..=n_max`, in parallel blocks.
fn lex_min<F>(n_max: u64, score: F) -> Option<(f64, u64)>
where
    F: Fn(u64) -> Option<f64> + Sync,
{
    let blocks = n_max.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .filter_map(|b| {
            let mut best: Option<(f64, u64)> = None;
            for n in b * BLOCK + 1..=((b + 1) * BLOCK).min(n_max) {
                if let Some(s) = score(n) {
                    if best.is_none_or(|(bs, _)| s < bs) {
                        best = Some((s, n));
                    }
                }
            }
            best
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
}

/// `min over 1 <= n <= N` of `max_j ||h(n) alpha_j||`, optionally over
/// `h(n) != 0` only. Ties go to the smallest `n`.
pub fn best_recurrence(
    h: &IntPoly,
    alpha: &[HpReal],
    n_max: u64,
    require_nonzero: bool,
) -> Result<RecurrenceResult, RecurrenceError> {
    if n_max == 0 {
        return Err(RecurrenceError::EmptyRange);
    }
    let targets: Vec<Target> = alpha.iter().map(|a| Target::new(h.clone(), a, n_max)).collect();
    let score = |n: u64| {
        let v = h.eval(&BigInt::from(n));
        if require_nonzero && v.is_zero() {
            return None;
        }
        Some(targets.iter().map(|t| t.norm_at(&v)).fold(0.0, f64::max))
    };
    let (max_norm, n_star) = lex_min(n_max, score).ok_or(RecurrenceError::AllRootsInRange(n_max))?;
    let v = h.eval(&BigInt::from(n_star));
    Ok(RecurrenceResult {
        n_star,
        values: targets.iter().map(|t| t.norm_at(&v)).collect(),
        max_norm,
        n: n_max,
        nonzero_constraint: require_nonzero,
        precision_bits: required_bits(h, n_max),
    })
}

/// Simultaneous approximation `min_n max_j ||n alpha_j||`.
pub fn kronecker_search(alpha: &[HpReal], n_max: u64) -> Result<RecurrenceResult, RecurrenceError> {
    best_recurrence(&IntPoly::x(), alpha, n_max, false)
}

/// `min_n max_j ||h_j(n) alpha_j||` for polynomials without constant term.
pub fn system_recurrence(
    polys: &[IntPoly],
    alpha: &[HpReal],
    n_max: u64,
) -> Result<RecurrenceResult, RecurrenceError> {
    if polys.len() != alpha.len() {
        return Err(RecurrenceError::DimensionMismatch {
            polys: polys.len(),
            alphas: alpha.len(),
        });
    }
    if let Some(j) = polys.iter().position(|p| !p.constant_term().is_zero()) {
        return Err(RecurrenceError::ConstantTermViolation(j));
    }
    if n_max == 0 {
        return Err(RecurrenceError::EmptyRange);
    }
    let targets: Vec<Target> = polys
        .iter()
        .zip(alpha)
        .map(|(p, a)| Target::new(p.clone(), a, n_max))
        .collect();
    let values_at = |n: u64| {
        let nb = BigInt::from(n);
        targets.iter().map(move |t| t.norm_at(&t.poly.eval(&nb)))
    };
    let (max_norm, n_star) = lex_min(n_max, |n| Some(values_at(n).fold(0.0, f64::max)))
        .expect("range is nonempty");
    Ok(RecurrenceResult {
        n_star,
        values: values_at(n_star).collect(),
        max_norm,
        n: n_max,
        nonzero_constraint: false,
        precision_bits: polys.iter().map(|p| required_bits(p, n_max)).max().unwrap_or(64),
    })
}

/// Straightforward sequential reference for [`best_recurrence`]: every
/// product `h(n) alpha_j` is expanded on its own.
pub fn naive_recurrence(h: &IntPoly, alpha: &[HpReal], n_max: u64, require_nonzero: bool) -> Option<(u64, f64)> {
    let mut best: Option<(u64, f64)> = None;
    for n in 1..=n_max {
        let v = h.eval(&BigInt::from(n));
        if require_nonzero && v.is_zero() {
            continue;
        }
        let m = alpha
            .iter()
            .map(|a| dist_to_nearest_int(&a.mul_int(&v)))
            .fold(0.0, f64::max);
        match best {
            Some((_, b)) if b <= m => {}
            _ => best = Some((n, m)),
        }
    }
    best
}

/// The proximity deduction: if `x` is farther than `sqrt(R)` from every point
/// of `R Z^d`, the Gaussian mass `sum_m e^{-pi |x-m|^2}` is at most
/// `e^{-pi R / 2} 2^{d/2} A / det`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassProximity {
    pub mass: f64,
    pub threshold: f64,
    /// The same bound with `e^{-pi R^2 / 2}`, which needs `dist > R`.
    pub quadratic_threshold: f64,
    pub dist: f64,
    pub consistent: bool,
}

/// `A_{RZ}` for the one-dimensional factor; `A_{RZ^d}` is its `d`-th power.
pub fn a_scaled_integer(r: f64, d: usize, cfg: &ThetaConfig) -> Result<f64, LatticeError> {
    Ok(a_const(&Lattice::scaled_integer(r, 1)?, cfg)?.value.powi(d as i32))
}

pub fn mass_proximity_check(x: &[f64], r: f64, cfg: &ThetaConfig) -> Result<MassProximity, LatticeError> {
    if !(r > 0.0) || x.is_empty() {
        return Err(LatticeError::BadParameter(r));
    }
    let d = x.len();
    let lattice = Lattice::scaled_integer(r, d)?;
    let a = a_scaled_integer(r, d, cfg)?;
    let scale = 2f64.powf(d as f64 / 2.0) * a / lattice.det();
    let threshold = (-std::f64::consts::PI * r / 2.0).exp() * scale;
    let quadratic_threshold = (-std::f64::consts::PI * r * r / 2.0).exp() * scale;
    // truncation only drops positive terms, so a computed mass never exceeds
    // the true one; the tolerance just has to resolve the threshold
    let fine = ThetaConfig {
        tol: cfg.tol.min(1e-6 * threshold),
        ..cfg.clone()
    };
    let mass = theta(&lattice, 1.0, x, &fine)?.value;
    let dist = x
        .iter()
        .map(|&v| {
            let off = v - r * (v / r).round();
            off * off
        })
        .sum::<f64>()
        .sqrt();
    Ok(MassProximity {
        mass,
        threshold,
        quadratic_threshold,
        dist,
        consistent: !(mass > threshold && dist > r.sqrt()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Kronecker,
    Polynomial,
    System,
}

/// Where the alpha vector comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    Fixed(Vec<HpReal>),
    /// `d` independent uniform values from `seed`.
    Random { d: usize, seed: u64 },
}

impl AlphaSpec {
    pub fn resolve(&self) -> Vec<HpReal> {
        match self {
            AlphaSpec::Fixed(v) => v.clone(),
            AlphaSpec::Random { d, seed } => (0..*d as u64).map(|j| HpReal::random(*seed, j)).collect(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            AlphaSpec::Random { seed, .. } => Some(*seed),
            AlphaSpec::Fixed(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub kind: ExperimentKind,
    /// Ignored for Kronecker; one polynomial for Polynomial; one per
    /// coordinate for System.
    #[serde(default)]
    pub polys: Vec<IntPoly>,
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub require_nonzero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub max_norm: f64,
    pub n_star: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub kind: ExperimentKind,
    pub grid: Vec<GridPoint>,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
    /// Root mean square of the fit residuals in log space.
    pub residual: f64,
    /// Grid sizes where an exact hit (`max_norm = 0`) was left out of the fit.
    pub excluded_zero: Vec<u64>,
    pub seed: Option<u64>,
    pub precision_bits: u32,
}

impl ScalingReport {
    pub const CSV_HEADER: &'static str = "N,max_norm,n_star";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for p in &self.grid {
            s.push_str(&format!("{},{:e},{}\n", p.n, p.max_norm, p.n_star));
        }
        s
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.grid.windows(2).all(|w| w[1].max_norm < w[0].max_norm)
    }

    pub fn non_increasing(&self) -> bool {
        self.grid.windows(2).all(|w| w[1].max_norm <= w[0].max_norm)
    }
}

/// Ordinary least squares `y = slope x + intercept`; returns the RMS residual too.
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Runs the search at every grid size and fits `log max_norm` against `log N`.
pub fn scaling_experiment(spec: &ScalingSpec, grid: &[u64]) -> Result<ScalingReport, RecurrenceError> {
    if grid.len() < 3 || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] == 0 {
        return Err(RecurrenceError::BadGrid);
    }
    let alpha = spec.alpha.resolve();
    let run = |n: u64| -> Result<RecurrenceResult, RecurrenceError> {
        match spec.kind {
            ExperimentKind::Kronecker => kronecker_search(&alpha, n),
            ExperimentKind::Polynomial => {
                let h = spec.polys.first().ok_or(RecurrenceError::DimensionMismatch {
                    polys: 0,
                    alphas: alpha.len(),
                })?;
                best_recurrence(h, &alpha, n, spec.require_nonzero)
            }
            ExperimentKind::System => system_recurrence(&spec.polys, &alpha, n),
        }
    };
    let mut points = Vec::with_capacity(grid.len());
    let mut precision_bits = 0;
    for &n in grid {
        let r = run(n)?;
        precision_bits = r.precision_bits;
        points.push(GridPoint {
            n,
            max_norm: r.max_norm,
            n_star: r.n_star,
        });
    }
    let (fit, zeros): (Vec<&GridPoint>, Vec<&GridPoint>) = points.iter().partition(|p| p.max_norm > 0.0);
    if fit.len() < 2 {
        return Err(RecurrenceError::DegenerateFit);
    }
    let xy: Vec<(f64, f64)> = fit.iter().map(|p| ((p.n as f64).ln(), p.max_norm.ln())).collect();
    let (fitted_slope, fitted_intercept, residual) = fit_line(&xy);
    Ok(ScalingReport {
        kind: spec.kind,
        excluded_zero: zeros.iter().map(|p| p.n).collect(),
        grid: points,
        fitted_slope,
        fitted_intercept,
        residual,
        seed: spec.alpha.seed(),
        precision_bits,
    })
}

/// For `d = 1` the Kronecker minimizer is the last convergent denominator.
pub fn kronecker_matches_best_rational(alpha: &HpReal, n_max: u64) -> Result<bool, RecurrenceError> {
    let k = kronecker_search(std::slice::from_ref(alpha), n_max)?;
    Ok(k.n_star == best_rational(alpha, n_max).q_prime)
}
