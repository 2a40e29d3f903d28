use serde::{Deserialize, Serialize};

use super::{Lattice, LatticeError};

/// Truncation settings for theta sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig {
    /// Upper bound on the Gaussian mass left out of a truncated sum.
    pub tol: f64,
    /// Enumeration nodes allowed per sum before giving up.
    pub point_budget: usize,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig {
            tol: 1e-13,
            point_budget: 5_000_000,
        }
    }
}

/// A truncated theta sum with its truncation diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub value: f64,
    pub truncation_radius: f64,
    /// Rigorous bound on the mass of the omitted lattice points.
    pub tail_bound: f64,
    pub points: usize,
}

/// Compensated (Neumaier) summation.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Bound on `sum_{|y| > radius} exp(-pi t |y|^2)` over the points `y` of a
/// translated lattice whose shortest vector has length `2 mu`.
///
/// Balls of radius `mu` around distinct points are disjoint, so at most
/// `((r + mu) / mu)^d` points lie within distance `r` of any center. The tail
/// is split into shells of width `w` and each shell charged that count at its
/// inner radius.
fn tail_bound(radius: f64, t: f64, d: usize, mu: f64) -> f64 {
    let w = 0.25 / t.sqrt();
    let mut total = 0.0;
    for j in 0..1_000_000u32 {
        let inner = radius + j as f64 * w;
        let outer = inner + w;
        let count = ((outer + mu) / mu).powi(d as i32);
        let term = count * (-std::f64::consts::PI * t * inner * inner).exp();
        total += term;
        if term < total * 1e-17 || term == 0.0 {
            break;
        }
    }
    total
}

fn choose_radius(t: f64, d: usize, mu: f64, tol: f64) -> (f64, f64) {
    let step = 0.02 / t.sqrt();
    let mut radius = step;
    loop {
        let tail = tail_bound(radius, t, d, mu);
        if tail < tol || radius > 1e6 {
            return (radius, tail);
        }
        radius += step;
    }
}

/// Theta sums `sum_m exp(-pi t |x - m|^2)` over one lattice at one `t`.
/// The truncation radius depends only on the lattice and `t`, so it is
/// computed once and reused for every `x`.
#[derive(Clone, Debug)]
pub struct ThetaKernel<'a> {
    lattice: &'a Lattice,
    t: f64,
    radius: f64,
    tail_bound: f64,
    budget: usize,
}

impl<'a> ThetaKernel<'a> {
    pub fn new(lattice: &'a Lattice, t: f64, cfg: &ThetaConfig) -> Result<Self, LatticeError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LatticeError::BadParameter(t));
        }
        let mu = lattice.min_norm() / 2.0;
        let (radius, tail_bound) = choose_radius(t, lattice.dim(), mu, cfg.tol);
        Ok(ThetaKernel {
            lattice,
            t,
            radius,
            tail_bound,
            budget: cfg.point_budget,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn lattice(&self) -> &Lattice {
        self.lattice
    }

    /// `Theta_L(t, x)`.
    pub fn eval(&self, x: &[f64]) -> Result<ThetaValue, LatticeError> {
        let reduced = self.lattice.reduce(x)?;
        let mut sum = Neumaier::default();
        let t = self.t;
        let points = self.lattice.enumerate_ball(
            reduced.as_slice(),
            self.radius,
            self.budget,
            |_, d2| sum.add((-std::f64::consts::PI * t * d2).exp()),
        )?;
        Ok(ThetaValue {
            value: sum.value(),
            truncation_radius: self.radius,
            tail_bound: self.tail_bound,
            points,
        })
    }
}

/// `Theta_L(t, x) = sum_{m in L} exp(-pi t |x - m|^2)`.
pub fn theta(
    lattice: &Lattice,
    t: f64,
    x: &[f64],
    cfg: &ThetaConfig,
) -> Result<ThetaValue, LatticeError> {
    ThetaKernel::new(lattice, t, cfg)?.eval(x)
}

/// The theta sum truncated at an explicit radius (no tail control).
pub fn theta_truncated(
    lattice: &Lattice,
    t: f64,
    x: &[f64],
    radius: f64,
    budget: usize,
) -> Result<f64, LatticeError> {
    let reduced = lattice.reduce(x)?;
    let mut sum = Neumaier::default();
    lattice.enumerate_ball(reduced.as_slice(), radius, budget, |_, d2| {
        sum.add((-std::f64::consts::PI * t * d2).exp())
    })?;
    Ok(sum.value())
}

/// `A_L` computed both as `Theta_{L*}(1, 0)` and as `det(L) Theta_L(1, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AConst {
    pub value: f64,
    pub dual_route: f64,
    pub primal_route: f64,
    pub rel_gap: f64,
}

/// Relative disagreement tolerated between the two routes to `A_L`.
pub const A_CONST_REL_TOL: f64 = 1e-9;

pub fn a_const(lattice: &Lattice, cfg: &ThetaConfig) -> Result<AConst, LatticeError> {
    let dual = lattice.dual()?;
    let origin = vec![0.0; lattice.dim()];
    let dual_route = theta(&dual, 1.0, &origin, cfg)?.value;
    let primal_route = lattice.det() * theta(lattice, 1.0, &origin, cfg)?.value;
    let rel_gap = (dual_route - primal_route).abs() / dual_route.abs().max(primal_route.abs());
    if !(rel_gap <= A_CONST_REL_TOL) {
        return Err(LatticeError::PoissonMismatch {
            dual: dual_route,
            primal: primal_route,
        });
    }
    Ok(AConst {
        value: dual_route,
        dual_route,
        primal_route,
        rel_gap,
    })
}

/// Both sides of the Poisson summation identity
/// `Theta_L(t, x) = t^{-d/2} / det(L) * sum_{xi in L*} exp(-pi |xi|^2 / t) e(xi . x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Imaginary part of the dual-side sum; zero up to rounding.
    pub rhs_imag: f64,
    pub gap: f64,
}

pub fn poisson_check(
    lattice: &Lattice,
    t: f64,
    x: &[f64],
    cfg: &ThetaConfig,
) -> Result<PoissonCheck, LatticeError> {
    let lhs = theta(lattice, t, x, cfg)?.value;
    let dual = lattice.dual()?;
    let kernel = ThetaKernel::new(&dual, 1.0 / t, cfg)?;
    let reduced = lattice.reduce(x)?;
    // xi . x = k . (B^{-1} x) for xi = (B^{-1})^T k
    let coords = lattice.inverse() * reduced;
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    let origin = vec![0.0; lattice.dim()];
    dual.enumerate_ball(&origin, kernel.radius(), cfg.point_budget, |k, d2| {
        let weight = (-std::f64::consts::PI * d2 / t).exp();
        let phase: f64 = k.iter().zip(coords.iter()).map(|(&ki, &c)| ki as f64 * c).sum();
        let (s, c) = (std::f64::consts::TAU * phase).sin_cos();
        re.add(weight * c);
        im.add(weight * s);
    })?;
    let norm = t.powf(-(lattice.dim() as f64) / 2.0) / lattice.det();
    let rhs = norm * re.value();
    let rhs_imag = norm * im.value();
    Ok(PoissonCheck {
        lhs,
        rhs,
        rhs_imag,
        gap: (lhs - rhs).abs(),
    })
}
