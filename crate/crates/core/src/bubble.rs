//! Closed forms for the radial bubbles
//!
//! `U(r) = 2 ln( lambda (1 - alpha) / (1 + lambda^2 r^k / 8) )`, `k = 2(1 - alpha)`,
//!
//! which solve `U'' + U'/r + r^{-2 alpha} e^U = 0` on the punctured plane.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics;
use crate::quadrature::WeightedRadialDensity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    lambda: f64,
    alpha: f64,
}

impl BubbleParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda = {lambda} must be positive")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha = {alpha} is outside [0, 1)")));
        }
        Ok(Self { lambda, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        2.0 * (1.0 - self.alpha)
    }

    /// Total mass `8 pi (1 - alpha)` over the plane.
    pub fn total_mass(&self) -> f64 {
        total_mass(self.alpha)
    }

    /// The measure `|x|^{-2 alpha} e^{U} dx` as a quadrature density.
    pub fn density(&self) -> WeightedRadialDensity {
        let p = *self;
        WeightedRadialDensity::new(self.alpha, move |r| eval_bubble(&p, r).exp())
            .expect("alpha validated at construction")
    }
}

pub fn total_mass(alpha: f64) -> f64 {
    8.0 * PI * (1.0 - alpha)
}

fn scaled_radius(p: &BubbleParams, r: f64) -> f64 {
    p.lambda * p.lambda * r.powf(p.k()) / 8.0
}

pub fn eval_bubble(p: &BubbleParams, r: f64) -> f64 {
    2.0 * (p.lambda * (1.0 - p.alpha)).ln() - 2.0 * scaled_radius(p, r).ln_1p()
}

/// `U'(r)` for `r > 0`.
pub fn bubble_derivative(p: &BubbleParams, r: f64) -> f64 {
    let g = scaled_radius(p, r);
    -2.0 * p.k() * g / (r * (1.0 + g))
}

/// `U''(r)` for `r > 0`.
pub fn bubble_second_derivative(p: &BubbleParams, r: f64) -> f64 {
    let k = p.k();
    let g = scaled_radius(p, r);
    -2.0 * k * g * ((k - 1.0) - g) / (r * r * (1.0 + g) * (1.0 + g))
}

/// Weighted mass of `B_R`; `R = f64::INFINITY` gives the total mass.
pub fn bubble_mass(p: &BubbleParams, r: f64) -> f64 {
    if r.is_infinite() {
        return p.total_mass();
    }
    let x = p.lambda * p.lambda * r.powf(p.k());
    if x.is_infinite() {
        return p.total_mass();
    }
    p.total_mass() * x / (8.0 + x)
}

/// Weighted mass of `|x| > R`.
pub fn bubble_exterior_mass(p: &BubbleParams, r: f64) -> f64 {
    let x = p.lambda * p.lambda * r.powf(p.k());
    p.total_mass() * 8.0 / (8.0 + x)
}

/// The scale whose bubble encloses mass `m` in `B_R`; needs `0 < m < 8 pi (1 - alpha)`.
pub fn lambda_for_mass(m: f64, alpha: f64, r: f64) -> Result<f64> {
    let total = total_mass(alpha);
    if !(m > 0.0 && m < total) {
        return Err(Error::RhoOutOfRange { rho: m, limit: total });
    }
    let x = 8.0 * m / (total - m);
    Ok((x / r.powf(2.0 * (1.0 - alpha))).sqrt())
}

/// Companion scale `8 / (R^k lambda1)` with the same boundary value at `R`.
pub fn pair_lambda(lambda1: f64, alpha: f64, r: f64) -> f64 {
    8.0 / (r.powf(2.0 * (1.0 - alpha)) * lambda1)
}

/// `int_{|x| = R} (|x|^{-2 alpha} e^U)^{1/2} d sigma`.
pub fn boundary_root_integral(p: &BubbleParams, r: f64) -> f64 {
    2.0 * PI * r.powf(1.0 - p.alpha) * p.lambda * (1.0 - p.alpha) / (1.0 + scaled_radius(p, r))
}

/// Both scales whose bubbles take the value `value` at `R`, smaller first.
/// `None` when the value exceeds the maximum `ln(2 (1 - alpha)^2 / R^k)`.
pub fn lambdas_through(value: f64, alpha: f64, r: f64) -> Option<(f64, f64)> {
    // e^{v/2} (1 + s lambda^2 / 8) = lambda (1 - alpha), s = R^k.
    let c = (0.5 * value).exp();
    let s = r.powf(2.0 * (1.0 - alpha));
    let a = s * c / 8.0;
    let b = 1.0 - alpha;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = 0.5 * (b + disc.sqrt());
    let (l1, l2) = (c / q, q / a);
    Some((l1.min(l2), l1.max(l2)))
}

/// Largest pointwise PDE residual over `grid`, from the analytic derivatives
/// and normalized by the local size `|U''| + |U'/r| + |r^{-2 alpha} e^U|`.
pub fn bubble_residual(p: &BubbleParams, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&r| {
            let u1 = bubble_derivative(p, r);
            let u2 = bubble_second_derivative(p, r);
            let src = r.powf(-2.0 * p.alpha) * eval_bubble(p, r).exp();
            let scale = u2.abs() + (u1 / r).abs() + src.abs();
            (u2 + u1 / r + src).abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Finite-difference residual on `grid`: five-point second differences in
/// `t = ln r` of the scaled equation `U_tt + r^k e^U = 0`.
pub fn bubble_residual_fd(p: &BubbleParams, grid: &[f64]) -> f64 {
    let t: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
    let u: Vec<f64> = grid.iter().map(|&r| eval_bubble(p, r)).collect();
    let utt = numerics::second_derivative(&t, &u);
    grid.iter()
        .zip(u.iter().zip(&utt))
        .map(|(&r, (&ui, &d2))| (d2 + r.powf(p.k()) * ui.exp()).abs())
        .fold(0.0, f64::max)
}
