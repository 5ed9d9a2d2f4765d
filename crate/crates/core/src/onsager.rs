//! Quantities behind the even-symmetry bound for the spherical Onsager
//! vortex equation: the pulled-back weight, its Laplacian, the positivity
//! radius and the half-disk curvature chain.
//!
//! Everything is expressed through `b = beta / (8 pi)` in `(1, 2]` and the
//! drift strength `gamma >= 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::report::{Contract, DeficitReport};

/// Smallest accepted `b - 1`.
pub const B_MARGIN: f64 = 1e-9 / (8.0 * PI);

const CHAIN_QUAD_TOL: f64 = 1e-12;

/// Relative tolerance of the quadrature chain against the closed form.
pub const CHAIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsagerParams {
    b: f64,
    gamma: f64,
}

fn check_b(b: f64) -> Result<()> {
    if b > 1.0 + B_MARGIN && b <= 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("beta / 8 pi = {b} must lie in (1, 2]")))
    }
}

impl OnsagerParams {
    pub fn new(beta_over_8pi: f64, gamma: f64) -> Result<Self> {
        check_b(beta_over_8pi)?;
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma = {gamma} must be nonnegative")));
        }
        Ok(Self { b: beta_over_8pi, gamma })
    }

    pub fn from_beta(beta: f64, gamma: f64) -> Result<Self> {
        Self::new(beta / (8.0 * PI), gamma)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn beta(&self) -> f64 {
        8.0 * PI * self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `gamma > b - 1`: the weight is not subharmonic near the origin.
    pub fn has_positive_curvature(&self) -> bool {
        self.gamma > self.b - 1.0
    }

    /// `gamma >= b - 1` with `gamma > 0`: the half-disk bound is defined,
    /// vanishing on the boundary `gamma = b - 1`.
    fn require_bound_defined(&self) -> Result<()> {
        if self.gamma >= self.b - 1.0 && self.gamma > 0.0 {
            Ok(())
        } else {
            Err(Error::SubharmonicRegime {
                gamma: self.gamma,
                threshold: self.b - 1.0,
            })
        }
    }
}

/// `8 (1 + r^2)^{-2 + 2b} e^{2 gamma / (1 + r^2)}`.
pub fn onsager_weight(r: f64, p: &OnsagerParams) -> f64 {
    let q = 1.0 + r * r;
    8.0 * q.powf(-2.0 + 2.0 * p.b) * (2.0 * p.gamma / q).exp()
}

/// `Delta H = 8 (b - 1) / (1 + r^2)^2 + 8 gamma (r^2 - 1) / (1 + r^2)^3`.
pub fn laplacian_h(r: f64, p: &OnsagerParams) -> f64 {
    let q = 1.0 + r * r;
    8.0 * (p.b - 1.0) / (q * q) + 8.0 * p.gamma * (r * r - 1.0) / (q * q * q)
}

/// Radius where `Delta H` changes sign: `r^2 = (gamma + 1 - b) / (gamma - 1 + b)`.
/// Takes raw `b`, so the endpoint `b = 1` is allowed.
pub fn positivity_radius_for(b: f64, gamma: f64) -> Result<f64> {
    if !(gamma > b - 1.0) {
        return Err(Error::SubharmonicRegime { gamma, threshold: b - 1.0 });
    }
    Ok(((gamma + 1.0 - b) / (gamma - 1.0 + b)).sqrt())
}

pub fn positivity_radius(p: &OnsagerParams) -> Result<f64> {
    positivity_radius_for(p.b, p.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaThreshold {
    /// `3 - b + sqrt(2 (3 - b)(2 - b))`.
    pub paper_bound: f64,
    /// Larger root of `gamma^2 + 2 gamma (b - 3) + (b - 1)^2`, `3 - b + 2 sqrt(2 - b)`.
    pub exact_root: f64,
}

pub fn gamma_threshold(beta_over_8pi: f64) -> Result<GammaThreshold> {
    check_b(beta_over_8pi)?;
    let b = beta_over_8pi;
    Ok(GammaThreshold {
        paper_bound: 3.0 - b + (2.0 * (3.0 - b) * (2.0 - b)).sqrt(),
        exact_root: 3.0 - b + 2.0 * (2.0 - b).sqrt(),
    })
}

/// `8 pi (gamma + 1 - b)^2 / (4 gamma)`: the curvature bound on the optimal half disk.
pub fn deficit_bound(p: &OnsagerParams) -> Result<f64> {
    p.require_bound_defined()?;
    let d = p.gamma + 1.0 - p.b;
    Ok(8.0 * PI * d * d / (4.0 * p.gamma))
}

/// `b + (gamma + 1 - b)^2 / (4 gamma)`; symmetry is forced when it is at most 2.
pub fn contradiction_value(p: &OnsagerParams) -> Result<f64> {
    p.require_bound_defined()?;
    let d = p.gamma + 1.0 - p.b;
    Ok(p.b + d * d / (4.0 * p.gamma))
}

/// `3 - b >= b - 1`, with equality only at `b = 2`.
pub fn remark_check(beta_over_8pi: f64) -> Result<bool> {
    check_b(beta_over_8pi)?;
    Ok(3.0 - beta_over_8pi >= beta_over_8pi - 1.0)
}

/// The curvature chain on `B_r`, `r` the positivity radius, computed three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureChain {
    pub radius: f64,
    /// `-2 int_{B_r^+} Delta H` by iterated Cartesian quadrature.
    pub half_disk: f64,
    /// `-int_{B_r} Delta H` by radial quadrature.
    pub full_disk: f64,
    /// `8 pi (1 - s)(-(b - 1 + gamma) + gamma (1 + s))` with `s = 1 / (1 + r^2)`.
    pub closed_form: f64,
    pub deficit_bound: f64,
}

pub fn curvature_chain(p: &OnsagerParams) -> Result<CurvatureChain> {
    let radius = positivity_radius(p)?;
    let full = integrate(|s| 2.0 * PI * s * laplacian_h(s, p), 0.0, radius, CHAIN_QUAD_TOL)?;
    let half = integrate(
        |x| {
            let top = (radius * radius - x * x).max(0.0).sqrt();
            integrate(|y| laplacian_h(x.hypot(y), p), 0.0, top, CHAIN_QUAD_TOL).unwrap_or(f64::NAN)
        },
        -radius,
        radius,
        1e-11,
    )?;
    if !half.is_finite() {
        return Err(Error::NoConvergence("inner half-disk quadrature failed".into()));
    }
    let s = 1.0 / (1.0 + radius * radius);
    Ok(CurvatureChain {
        radius,
        half_disk: -2.0 * half,
        full_disk: -full,
        closed_form: 8.0 * PI * (1.0 - s) * (-(p.b - 1.0 + p.gamma) + p.gamma * (1.0 + s)),
        deficit_bound: deficit_bound(p)?,
    })
}

/// Compares the closed-form deficit bound with the half-disk quadrature.
pub fn chain_report(p: &OnsagerParams) -> Result<DeficitReport> {
    let c = curvature_chain(p)?;
    let scale = c.deficit_bound.abs().max(c.half_disk.abs()).max(1e-300);
    let mut report = DeficitReport::new("onsager_curvature_chain", c.deficit_bound, c.half_disk, CHAIN_TOL * scale, Contract::Zero)
        .input("beta_over_8pi", p.b)
        .input("gamma", p.gamma)
        .input("radius", c.radius);
    for (name, value) in [("full_disk", c.full_disk), ("closed_form", c.closed_form)] {
        if (value - c.deficit_bound).abs() > CHAIN_TOL * scale {
            report.verdict = crate::report::Verdict::Fail;
            report = report.warn(format!("{name} = {value} disagrees with the bound {}", c.deficit_bound));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsagerRecord {
    pub beta_over_8pi: f64,
    pub gamma: f64,
    pub paper_bound: f64,
    pub exact_root: f64,
    pub positivity_radius: Option<f64>,
    pub deficit_bound: Option<f64>,
    pub contradiction_value: Option<f64>,
    /// Either the weight is subharmonic (`gamma < b - 1`) or the
    /// contradiction value is at most 2.
    pub symmetry_forced: bool,
    /// `gamma <= paper_bound`.
    pub within_sufficient_bound: bool,
}

pub fn onsager_record(p: &OnsagerParams) -> Result<OnsagerRecord> {
    let t = gamma_threshold(p.b)?;
    let positive = p.has_positive_curvature();
    let defined = p.require_bound_defined().is_ok();
    let contradiction = if defined { Some(contradiction_value(p)?) } else { None };
    Ok(OnsagerRecord {
        beta_over_8pi: p.b,
        gamma: p.gamma,
        paper_bound: t.paper_bound,
        exact_root: t.exact_root,
        positivity_radius: if positive { Some(positivity_radius(p)?) } else { None },
        deficit_bound: if defined { Some(deficit_bound(p)?) } else { None },
        contradiction_value: contradiction,
        symmetry_forced: contradiction.map_or(true, |c| c <= 2.0),
        within_sufficient_bound: p.gamma <= t.paper_bound,
    })
}
