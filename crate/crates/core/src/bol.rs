//! Radial Alexandrov-Bol deficits and the lemmas built on them.
//!
//! A strictly decreasing radial `psi` is *admissible* on `B_R` when
//! `2 pi r |psi'(r)| <= M(r)` for `0 < r < R`, with `M(r)` the mass of
//! `|x|^{-2 alpha} e^psi` over `B_r`. Exterior profiles on `|x| > R` are
//! admissible when `2 pi r |psi'(r)| <= 8 pi (1 - alpha) - M_ext(r)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bubble::{self, BubbleParams};
use crate::error::{Error, Result};
use crate::numerics;
use crate::ode::{self, Tolerances};
use crate::profile::{geometric_grid, split_geometric_grid, RadialProfile};
use crate::quadrature::{
    annulus_integral, circle_root_integral, cumulative_mass_table, exterior_integral, WeightedRadialDensity,
};
use crate::report::{Contract, DeficitReport};

/// Relative tolerance for equality in deficit reports.
pub const EQUALITY_TOL: f64 = 1e-8;

/// Relative tolerance for admissibility margins.
pub const MARGIN_TOL: f64 = 1e-7;

/// Nodes per generated profile.
pub const GENERATOR_NODES: usize = 2000;

const QUAD_TOL: f64 = 1e-12;

/// A profile together with its recomputed admissibility certificate on `B_R`.
#[derive(Debug, Clone)]
pub struct AdmissibleProfile {
    profile: RadialProfile,
    alpha: f64,
    radius: f64,
    density: WeightedRadialDensity,
    masses: Vec<f64>,
    margins: Vec<f64>,
    tolerances: Vec<f64>,
}

impl AdmissibleProfile {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Certified nodes: the profile nodes inside `B_R`.
    pub fn radii(&self) -> &[f64] {
        &self.profile.nodes()[..self.margins.len()]
    }

    /// `M(r_i)` at the certified nodes.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `M(r_i) - 2 pi r_i |psi'(r_i)|`.
    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn tolerances(&self) -> &[f64] {
        &self.tolerances
    }

    pub fn is_admissible(&self) -> bool {
        self.margins.iter().zip(&self.tolerances).all(|(m, t)| *m >= -t)
    }

    /// Most negative margin relative to its tolerance, with its radius.
    pub fn worst_margin(&self) -> (f64, f64) {
        worst(&self.margins, &self.tolerances, self.radii())
    }

    /// Mass of `|x|^{-2 alpha} e^psi` over `B_R`.
    pub fn mass(&self) -> Result<f64> {
        let last = *self.radii().last().unwrap();
        let m = *self.masses.last().unwrap();
        if self.radius > last {
            Ok(m + annulus_integral(&self.density, last, self.radius, QUAD_TOL)?)
        } else {
            Ok(m)
        }
    }

    pub fn boundary_value(&self) -> f64 {
        self.profile.interpolant().eval(self.radius)
    }

    fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            let (worst_margin, radius) = self.worst_margin();
            Err(Error::NotAdmissible { worst_margin, radius })
        }
    }
}

fn worst(margins: &[f64], tolerances: &[f64], radii: &[f64]) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::NAN, f64::NAN);
    for ((&m, &t), &r) in margins.iter().zip(tolerances).zip(radii) {
        let score = m / t.max(f64::MIN_POSITIVE);
        if score < best.0 {
            best = (score, m, r);
        }
    }
    (best.1, best.2)
}

fn require_decreasing(psi: &RadialProfile, upto: usize, from: usize) -> Result<()> {
    if from == 0 {
        if let Some(c) = psi.center_value() {
            if psi.values()[0] >= c {
                return Err(Error::NotDecreasing {
                    index: 0,
                    radius: psi.nodes()[0],
                });
            }
        }
    }
    let v = psi.values();
    for i in from + 1..upto {
        if v[i] >= v[i - 1] {
            return Err(Error::NotDecreasing {
                index: i,
                radius: psi.nodes()[i],
            });
        }
    }
    Ok(())
}

/// Rounding floor of the flux `2 pi |r psi'|`: the weights of the stencils in
/// `ln r` sum to about `3 / h` in magnitude (`34 / h` for the seven-point edge
/// stencils), applied to values known to `eps |psi|`.
fn rounding_floors(psi: &RadialProfile) -> Vec<f64> {
    let n = psi.len();
    let r = psi.nodes();
    let v = psi.values();
    (0..n)
        .map(|i| {
            let edge = i < 2 || i + 2 >= n;
            let width = if edge { 7 } else { 5 }.min(n);
            let lo = i.saturating_sub(2).min(n - width);
            let hi = lo + width;
            let h = if n > 1 {
                (r[hi - 1] / r[lo]).ln() / (hi - lo - 1) as f64
            } else {
                1.0
            };
            let size = v[lo..hi].iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
            let weights = if edge { 34.0 } else { 3.0 };
            2.0 * PI * 16.0 * f64::EPSILON * size * weights / h
        })
        .collect()
}

/// Rounding floor plus the estimated truncation error of the flux.
fn error_floors(psi: &RadialProfile) -> Vec<f64> {
    let t: Vec<f64> = psi.nodes().iter().map(|r| r.ln()).collect();
    let truncation = numerics::derivative_truncation(&t, psi.values());
    rounding_floors(psi)
        .into_iter()
        .zip(truncation)
        .map(|(f, d)| f + 2.0 * PI * d)
        .collect()
}

/// Recomputes the admissibility margins of `psi` at its nodes in `(0, R]`.
/// Derivatives use five-point differences in `ln r`, seven-point at the ends.
pub fn check_differential_inequality(psi: &RadialProfile, alpha: f64, radius: f64) -> Result<AdmissibleProfile> {
    if !(radius >= psi.r_min() && radius <= psi.r_max() * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "R = {radius} is outside the sampled range [{}, {}]",
            psi.r_min(),
            psi.r_max()
        )));
    }
    let inside = psi.nodes().partition_point(|&r| r <= radius * (1.0 + 1e-12));
    require_decreasing(psi, inside, 0)?;
    let density = WeightedRadialDensity::exp_of_profile(psi, alpha)?;
    let table = cumulative_mass_table(&density, &psi.nodes()[..inside], QUAD_TOL)?;
    let slopes = psi.log_derivative();
    let floors = error_floors(psi);
    let mut margins = Vec::with_capacity(inside);
    let mut tolerances = Vec::with_capacity(inside);
    for ((&m, &s), &floor) in table.masses().iter().zip(&slopes).zip(&floors) {
        let flux = 2.0 * PI * s.abs();
        margins.push(m - flux);
        tolerances.push(MARGIN_TOL * m.max(flux) + floor);
    }
    Ok(AdmissibleProfile {
        profile: psi.clone(),
        alpha,
        radius,
        density,
        masses: table.masses().to_vec(),
        margins,
        tolerances,
    })
}

/// Interior deficit `(int_{dB_R} (|x|^{-2a} e^psi)^{1/2})^2 - M (8 pi (1-a) - M) / 2`,
/// nonnegative for admissible profiles and zero exactly on bubbles.
pub fn bol_deficit_interior(psi: &AdmissibleProfile) -> Result<DeficitReport> {
    psi.require_admissible()?;
    let r = psi.radius;
    let lhs = circle_root_integral(&psi.density, r)?.powi(2);
    let m = psi.mass()?;
    let rhs = 0.5 * m * (bubble::total_mass(psi.alpha) - m);
    Ok(DeficitReport::new("bol_deficit_interior", lhs, rhs, EQUALITY_TOL * lhs.max(rhs), Contract::NonNegative)
        .input("R", r)
        .input("mass", m)
        .input("nodes", psi.profile.len())
        .with_alpha(psi.alpha))
}

/// Exterior profile on `|x| >= R` with its recomputed certificate.
#[derive(Debug, Clone)]
pub struct ExteriorAdmissible {
    profile: RadialProfile,
    alpha: f64,
    radius: f64,
    density: WeightedRadialDensity,
    mass: f64,
    tail: f64,
    exterior_masses: Vec<f64>,
    margins: Vec<f64>,
    tolerances: Vec<f64>,
    first: usize,
}

impl ExteriorAdmissible {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Mass over `|x| > R`, tail estimate included.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Estimated mass beyond the last node.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn radii(&self) -> &[f64] {
        &self.profile.nodes()[self.first..]
    }

    pub fn exterior_masses(&self) -> &[f64] {
        &self.exterior_masses
    }

    /// `8 pi (1 - alpha) - M_ext(r_i) - 2 pi r_i |psi'(r_i)|`.
    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn is_admissible(&self) -> bool {
        self.margins.iter().zip(&self.tolerances).all(|(m, t)| *m >= -t)
    }

    pub fn worst_margin(&self) -> (f64, f64) {
        worst(&self.margins, &self.tolerances, self.radii())
    }

    pub fn boundary_value(&self) -> f64 {
        self.profile.interpolant().eval(self.radius)
    }
}

/// Certificate for an exterior profile sampled on `[R, r_max]`; the mass
/// beyond `r_max` is estimated from the local decay and added to every
/// tolerance.
pub fn check_exterior_inequality(psi: &RadialProfile, alpha: f64, radius: f64) -> Result<ExteriorAdmissible> {
    if !(radius > 0.0 && radius >= psi.r_min() * (1.0 - 1e-12) && radius < psi.r_max()) {
        return Err(Error::invalid(format!(
            "R = {radius} must lie in the sampled range [{}, {})",
            psi.r_min(),
            psi.r_max()
        )));
    }
    let first = psi.nodes().partition_point(|&r| r < radius * (1.0 - 1e-12));
    require_decreasing(psi, psi.len(), first)?;
    let density = WeightedRadialDensity::exp_of_profile(psi, alpha)?;
    let limit = bubble::total_mass(alpha);
    let ext = exterior_integral(&density, radius, psi.r_max(), QUAD_TOL)?;
    if ext.value >= limit {
        return Err(Error::MassTooLarge { mass: ext.value, limit });
    }
    let slopes = psi.log_derivative();
    let floors = error_floors(psi);
    let nodes = &psi.nodes()[first..];
    let mut inner = 0.0;
    let mut prev = radius;
    let mut exterior_masses = Vec::with_capacity(nodes.len());
    let mut margins = Vec::with_capacity(nodes.len());
    let mut tolerances = Vec::with_capacity(nodes.len());
    for (i, &r) in nodes.iter().enumerate() {
        if r > prev {
            inner += annulus_integral(&density, prev, r, QUAD_TOL)?;
            prev = r;
        }
        let m_ext = ext.value - inner;
        let room = limit - m_ext;
        let flux = 2.0 * PI * slopes[first + i].abs();
        exterior_masses.push(m_ext);
        margins.push(room - flux);
        tolerances.push(MARGIN_TOL * room.max(flux) + ext.tail + floors[first + i]);
    }
    Ok(ExteriorAdmissible {
        profile: psi.clone(),
        alpha,
        radius,
        density,
        mass: ext.value,
        tail: ext.tail,
        exterior_masses,
        margins,
        tolerances,
        first,
    })
}

/// Reversed deficit on `|x| > R`: nonpositive for admissible exterior
/// profiles, zero exactly on bubbles.
pub fn bol_deficit_exterior(psi: &RadialProfile, alpha: f64, radius: f64) -> Result<DeficitReport> {
    let ext = check_exterior_inequality(psi, alpha, radius)?;
    exterior_report(&ext)
}

pub fn exterior_report(ext: &ExteriorAdmissible) -> Result<DeficitReport> {
    if !ext.is_admissible() {
        let (worst_margin, radius) = ext.worst_margin();
        return Err(Error::NotAdmissible { worst_margin, radius });
    }
    let lhs = circle_root_integral(&ext.density, ext.radius)?.powi(2);
    let m = ext.mass;
    let limit = bubble::total_mass(ext.alpha);
    let rhs = 0.5 * m * (limit - m);
    let tol = EQUALITY_TOL * lhs.max(rhs) + ext.tail * limit;
    Ok(DeficitReport::new("bol_deficit_exterior", lhs, rhs, tol, Contract::NonPositive)
        .input("R", ext.radius)
        .input("exterior_mass", m)
        .input("tail", ext.tail)
        .with_alpha(ext.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassBranch {
    /// `M <= m_1`.
    Low,
    /// `M >= m_2`.
    High,
    /// `m_1 < M < m_2`: impossible for admissible profiles.
    Between,
}

/// Classifies the mass of an admissible `psi` over `B_R` against the masses
/// `m_1 < m_2` of the two bubbles through `psi(R)`. `boundary_tol` bounds
/// `|psi(R) - U_{lambda1}(R)|`.
pub fn mass_alternative(psi: &AdmissibleProfile, lambda1: f64, boundary_tol: f64) -> Result<MassBranch> {
    psi.require_admissible()?;
    let (alpha, r) = (psi.alpha, psi.radius);
    let p1 = BubbleParams::new(lambda1, alpha)?;
    let p2 = BubbleParams::new(bubble::pair_lambda(lambda1, alpha, r), alpha)?;
    let (u, v) = (bubble::eval_bubble(&p1, r), psi.boundary_value());
    if (u - v).abs() > boundary_tol {
        return Err(Error::BoundaryMismatch {
            profile: v,
            bubble: u,
            tolerance: boundary_tol,
        });
    }
    let (a, b) = (bubble::bubble_mass(&p1, r), bubble::bubble_mass(&p2, r));
    let (m1, m2) = (a.min(b), a.max(b));
    let m = psi.mass()?;
    Ok(if m <= m1 * (1.0 + EQUALITY_TOL) {
        MassBranch::Low
    } else if m >= m2 * (1.0 - EQUALITY_TOL) {
        MassBranch::High
    } else {
        MassBranch::Between
    })
}

/// Checks `M_ext(U_{lambda2}) <= M_ext(psi) <= M_ext(U_{lambda1})` for an
/// exterior profile through the common boundary value of both bubbles,
/// `lambda1 < lambda2`. Returns the (lower, upper) comparisons, each with a
/// nonnegative contract.
pub fn exterior_sandwich(psi: &RadialProfile, lambda1: f64, lambda2: f64, alpha: f64, radius: f64, boundary_tol: f64) -> Result<(DeficitReport, DeficitReport)> {
    let (l1, l2) = (lambda1.min(lambda2), lambda1.max(lambda2));
    let ext = check_exterior_inequality(psi, alpha, radius)?;
    if !ext.is_admissible() {
        let (worst_margin, radius) = ext.worst_margin();
        return Err(Error::NotAdmissible { worst_margin, radius });
    }
    let p1 = BubbleParams::new(l1, alpha)?;
    let p2 = BubbleParams::new(l2, alpha)?;
    let v = ext.boundary_value();
    for p in [&p1, &p2] {
        let u = bubble::eval_bubble(p, radius);
        if (u - v).abs() > boundary_tol {
            return Err(Error::BoundaryMismatch {
                profile: v,
                bubble: u,
                tolerance: boundary_tol,
            });
        }
    }
    let m = ext.mass;
    let lo = bubble::bubble_exterior_mass(&p2, radius);
    let hi = bubble::bubble_exterior_mass(&p1, radius);
    let tol = EQUALITY_TOL * hi + ext.tail;
    let lower = DeficitReport::new("exterior_sandwich_lower", m, lo, tol, Contract::NonNegative)
        .input("lambda2", l2)
        .input("R", radius)
        .with_alpha(alpha);
    let upper = DeficitReport::new("exterior_sandwich_upper", hi, m, tol, Contract::NonNegative)
        .input("lambda1", l1)
        .input("R", radius)
        .with_alpha(alpha);
    Ok((lower, upper))
}

/// For admissible `psi` with the same mass over `B_R` as `U_{lambda, alpha}`,
/// checks `psi(R) >= U_{lambda, alpha}(R)`. `mass_tol` is relative.
pub fn boundary_comparison(psi: &AdmissibleProfile, lambda: f64, mass_tol: f64) -> Result<DeficitReport> {
    psi.require_admissible()?;
    let p = BubbleParams::new(lambda, psi.alpha)?;
    let r = psi.radius;
    let mb = bubble::bubble_mass(&p, r);
    let m = psi.mass()?;
    if (m - mb).abs() > mass_tol * mb {
        return Err(Error::MassMismatch {
            profile: m,
            bubble: mb,
            tolerance: mass_tol * mb,
        });
    }
    let lhs = psi.boundary_value();
    let rhs = bubble::eval_bubble(&p, r);
    // A relative mass error e moves the matching boundary value by about e.
    let tol = (mass_tol + EQUALITY_TOL) * (1.0 + rhs.abs());
    Ok(DeficitReport::new("boundary_comparison", lhs, rhs, tol, Contract::NonNegative)
        .input("lambda", lambda)
        .input("R", r)
        .input("mass", m)
        .with_alpha(psi.alpha))
}

/// `mass1 + mass2 - 8 pi (1 - alpha(omega))`: nonnegative for ordered,
/// boundary-matched pairs, zero exactly on paired bubbles.
pub fn covering_deficit(mass1: f64, mass2: f64, alpha_omega: f64, rel_tol: f64) -> DeficitReport {
    let rhs = bubble::total_mass(alpha_omega);
    DeficitReport::new("covering_deficit", mass1 + mass2, rhs, rel_tol * rhs, Contract::NonNegative)
        .input("mass1", mass1)
        .input("mass2", mass2)
        .with_alpha(alpha_omega)
}

/// `rho - 8 pi (1 - alpha(Omega))`. Two distinct solutions with the same
/// total mass `rho` require a positive deficit, so a failing verdict
/// certifies that no such pair exists at this `rho`.
pub fn same_mass_bound(rho: f64, alpha_omega: f64) -> DeficitReport {
    let rhs = bubble::total_mass(alpha_omega);
    DeficitReport::new("same_mass_bound", rho, rhs, 1e-12 * rhs, Contract::NonNegative)
        .input("rho", rho)
        .with_alpha(alpha_omega)
        .note(
            "superlevel sets that are not simply connected have no radial analogue; \
             that case is covered only by the absence of counterexamples in the shooting scans",
        )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorMode {
    /// A bubble plus a constant.
    Shift,
    /// Solution of `Delta psi + K |x|^{-2 alpha} e^psi = 0` with a smooth curvature bound.
    SubunitCurvature,
}

/// `K(r) = w_c + w_r / (1 + r^2) + w_g e^{-r^2}`, clipped to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    pub constant: f64,
    pub rational: f64,
    pub gaussian: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Curvature {
    pub const ONE: Curvature = Curvature {
        constant: 1.0,
        rational: 0.0,
        gaussian: 0.0,
        lo: 1.0,
        hi: 1.0,
    };

    pub fn eval(&self, r: f64) -> f64 {
        let r2 = r * r;
        (self.constant + self.rational / (1.0 + r2) + self.gaussian * (-r2).exp()).clamp(self.lo, self.hi)
    }

    pub fn is_one(&self) -> bool {
        self.lo == 1.0 && self.hi == 1.0 || self.constant == 1.0 && self.rational == 0.0 && self.gaussian == 0.0
    }
}

/// Parameters a generated profile was drawn with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub mode: GeneratorMode,
    pub alpha: f64,
    pub lambda: f64,
    pub radius: f64,
    pub shift: f64,
    pub curvature: Curvature,
}

impl ProfileSpec {
    pub fn is_bubble(&self) -> bool {
        self.shift == 0.0 && self.curvature.is_one()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedProfile {
    pub spec: ProfileSpec,
    pub admissible: AdmissibleProfile,
}

#[derive(Debug, Clone)]
pub struct GeneratedExterior {
    pub spec: ProfileSpec,
    pub exterior: ExteriorAdmissible,
}

fn rng_for(seed: u64, alpha: f64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ alpha.to_bits().rotate_left(17));
    rng.set_stream(stream);
    rng
}

fn smallest_radius(alpha: f64, decades: f64) -> f64 {
    let k = 2.0 * (1.0 - alpha);
    1e-6f64.min(10f64.powf(-decades / k))
}

/// Interior grid: nodes down to where `r^k` is below `1e-8`.
pub fn interior_grid(alpha: f64, radius: f64, n: usize) -> Vec<f64> {
    split_geometric_grid(smallest_radius(alpha, 8.0), radius, n)
}

/// `U_{lambda, alpha} + c` on `(0, R]`.
pub fn shift_profile(p: &BubbleParams, c: f64, radius: f64, n: usize) -> Result<RadialProfile> {
    RadialProfile::from_fn(interior_grid(p.alpha(), radius, n), Some(bubble::eval_bubble(p, 0.0) + c), |r| {
        bubble::eval_bubble(p, r) + c
    })
}

/// Radial solution of `Delta psi + K(r) |x|^{-2 alpha} e^psi = 0` on `(0, R]`
/// with `psi(0) = v0`, started from its two-term expansion at the first node.
pub fn curvature_profile(v0: f64, alpha: f64, curvature: &Curvature, radii: &[f64]) -> Result<RadialProfile> {
    let k = 2.0 * (1.0 - alpha);
    let r0 = radii[0];
    let a = curvature.eval(0.0) * v0.exp() * r0.powf(k);
    let start = [v0 - a / (k * k), -a / k, 2.0 * PI * v0.exp() * r0.powf(k) / k];
    let sol = ode::shoot_log_radial(
        |r| curvature.eval(r) * r.powf(k),
        |r| r.powf(k),
        r0,
        start,
        radii,
        Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            ..Tolerances::default()
        },
    )?;
    RadialProfile::new(radii.to_vec(), sol.psi, Some(v0))
}

/// `psi(1/r) - 2k ln r`: maps interior solutions on `B_{1/R}` to exterior
/// solutions on `|x| > R` with the same mass.
pub fn kelvin_transform(interior: &RadialProfile, alpha: f64) -> Result<RadialProfile> {
    let k = 2.0 * (1.0 - alpha);
    let nodes: Vec<f64> = interior.nodes().iter().rev().map(|r| 1.0 / r).collect();
    let values = interior
        .values()
        .iter()
        .rev()
        .zip(&nodes)
        .map(|(v, r)| v - 2.0 * k * r.ln())
        .collect();
    RadialProfile::new(nodes, values, None)
}

/// Draws an admissible interior profile. Parameters: `lambda` log-uniform in
/// `[0.5, 5]`, `R` uniform in `[0.5, 2]`. Shift mode adds `c` uniform in
/// `[0.05, 1]`, except that seeds divisible by 10 give the bare bubble.
/// Curvature mode draws `K = w_c + w_r/(1+r^2) + w_g e^{-r^2}` with
/// `w_c <= 0.7` and weights summing to one, clipped to `[0.1, 1]`.
pub fn generate_test_profile(seed: u64, alpha: f64, mode: GeneratorMode) -> Result<GeneratedProfile> {
    let mut rng = rng_for(seed, alpha, 1);
    let lambda = (rng.gen_range(0.5f64.ln()..5f64.ln())).exp();
    let radius = rng.gen_range(0.5..2.0);
    let p = BubbleParams::new(lambda, alpha)?;
    let (profile, shift, curvature) = match mode {
        GeneratorMode::Shift => {
            let c = if seed % 10 == 0 { 0.0 } else { rng.gen_range(0.05..1.0) };
            (shift_profile(&p, c, radius, GENERATOR_NODES)?, c, Curvature::ONE)
        }
        GeneratorMode::SubunitCurvature => {
            let wc = rng.gen_range(0.0..0.7);
            let split: f64 = rng.gen_range(0.0..1.0);
            let curvature = Curvature {
                constant: wc,
                rational: (1.0 - wc) * split,
                gaussian: (1.0 - wc) * (1.0 - split),
                lo: 0.1,
                hi: 1.0,
            };
            let v0 = bubble::eval_bubble(&p, 0.0);
            let grid = interior_grid(alpha, radius, GENERATOR_NODES);
            (curvature_profile(v0, alpha, &curvature, &grid)?, 0.0, curvature)
        }
    };
    let admissible = check_differential_inequality(&profile, alpha, radius)?;
    if !admissible.is_admissible() {
        let (worst_margin, radius) = admissible.worst_margin();
        return Err(Error::GeneratorFailed { worst_margin, radius });
    }
    Ok(GeneratedProfile {
        spec: ProfileSpec {
            mode,
            alpha,
            lambda,
            radius,
            shift,
            curvature,
        },
        admissible,
    })
}

/// `U_{lambda, alpha} - c` on `[R, r_far]`, with `r_far` far enough that the
/// tail mass is below `1e-12` of the total.
pub fn exterior_shift_profile(p: &BubbleParams, c: f64, radius: f64, n: usize) -> Result<RadialProfile> {
    let a = p.lambda() * p.lambda() / 8.0;
    let far = (1e12 / a).powf(1.0 / p.k()).max(10.0 * radius);
    RadialProfile::from_fn(geometric_grid(radius, far, n), None, |r| bubble::eval_bubble(p, r) - c)
}

/// Draws an admissible exterior profile on `|x| > R`, `R` uniform in
/// `[0.5, 2]`. Shift mode gives `U_{lambda, alpha} - c` with the same rules
/// as [`generate_test_profile`]. Curvature mode Kelvin-transforms an interior
/// solution with `K = 1 + w_r/(1+r^2) + w_g e^{-r^2} >= 1` on `B_{1/R}`,
/// `w_r, w_g` uniform in `[0, 1]`; draws whose image is not strictly
/// decreasing are redrawn.
pub fn generate_exterior_profile(seed: u64, alpha: f64, mode: GeneratorMode) -> Result<GeneratedExterior> {
    let mut rng = rng_for(seed, alpha, 2);
    for _ in 0..64 {
        let lambda = (rng.gen_range(0.5f64.ln()..5f64.ln())).exp();
        let radius = rng.gen_range(0.5..2.0);
        let p = BubbleParams::new(lambda, alpha)?;
        let (profile, shift, curvature) = match mode {
            GeneratorMode::Shift => {
                let c = if seed % 10 == 0 { 0.0 } else { rng.gen_range(0.05..1.0) };
                (exterior_shift_profile(&p, c, radius, GENERATOR_NODES)?, c, Curvature::ONE)
            }
            GeneratorMode::SubunitCurvature => {
                let curvature = Curvature {
                    constant: 1.0,
                    rational: rng.gen_range(0.0..1.0),
                    gaussian: rng.gen_range(0.0..1.0),
                    lo: 1.0,
                    hi: 3.0,
                };
                let grid = split_geometric_grid(smallest_radius(alpha, 12.0), 1.0 / radius, GENERATOR_NODES);
                let v0 = bubble::eval_bubble(&p, 0.0);
                let inner = curvature_profile(v0, alpha, &curvature, &grid)?;
                (kelvin_transform(&inner, alpha)?, 0.0, curvature)
            }
        };
        let exterior = match check_exterior_inequality(&profile, alpha, radius) {
            Ok(e) => e,
            Err(Error::NotDecreasing { .. }) | Err(Error::MassTooLarge { .. }) if mode == GeneratorMode::SubunitCurvature => continue,
            Err(e) => return Err(e),
        };
        if !exterior.is_admissible() {
            let (worst_margin, radius) = exterior.worst_margin();
            return Err(Error::GeneratorFailed { worst_margin, radius });
        }
        return Ok(GeneratedExterior {
            spec: ProfileSpec {
                mode,
                alpha,
                lambda,
                radius,
                shift,
                curvature,
            },
            exterior,
        });
    }
    Err(Error::GeneratorFailed {
        worst_margin: f64::NAN,
        radius: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bp(l: f64, a: f64) -> BubbleParams {
        BubbleParams::new(l, a).unwrap()
    }

    #[test]
    fn bubble_margin_vanishes() {
        let psi = shift_profile(&bp(2.0, 0.0), 0.0, 1.0, GENERATOR_NODES).unwrap();
        let adm = check_differential_inequality(&psi, 0.0, 1.0).unwrap();
        for (m, t) in adm.margins().iter().zip(adm.tolerances()) {
            assert!(m.abs() <= 0.1 * t, "{m} vs {t}");
        }
    }

    #[test]
    fn shifted_bubble_margins_follow_the_mass_scaling() {
        for (c, admissible) in [(0.1, true), (-0.5, false)] {
            let psi = shift_profile(&bp(2.0, 0.0), c, 1.0, GENERATOR_NODES).unwrap();
            let adm = check_differential_inequality(&psi, 0.0, 1.0).unwrap();
            assert_eq!(adm.is_admissible(), admissible);
            let p = bp(2.0, 0.0);
            for ((r, m), t) in adm.radii().iter().zip(adm.margins()).zip(adm.tolerances()).step_by(97) {
                let expected = (c.exp() - 1.0) * bubble::bubble_mass(&p, *r);
                assert!((m - expected).abs() <= *t, "r = {r}");
            }
        }
    }

    #[test]
    fn plateaus_are_rejected() {
        let psi = RadialProfile::new(vec![0.5, 1.0], vec![1.0, 1.0], Some(2.0)).unwrap();
        assert!(matches!(
            check_differential_inequality(&psi, 0.0, 1.0),
            Err(Error::NotDecreasing { index: 1, .. })
        ));
    }

    #[test]
    fn kelvin_image_of_a_bubble_is_a_bubble() {
        let p = bp(2.0, 0.25);
        let inner = RadialProfile::from_fn(geometric_grid(1e-3, 1.0, 50), None, |r| bubble::eval_bubble(&p, r)).unwrap();
        let outer = kelvin_transform(&inner, 0.25).unwrap();
        let q = bp(4.0, 0.25);
        for (r, v) in outer.nodes().iter().zip(outer.values()) {
            assert!((v - bubble::eval_bubble(&q, *r)).abs() < 1e-13);
        }
    }

    #[test]
    fn same_mass_bound_arithmetic() {
        assert!(same_mass_bound(8.0 * PI, 0.0).is_equality());
        assert!(same_mass_bound(4.0 * PI, 0.5).is_equality());
        let r = same_mass_bound(6.0 * PI, 0.0);
        assert!((r.deficit + 2.0 * PI).abs() < 1e-14);
        assert!(!r.notes.is_empty());
    }
}
