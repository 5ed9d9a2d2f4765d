//! Single computations behind the subcommands. Each returns a JSON document,
//! an optional profile for CSV output, and whether every contract held.

use std::f64::consts::PI;

use serde_json::{json, Value};
use sphere_covering::bol::{self, GENERATOR_NODES};
use sphere_covering::bubble::{self, BubbleParams};
use sphere_covering::meanfield::{self, DiskTarget, Domain};
use sphere_covering::onsager::{self, OnsagerParams};
use sphere_covering::quadrature::{self, WeightedRadialDensity};
use sphere_covering::rearrange::{self, MeasurePair, TargetMeasure};
use sphere_covering::{RadialProfile, Result};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: Value,
    pub profile: Option<RadialProfile>,
    pub ok: bool,
}

impl Outcome {
    fn new(json: Value, ok: bool) -> Self {
        Self { json, profile: None, ok }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Closed-form and quadrature masses, the boundary integral, and the Bol
/// deficit of the sampled bubble.
pub fn bubble(lambda: f64, alpha: f64, radius: f64) -> Result<Outcome> {
    let p = BubbleParams::new(lambda, alpha)?;
    let closed = bubble::bubble_mass(&p, radius);
    let quad = quadrature::annulus_integral(&p.density(), 0.0, radius, 1e-12)?;
    let psi = bol::shift_profile(&p, 0.0, radius, GENERATOR_NODES)?;
    let report = bol::bol_deficit_interior(&bol::check_differential_inequality(&psi, alpha, radius)?)?;
    let bound = if alpha == 0.0 { 1e-10 } else { 1e-6 };
    let ok = report.passed() && rel(quad, closed) <= bound;
    Ok(Outcome::new(
        json!({
            "lambda": lambda,
            "alpha": alpha,
            "radius": radius,
            "center_value": bubble::eval_bubble(&p, 0.0),
            "value_at_radius": bubble::eval_bubble(&p, radius),
            "mass_closed_form": closed,
            "mass_quadrature": quad,
            "mass_relative_error": rel(quad, closed),
            "total_mass": bubble::total_mass(alpha),
            "boundary_integral": bubble::boundary_root_integral(&p, radius),
            "bol": report,
        }),
        ok,
    ))
}

/// The partner scale through the same boundary value and the covering deficit
/// of the pair.
pub fn pair(lambda1: f64, alpha: f64, radius: f64) -> Result<Outcome> {
    let p1 = BubbleParams::new(lambda1, alpha)?;
    let lambda2 = bubble::pair_lambda(lambda1, alpha, radius);
    let p2 = BubbleParams::new(lambda2, alpha)?;
    let (m1, m2) = (bubble::bubble_mass(&p1, radius), bubble::bubble_mass(&p2, radius));
    let covering = sphere_covering::bol::covering_deficit(m1, m2, alpha, 1e-10);
    let match_error = (bubble::eval_bubble(&p1, radius) - bubble::eval_bubble(&p2, radius)).abs();
    let ok = covering.is_equality() && match_error <= 1e-12 * (1.0 + bubble::eval_bubble(&p1, radius).abs());
    Ok(Outcome::new(
        json!({
            "lambda1": lambda1,
            "lambda2": lambda2,
            "alpha": alpha,
            "radius": radius,
            "boundary_match_error": match_error,
            "mass1": m1,
            "mass2": m2,
            "mass_sum": m1 + m2,
            "total_mass": bubble::total_mass(alpha),
            "covering": covering,
        }),
        ok,
    ))
}

/// Interior or exterior Bol deficit of a sampled profile.
pub fn bol(profile: &RadialProfile, alpha: f64, radius: f64, exterior: bool) -> Result<Outcome> {
    let report = if exterior {
        bol::bol_deficit_exterior(profile, alpha, radius)?
    } else {
        bol::bol_deficit_interior(&bol::check_differential_inequality(profile, alpha, radius)?)?
    };
    let ok = report.passed();
    Ok(Outcome::new(serde_json::to_value(&report).expect("reports serialize"), ok))
}

/// Where the source measure of `rearrange` comes from.
#[derive(Debug, Clone)]
pub enum Source {
    /// `|x|^{-2 alpha} e^{U_{lambda, alpha}}` with the given scale.
    Bubble(f64),
    Lebesgue,
    /// A sampled density with respect to `dx`.
    Density(RadialProfile),
}

pub fn rearrange(phi: &RadialProfile, source: &Source, target_lambda: f64, alpha: f64) -> Result<Outcome> {
    let density = match source {
        Source::Bubble(l) => BubbleParams::new(*l, alpha)?.density(),
        Source::Lebesgue => WeightedRadialDensity::constant(0.0, 1.0)?,
        Source::Density(p) => WeightedRadialDensity::from_profile(p, 0.0)?,
    };
    let pair = MeasurePair::new(density, TargetMeasure::Bubble(BubbleParams::new(target_lambda, alpha)?));
    let star = rearrange::rearrange_two_measures(phi, &pair, 1e-12)?;
    let report = rearrange::equimeasurability_report(phi, &star, &pair, 1e-12)?;
    let ok = report.passed();
    let source_name = match source {
        Source::Bubble(_) => "bubble",
        Source::Lebesgue => "lebesgue",
        Source::Density(_) => "file",
    };
    let mut out = Outcome::new(
        json!({
            "source": source_name,
            "target_lambda": target_lambda,
            "alpha": alpha,
            "nodes": star.len(),
            "support_radius": star.r_max(),
            "equimeasurability": report,
        }),
        ok,
    );
    out.profile = Some(star);
    Ok(out)
}

pub fn thresholds(orders: &[f64], domain: Domain) -> Result<Outcome> {
    let t = meanfield::thresholds(orders, domain)?;
    let mut v = serde_json::to_value(&t).expect("thresholds serialize");
    v["orders"] = json!(orders);
    Ok(Outcome::new(v, true))
}

pub fn shoot_disk(alpha: f64, rho: f64) -> Result<Outcome> {
    let shot = meanfield::shoot_disk(alpha, DiskTarget::Rho(rho))?;
    let closed = bubble::lambda_for_mass(rho, alpha, 1.0)?;
    let error = rel(shot.lambda, closed);
    let mut out = Outcome::new(
        json!({
            "domain": "disk",
            "alpha": alpha,
            "rho": rho,
            "shot_rho": shot.rho,
            "lambda": shot.lambda,
            "closed_form_lambda": closed,
            "relative_error": error,
            "supremum_mass": bubble::total_mass(alpha),
        }),
        error <= 1e-6,
    );
    out.profile = Some(shot.profile);
    Ok(out)
}

pub fn shoot_sphere(rho: f64, scan: bool) -> Result<Outcome> {
    let shot = meanfield::solve_sphere(rho)?;
    let mut ok = (shot.mass - rho).abs() <= shot.tolerance;
    let mut v = json!({
        "domain": "sphere",
        "rho": rho,
        "smooth_exponent": (8.0 * PI - rho) / (4.0 * PI),
        "u0": shot.u0,
        "exact_u0": meanfield::exact_center(rho),
        "mass": shot.mass,
        "tail": shot.tail,
        "tolerance": shot.tolerance,
    });
    if scan {
        let s = meanfield::uniqueness_scan(rho, meanfield::SCAN_SAMPLES)?;
        ok &= s.strictly_monotone;
        v["scan"] = serde_json::to_value(&s).expect("scans serialize");
        v["same_mass_bound"] = serde_json::to_value(bol::same_mass_bound(rho, 0.0)).expect("reports serialize");
    }
    let mut out = Outcome::new(v, ok);
    out.profile = Some(shot.profile);
    Ok(out)
}

/// The Onsager record, with the curvature chain when the weight has a
/// positive-curvature core.
pub fn onsager(beta_over_8pi: f64, gamma: f64) -> Result<Outcome> {
    let p = OnsagerParams::new(beta_over_8pi, gamma)?;
    let record = onsager::onsager_record(&p)?;
    let mut v = serde_json::to_value(&record).expect("records serialize");
    let mut ok = true;
    if p.has_positive_curvature() {
        let chain = onsager::chain_report(&p)?;
        ok = chain.passed();
        v["chain"] = serde_json::to_value(&chain).expect("reports serialize");
    }
    Ok(Outcome::new(v, ok))
}
