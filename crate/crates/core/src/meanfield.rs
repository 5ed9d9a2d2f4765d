//! Mean field reductions on the sphere and the disk: stereographic pullback,
//! singular curvature bookkeeping `alpha(omega)`, uniqueness thresholds and
//! radial shooting solvers.
//!
//! Sphere solutions pulled back to the plane solve
//! `Delta u + (1 + |x|^2)^{-l} e^u = 4 pi sum alpha_j delta_{q_j}` with
//! `l = (4 pi (2 + sum alpha_j) - rho) / (4 pi)` and total mass `rho`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bubble;
use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};
use crate::profile::{geometric_grid, RadialProfile};

/// Series start radius for the shooting solvers.
pub const SHOOT_R0: f64 = 1e-6;

/// Outer radius of sphere shooting.
pub const SPHERE_R_MAX: f64 = 1e4;

/// Default number of center values in a uniqueness scan.
pub const SCAN_SAMPLES: usize = 50;

/// Half width of the uniqueness scan window around the center value.
pub const SCAN_HALF_WIDTH: f64 = 4.0;

/// Nodes of shot profiles.
pub const SHOOT_NODES: usize = 2000;

const SHOOT_TOL: Tolerances = Tolerances {
    rtol: 1e-12,
    atol: 1e-14,
    max_steps: 2_000_000,
};

/// A conical point `4 pi alpha delta_q` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub order: f64,
    pub location: [f64; 2],
}

/// Planar singular data: atoms and the smooth weight `(1 + |x|^2)^{-l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularData {
    atoms: Vec<Atom>,
    smooth_exponent: f64,
}

impl SingularData {
    pub fn new(atoms: Vec<Atom>, smooth_exponent: f64) -> Result<Self> {
        for a in &atoms {
            if !(a.order > -1.0 && a.order.is_finite()) {
                return Err(Error::invalid(format!("atom order {} must exceed -1", a.order)));
            }
            if !a.location.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid("atom location must be finite"));
            }
        }
        if !smooth_exponent.is_finite() {
            return Err(Error::invalid("smooth exponent must be finite"));
        }
        Ok(Self { atoms, smooth_exponent })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn smooth_exponent(&self) -> f64 {
        self.smooth_exponent
    }

    pub fn weight(&self, x: [f64; 2]) -> f64 {
        (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-self.smooth_exponent)
    }

    /// Whether `alpha(region) < 1`, i.e. the positive curvature of the
    /// region stays below `4 pi`.
    pub fn curvature_below_cone_limit(&self, region: &Region) -> bool {
        alpha_region(self, region) < 1.0
    }
}

/// Centered planar regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Plane,
    /// `{|x| < radius, x_2 > 0}` when `upper`, else `x_2 < 0`.
    HalfDisk { radius: f64, upper: bool },
}

impl Region {
    pub fn disk(radius: f64) -> Result<Self> {
        positive(radius)?;
        Ok(Region::Disk { radius })
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        positive(inner)?;
        positive(outer)?;
        if inner >= outer {
            return Err(Error::invalid(format!("annulus radii {inner} >= {outer}")));
        }
        Ok(Region::Annulus { inner, outer })
    }

    pub fn half_disk(radius: f64, upper: bool) -> Result<Self> {
        positive(radius)?;
        Ok(Region::HalfDisk { radius, upper })
    }

    pub fn is_simply_connected(&self) -> bool {
        !matches!(self, Region::Annulus { .. })
    }

    /// Open-set membership.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let r = x[0].hypot(x[1]);
        match *self {
            Region::Disk { radius } => r < radius,
            Region::Annulus { inner, outer } => r > inner && r < outer,
            Region::Plane => true,
            Region::HalfDisk { radius, upper } => r < radius && if upper { x[1] > 0.0 } else { x[1] < 0.0 },
        }
    }
}

fn positive(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("radius {r} must be positive and finite")))
    }
}

/// Stereographic projection from the north pole.
pub fn stereographic(p: [f64; 3]) -> Result<[f64; 2]> {
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("point has norm {norm}, not on the unit sphere")));
    }
    let d = 1.0 - p[2];
    if d <= 0.0 || (p[0] == 0.0 && p[1] == 0.0 && p[2] > 0.0) {
        return Err(Error::AtPole);
    }
    Ok([p[0] / d, p[1] / d])
}

pub fn inverse_stereographic(x: [f64; 2]) -> [f64; 3] {
    let s = x[0] * x[0] + x[1] * x[1];
    let d = 1.0 + s;
    [2.0 * x[0] / d, 2.0 * x[1] / d, (s - 1.0) / d]
}

/// Conical point on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereAtom {
    pub order: f64,
    pub point: [f64; 3],
}

/// `l = (4 pi (2 + sum alpha_j) - rho) / (4 pi)`.
pub fn smooth_exponent(rho: f64, orders: &[f64]) -> f64 {
    let sum: f64 = orders.iter().sum();
    (4.0 * PI * (2.0 + sum) - rho) / (4.0 * PI)
}

/// Pulls the sphere problem back to the plane. Atoms at the north pole have
/// no planar image.
pub fn reduce_sphere_to_plane(rho: f64, atoms: &[SphereAtom]) -> Result<SingularData> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho = {rho} must be positive")));
    }
    let orders: Vec<f64> = atoms.iter().map(|a| a.order).collect();
    let planar = atoms
        .iter()
        .map(|a| {
            Ok(Atom {
                order: a.order,
                location: stereographic(a.point)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SingularData::new(planar, smooth_exponent(rho, &orders))
}

/// Hole filling: an annulus becomes its outer disk.
pub fn fill_holes(region: &Region) -> Region {
    match *region {
        Region::Annulus { outer, .. } => Region::Disk { radius: outer },
        other => other,
    }
}

/// Normalized spherical area `(1/4pi) int_omega 4 / (1 + |x|^2)^2 dx`.
pub fn sphere_area_fraction(region: &Region) -> f64 {
    let disk = |r: f64| r * r / (1.0 + r * r);
    match *region {
        Region::Disk { radius } => disk(radius),
        Region::Annulus { inner, outer } => disk(outer) - disk(inner),
        Region::Plane => 1.0,
        Region::HalfDisk { radius, .. } => 0.5 * disk(radius),
    }
}

/// Area fraction of the hole-filled region.
pub fn sphere_area_fraction_filled(region: &Region) -> f64 {
    sphere_area_fraction(&fill_holes(region))
}

/// `alpha(omega) = max(l, 0) I_s(omega) - sum of the negative orders whose
/// atoms lie in the hole-filled region`. Positive orders contribute nothing.
pub fn alpha_region(data: &SingularData, region: &Region) -> f64 {
    let filled = fill_holes(region);
    let negative: f64 = data
        .atoms
        .iter()
        .filter(|a| a.order < 0.0 && filled.contains(a.location))
        .map(|a| a.order)
        .sum();
    data.smooth_exponent.max(0.0) * sphere_area_fraction_filled(region) - negative
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Sphere,
    Disk,
}

/// Uniqueness and existence thresholds for given conical orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub domain: Domain,
    /// `4 pi (2 + sum alpha_j)`: at most one solution strictly below.
    pub sphere_uniqueness: Option<f64>,
    /// The level `4 pi (2 + sum alpha_j)` itself, covered when `N >= 3`.
    pub polytope_level: Option<f64>,
    /// `8 pi (1 + min(alpha_j, 0))`.
    pub coercivity: f64,
    /// `8 pi (1 - alpha)` with `alpha` minus the sum of negative orders.
    pub disk_uniqueness: Option<f64>,
    /// `sum alpha_j > -2`.
    pub necessity_ok: Option<bool>,
    /// `(disk_uniqueness, coercivity)` when at least two orders are negative:
    /// the range where uniqueness is not settled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_gap: Option<(f64, f64)>,
}

pub fn thresholds(orders: &[f64], domain: Domain) -> Result<Thresholds> {
    let min = orders.iter().fold(0.0f64, |m, &a| m.min(a));
    let coercivity = 8.0 * PI * (1.0 + min);
    match domain {
        Domain::Sphere => {
            if let Some(&order) = orders.iter().find(|&&a| !(a > -1.0 && a < 0.0)) {
                return Err(Error::OrderOutOfRange { order });
            }
            let sum: f64 = orders.iter().sum();
            let level = 4.0 * PI * (2.0 + sum);
            Ok(Thresholds {
                domain,
                sphere_uniqueness: Some(level),
                polytope_level: (orders.len() >= 3).then_some(level),
                coercivity,
                disk_uniqueness: None,
                necessity_ok: Some(sum > -2.0),
                open_gap: None,
            })
        }
        Domain::Disk => {
            if let Some(&order) = orders.iter().find(|&&a| !(a > -1.0 && a.is_finite())) {
                return Err(Error::invalid(format!("order {order} must exceed -1")));
            }
            let negative: Vec<f64> = orders.iter().copied().filter(|&a| a < 0.0).collect();
            let alpha = -negative.iter().sum::<f64>();
            let bound = 8.0 * PI * (1.0 - alpha);
            Ok(Thresholds {
                domain,
                sphere_uniqueness: None,
                polytope_level: None,
                coercivity,
                disk_uniqueness: Some(bound),
                necessity_ok: None,
                open_gap: (negative.len() >= 2).then_some((bound, coercivity)),
            })
        }
    }
}

/// Shooting target for the disk problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiskTarget {
    Lambda(f64),
    Rho(f64),
}

/// Radial solution of `Delta v + |x|^{-2 alpha} e^v = 0` on `B_1`.
#[derive(Debug, Clone)]
pub struct DiskShot {
    pub profile: RadialProfile,
    pub lambda: f64,
    /// Mass over `B_1`.
    pub rho: f64,
    pub alpha: f64,
}

/// Series start radius: `lambda^2 r0^k / 4` stays below `1e-12`.
fn disk_start_radius(lambda: f64, k: f64) -> f64 {
    SHOOT_R0.min((4e-12 / (lambda * lambda)).powf(1.0 / k))
}

/// State `[v, r v', M]` at `r0` from the series
/// `v = v0 - e^{v0} r^k / k^2 + O(r^{2k})`.
fn disk_start(v0: f64, k: f64, r0: f64) -> [f64; 3] {
    let a = v0.exp() * r0.powf(k);
    [v0 - a / (k * k), -a / k, 2.0 * PI * a / k]
}

fn shoot_disk_lambda(lambda: f64, alpha: f64) -> Result<(f64, RadialProfile)> {
    let k = 2.0 * (1.0 - alpha);
    let v0 = 2.0 * (lambda * (1.0 - alpha)).ln();
    let r0 = disk_start_radius(lambda, k);
    let radii = geometric_grid(r0, 1.0, SHOOT_NODES);
    let sol = ode::shoot_log_radial(|r| r.powf(k), |r| r.powf(k), r0, disk_start(v0, k, r0), &radii, SHOOT_TOL)?;
    let rho = *sol.mass.last().unwrap();
    Ok((rho, RadialProfile::new(radii, sol.psi, Some(v0))?))
}

fn disk_mass(lambda: f64, alpha: f64) -> Result<f64> {
    let k = 2.0 * (1.0 - alpha);
    let v0 = 2.0 * (lambda * (1.0 - alpha)).ln();
    let r0 = disk_start_radius(lambda, k);
    let sol = ode::shoot_log_radial(|r| r.powf(k), |r| r.powf(k), r0, disk_start(v0, k, r0), &[1.0], SHOOT_TOL)?;
    Ok(sol.mass[0])
}

/// Shoots the radial disk problem with center value `2 ln(lambda (1 - alpha))`,
/// either for a given `lambda` or for the `lambda` whose mass over `B_1` is `rho`.
/// The `rho` search is a safeguarded secant in `ln lambda` on `ln(rho / (A - rho))`.
pub fn shoot_disk(alpha: f64, target: DiskTarget) -> Result<DiskShot> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    let limit = bubble::total_mass(alpha);
    let lambda = match target {
        DiskTarget::Lambda(l) => {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("lambda = {l} must be positive")));
            }
            l
        }
        DiskTarget::Rho(rho) => {
            if !(rho < limit) {
                return Err(Error::RhoOutOfRange { rho, limit });
            }
            if !(rho > 0.0) {
                return Err(Error::invalid(format!("rho = {rho} must be positive")));
            }
            solve_disk_lambda(rho, alpha, limit)?
        }
    };
    let (rho, profile) = shoot_disk_lambda(lambda, alpha)?;
    Ok(DiskShot {
        profile,
        lambda,
        rho,
        alpha,
    })
}

fn solve_disk_lambda(rho: f64, alpha: f64, limit: f64) -> Result<f64> {
    let logit = |m: f64| (m / (limit - m)).ln();
    let goal = logit(rho);
    let g = |s: f64| -> Result<f64> {
        let m = disk_mass(s.exp(), alpha)?;
        if !(m > 0.0 && m < limit) {
            return Err(Error::NoConvergence(format!("shot mass {m} left (0, {limit})")));
        }
        Ok(logit(m) - goal)
    };
    let (mut s0, mut s1) = (0.0, 1.0);
    let (mut g0, mut g1) = (g(s0)?, g(s1)?);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..100 {
        for (s, v) in [(s0, g0), (s1, g1)] {
            if v < 0.0 {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
        if g1 == 0.0 || (s1 - s0).abs() <= 1e-14 * s1.abs().max(1.0) {
            return Ok(s1.exp());
        }
        let mut next = s1 - g1 * (s1 - s0) / (g1 - g0);
        if !next.is_finite() || next <= lo || next >= hi {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 2.0,
                (false, true) => hi - 2.0,
                (false, false) => s1 + 1.0,
            };
        }
        if next.abs() > 60.0 {
            return Err(Error::NoConvergence(format!("lambda search left [e^-60, e^60] for rho = {rho}")));
        }
        s0 = s1;
        g0 = g1;
        s1 = next;
        g1 = g(s1)?;
    }
    Err(Error::NoConvergence(format!("lambda search for rho = {rho} did not settle")))
}

/// Radial sphere pullback `Delta u + (1 + r^2)^{-l} e^u = 0` with `N = 0`.
#[derive(Debug, Clone)]
pub struct SphereShot {
    pub profile: RadialProfile,
    pub rho: f64,
    pub u0: f64,
    /// Mass over the integrated range plus the tail estimate.
    pub mass: f64,
    /// Power-law tail beyond the last integrated radius.
    pub tail: f64,
    /// Bound on `|mass - true mass|`: integrator error plus the tail.
    pub tolerance: f64,
}

fn sphere_exponent(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 8.0 * PI) {
        return Err(Error::RhoOutOfRange { rho, limit: 8.0 * PI });
    }
    Ok(smooth_exponent(rho, &[]))
}

fn sphere_start(u0: f64, r0: f64) -> [f64; 3] {
    let a = u0.exp() * r0 * r0;
    [u0 - a / 4.0, -a / 2.0, PI * a]
}

/// `r^2 (1 + r^2)^{-l}` at `r = e^t`, stable for large `t`.
fn sphere_weight(l: f64, t: f64) -> f64 {
    let softplus = if t > 20.0 { 2.0 * t + (-2.0 * t).exp().ln_1p() } else { (2.0 * t).exp().ln_1p() };
    (2.0 * t - l * softplus).exp()
}

/// Local decay `q` of `d ~ r^{-q}` at `r = e^t`: `q = 2 l r^2 / (1 + r^2) - r u'(r)`.
fn sphere_decay(l: f64, t: f64, log_slope: f64) -> f64 {
    2.0 * l / (1.0 + (-2.0 * t).exp()) - log_slope
}

/// Tail `int_R^inf 2 pi r d(r) dr` for `d ~ r^{-q}`, i.e. `2 pi R^2 d(R) / (q - 2)`.
fn sphere_tail(l: f64, t: f64, state: &[f64; 3]) -> f64 {
    let q = sphere_decay(l, t, state[1]);
    if q > 2.0 {
        2.0 * PI * sphere_weight(l, t) * state[0].exp() / (q - 2.0)
    } else {
        f64::INFINITY
    }
}

/// Relative tail size at which the mass integration stops.
const TAIL_STOP: f64 = 1e-11;

/// Largest `ln r` reached while chasing the tail.
const T_LIMIT: f64 = 600.0;

struct SphereRun {
    states: Vec<[f64; 3]>,
    mass: f64,
    tail: f64,
}

/// Integrates in `t = ln r` with samples at `radii` (ending at `SPHERE_R_MAX`),
/// then continues past it until the power-law tail is below `TAIL_STOP`
/// relative to the mass.
fn sphere_run(rho: f64, u0: f64, radii: &[f64]) -> Result<SphereRun> {
    let l = sphere_exponent(rho)?;
    if !u0.is_finite() {
        return Err(Error::invalid("u0 must be finite"));
    }
    let rhs = |t: f64, y: &[f64; 3]| {
        let d = sphere_weight(l, t) * y[0].exp();
        [y[1], -d, 2.0 * PI * d]
    };
    let ts: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let states = ode::integrate(rhs, SHOOT_R0.ln(), sphere_start(u0, SHOOT_R0), &ts, SHOOT_TOL)?;
    let mut t = *ts.last().unwrap();
    let mut y = *states.last().unwrap();
    loop {
        let tail = sphere_tail(l, t, &y);
        if tail <= TAIL_STOP * y[2] {
            return Ok(SphereRun {
                mass: y[2] + tail,
                tail,
                states,
            });
        }
        if t >= T_LIMIT {
            return Err(Error::NoConvergence(format!(
                "density decays like r^-{} at ln r = {t}: mass has not settled",
                sphere_decay(l, t, y[1])
            )));
        }
        let next = (t + 5.0).min(T_LIMIT);
        y = ode::integrate(rhs, t, y, &[next], SHOOT_TOL)?[0];
        t = next;
    }
}

fn tolerance_of(mass: f64, tail: f64) -> f64 {
    1e-8 * mass + tail
}

/// Shoots from the center value `u0` with `l = (8 pi - rho) / (4 pi)`. The
/// profile is sampled on `[SHOOT_R0, SPHERE_R_MAX]`; the mass integration
/// continues beyond until the tail is negligible.
pub fn shoot_sphere(rho: f64, u0: f64) -> Result<SphereShot> {
    let radii = geometric_grid(SHOOT_R0, SPHERE_R_MAX, SHOOT_NODES);
    let run = sphere_run(rho, u0, &radii)?;
    let psi = run.states.iter().map(|y| y[0]).collect();
    Ok(SphereShot {
        profile: RadialProfile::new(radii, psi, Some(u0))?,
        rho,
        u0,
        mass: run.mass,
        tail: run.tail,
        tolerance: tolerance_of(run.mass, run.tail),
    })
}

fn sphere_end(rho: f64, u0: f64) -> Result<SphereRun> {
    sphere_run(rho, u0, &[SPHERE_R_MAX])
}

/// Center value known in closed form: `ln 4` at `rho = 4 pi`.
pub fn exact_center(rho: f64) -> Option<f64> {
    ((rho - 4.0 * PI).abs() <= 1e-15 * 4.0 * PI).then(|| 4f64.ln())
}

/// First center value, scanning upward from `-10` in steps of `1/2`, where
/// the shot mass reaches `rho`, refined by bisection.
pub fn sphere_center_for_mass(rho: f64) -> Result<f64> {
    sphere_exponent(rho)?;
    let f = |u0: f64| sphere_end(rho, u0).map(|e| e.mass - rho);
    let mut a = -10.0;
    if f(a)? >= 0.0 {
        return Err(Error::NoConvergence(format!("mass already exceeds rho = {rho} at u0 = {a}")));
    }
    let mut b = a;
    let mut found = false;
    while b < 20.0 {
        b = a + 0.5;
        let fb = f(b)?;
        if fb >= 0.0 {
            found = true;
            break;
        }
        a = b;
    }
    if !found {
        return Err(Error::NoConvergence(format!("no center value up to u0 = 20 reaches rho = {rho}")));
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if f(m)? < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-13 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Shot whose mass equals `rho`.
pub fn solve_sphere(rho: f64) -> Result<SphereShot> {
    let u0 = match exact_center(rho) {
        Some(u) => u,
        None => sphere_center_for_mass(rho)?,
    };
    shoot_sphere(rho, u0)
}

/// Shot masses over a window of center values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessScan {
    pub rho: f64,
    pub center: f64,
    pub u0: Vec<f64>,
    pub mass: Vec<f64>,
    pub tolerance: Vec<f64>,
    /// Consecutive masses increase by more than their combined tolerance.
    pub strictly_monotone: bool,
}

/// Samples `samples` center values evenly over `center +- SCAN_HALF_WIDTH`.
/// A strictly monotone mass map admits at most one radial solution of mass `rho`.
pub fn uniqueness_scan(rho: f64, samples: usize) -> Result<UniquenessScan> {
    if samples < 2 {
        return Err(Error::invalid("a scan needs at least two samples"));
    }
    let center = match exact_center(rho) {
        Some(u) => u,
        None => sphere_center_for_mass(rho)?,
    };
    let u0: Vec<f64> = (0..samples)
        .map(|i| center - SCAN_HALF_WIDTH + 2.0 * SCAN_HALF_WIDTH * i as f64 / (samples - 1) as f64)
        .collect();
    let mut mass = Vec::with_capacity(samples);
    let mut tolerance = Vec::with_capacity(samples);
    for &u in &u0 {
        let e = sphere_end(rho, u)?;
        tolerance.push(tolerance_of(e.mass, e.tail));
        mass.push(e.mass);
    }
    let strictly_monotone = mass
        .windows(2)
        .zip(tolerance.windows(2))
        .all(|(m, t)| m[1] - m[0] > t[0] + t[1]);
    Ok(UniquenessScan {
        rho,
        center,
        u0,
        mass,
        tolerance,
        strictly_monotone,
    })
}
