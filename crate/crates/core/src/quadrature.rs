//! Integration of weighted radial measures `|x|^{-2a} d(|x|) dx`.
//!
//! Every planar integral is taken in the variable `s = r^k`, `k = 2(1 - a)`,
//! where `2 pi r^{1-2a} dr = (2 pi / k) ds`. This removes the algebraic
//! singularity at the origin, so a plain adaptive Gauss-Kronrod rule suffices.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics;
use crate::profile::RadialProfile;

/// Maximum number of subintervals an adaptive integration may create.
pub const INTERVAL_BUDGET: usize = 1 << 14;

/// Default relative tolerance for planar masses.
pub const DEFAULT_TOL: f64 = 1e-12;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: (integral, error estimate) with the QUADPACK
/// error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * h;
    res_abs *= h.abs();
    res_asc *= h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration of `f` over `[points[0], points[last]]`,
/// with the interior points used as initial breakpoints. Stops once the
/// summed error estimate is within `tol` relative to the result.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> Result<f64> {
    integrate_panels(&f, points, tol).map(|(v, _)| v)
}

/// [`integrate_with_breakpoints`] without interior breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_breakpoints(f, &[a, b], tol)
}

fn integrate_panels<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    if points.len() < 2 || points.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::invalid("integration limits must be ascending"));
    }
    let mut heap = BinaryHeap::with_capacity(points.len());
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, err) = gk15(f, w[0], w[1]);
        total += value;
        total_err += err;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }
    let mut intervals = heap.len();
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::NonConvergent {
                estimate: total_err,
                tolerance: tol * total.abs(),
                intervals,
            });
        }
        if total_err <= tol * total.abs() {
            return Ok((total, total_err));
        }
        if intervals >= INTERVAL_BUDGET {
            return Err(Error::NonConvergent {
                estimate: total_err,
                tolerance: tol * total.abs(),
                intervals,
            });
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::NonConvergent {
                estimate: total_err,
                tolerance: tol * total.abs(),
                intervals,
            });
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        intervals += 1;
        if intervals % 64 == 0 {
            // Resum to keep cancellation from drifting the running totals.
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
}

type DensityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Radial density `d(r) >= 0` paired with the weight `|x|^{-2 alpha}`.
#[derive(Clone)]
pub struct WeightedRadialDensity {
    alpha: f64,
    density: Arc<DensityFn>,
    breakpoints: Vec<f64>,
}

impl std::fmt::Debug for WeightedRadialDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightedRadialDensity")
            .field("alpha", &self.alpha)
            .field("breakpoints", &self.breakpoints.len())
            .finish()
    }
}

impl WeightedRadialDensity {
    pub fn new(alpha: f64, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            density: Arc::new(density),
            breakpoints: Vec::new(),
        })
    }

    pub fn constant(alpha: f64, value: f64) -> Result<Self> {
        Self::new(alpha, move |_| value)
    }

    /// `e^{psi(r)}` for a sampled profile, interpolated in `ln r`; profile
    /// nodes become quadrature breakpoints.
    pub fn exp_of_profile(profile: &RadialProfile, alpha: f64) -> Result<Self> {
        let it = profile.interpolant();
        let mut w = Self::new(alpha, move |r| it.eval(r).exp())?;
        w.breakpoints = profile.nodes().to_vec();
        Ok(w)
    }

    /// The profile values themselves as the density.
    pub fn from_profile(profile: &RadialProfile, alpha: f64) -> Result<Self> {
        let it = profile.interpolant();
        let mut w = Self::new(alpha, move |r| it.eval(r))?;
        w.breakpoints = profile.nodes().to_vec();
        Ok(w)
    }

    pub fn with_breakpoints(mut self, mut radii: Vec<f64>) -> Self {
        radii.retain(|r| r.is_finite() && *r > 0.0);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        self.breakpoints = radii;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent `k = 2(1 - alpha)` of the mass variable `s = r^k`.
    pub fn k(&self) -> f64 {
        2.0 * (1.0 - self.alpha)
    }

    pub fn density(&self, r: f64) -> f64 {
        (self.density)(r)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `2 pi r^{1-2 alpha} d(r)`, the radial derivative of the enclosed mass.
    pub fn mass_slope(&self, r: f64) -> f64 {
        2.0 * PI * r.powf(1.0 - 2.0 * self.alpha) * self.density(r)
    }

    fn breakpoints_in(&self, r0: f64, r1: f64) -> impl Iterator<Item = f64> + '_ {
        let lo = self.breakpoints.partition_point(|&b| b <= r0);
        let hi = self.breakpoints.partition_point(|&b| b < r1);
        self.breakpoints[lo..hi].iter().copied()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha = {alpha} is outside [0, 1)")))
    }
}

/// `2 pi int_{r0}^{r1} d(r) r^{1 - 2 alpha} dr` to relative tolerance `tol`.
pub fn annulus_integral(w: &WeightedRadialDensity, r0: f64, r1: f64, tol: f64) -> Result<f64> {
    if !(r0 >= 0.0 && r1 > r0 && r1.is_finite()) {
        return Err(Error::invalid(format!("need 0 <= r0 < r1 < inf, got [{r0}, {r1}]")));
    }
    let k = w.k();
    let (s0, s1) = (r0.powf(k), r1.powf(k));
    if s1 <= s0 {
        return Ok(0.0);
    }
    // powf is not monotone to the last ulp; keep mapped breakpoints strictly inside.
    let mut s_points = vec![s0];
    s_points.extend(w.breakpoints_in(r0, r1).map(|r| r.powf(k)).filter(|&s| s > s0 && s < s1));
    s_points.push(s1);
    s_points.dedup();
    integrate_in_s(w, &s_points, tol).map(|(v, _)| v)
}

fn integrate_in_s(w: &WeightedRadialDensity, s_points: &[f64], tol: f64) -> Result<(f64, f64)> {
    let k = w.k();
    let inv_k = k.recip();
    let negative: Cell<Option<(f64, f64)>> = Cell::new(None);
    let f = |s: f64| {
        let r = s.powf(inv_k);
        let d = w.density(r);
        if d < 0.0 || d.is_nan() {
            if negative.get().is_none() {
                negative.set(Some((r, d)));
            }
            return 0.0;
        }
        d
    };
    let out = integrate_panels(&f, s_points, tol);
    if let Some((radius, value)) = negative.get() {
        return Err(Error::NegativeDensity { radius, value });
    }
    let (v, e) = out?;
    let scale = 2.0 * PI / k;
    Ok((v * scale, e * scale))
}

/// `2 pi R^{1 - alpha} sqrt(d(R))`: the circle integral of the square root of
/// the weighted density, exact for radial densities.
pub fn circle_root_integral(w: &WeightedRadialDensity, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("circle radius must be positive"));
    }
    let d = w.density(r);
    if d < 0.0 || d.is_nan() {
        return Err(Error::NegativeDensity { radius: r, value: d });
    }
    Ok(2.0 * PI * r.powf(1.0 - w.alpha) * d.sqrt())
}

/// Mass over `|x| > r` split into the integral up to a cutoff and an estimated
/// tail beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorMass {
    /// Quadrature up to the cutoff plus the tail estimate.
    pub value: f64,
    /// Tail estimate beyond the cutoff; callers add it to their tolerance.
    pub tail: f64,
    pub cutoff: f64,
}

/// Mass over `r < |x|`, integrated up to `cutoff`, with the remainder estimated
/// from the local power decay `d ~ s^{-p}` at the cutoff (`p > 1` required).
/// For bubble-type decay (`p -> 2`) the estimate bounds the true tail from above.
pub fn exterior_integral(w: &WeightedRadialDensity, r: f64, cutoff: f64, tol: f64) -> Result<ExteriorMass> {
    if !(r > 0.0 && cutoff > r) {
        return Err(Error::invalid("exterior integral needs 0 < r < cutoff"));
    }
    let body = annulus_integral(w, r, cutoff, tol)?;
    let k = w.k();
    let sc = cutoff.powf(k);
    let h = 1e-3;
    let d1 = w.density(cutoff);
    let d0 = w.density((sc * (-h as f64).exp()).powf(1.0 / k));
    let tail = if d1 == 0.0 {
        0.0
    } else {
        let p = -(d1.ln() - d0.ln()) / h;
        if !(p > 1.0) {
            return Err(Error::invalid(format!(
                "density decays like s^-{p:.3} at the cutoff; the exterior mass is not finite"
            )));
        }
        2.0 * PI / k * d1 * sc / (p - 1.0)
    };
    Ok(ExteriorMass {
        value: body + tail,
        tail,
        cutoff,
    })
}

/// Enclosed masses `M(r_i)` of a weighted density, with exact slopes `M'(r_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeMass {
    radii: Vec<f64>,
    masses: Vec<f64>,
    slopes: Vec<f64>,
}

impl CumulativeMass {
    /// Builds a table from raw data; slopes are estimated when absent.
    pub fn new(radii: Vec<f64>, masses: Vec<f64>, slopes: Option<Vec<f64>>) -> Result<Self> {
        if radii.is_empty() || radii.len() != masses.len() {
            return Err(Error::invalid("radii and masses must be non-empty and of equal length"));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("radii must be positive and strictly increasing"));
        }
        if masses[0] < 0.0 || masses.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("masses must be nonnegative and nondecreasing"));
        }
        let mut slopes = match slopes {
            Some(s) if s.len() == radii.len() => s,
            Some(_) => return Err(Error::invalid("slopes must match radii")),
            None => numerics::derivative(&radii, &masses),
        };
        numerics::limit_monotone(&radii, &masses, &mut slopes);
        Ok(Self { radii, masses, slopes })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        *self.masses.last().unwrap()
    }

    /// Interpolated enclosed mass at `r`; a power law below the first radius,
    /// held constant beyond the last.
    pub fn mass_at(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= 0.0 {
            return 0.0;
        }
        if r <= self.radii[0] {
            let (m0, p) = self.head();
            return if m0 == 0.0 { 0.0 } else { m0 * (r / self.radii[0]).powf(p) };
        }
        if r >= self.radii[n - 1] {
            return self.masses[n - 1];
        }
        let i = numerics::segment_index(&self.radii, r);
        self.segment(i, r)
    }

    fn head(&self) -> (f64, f64) {
        let m0 = self.masses[0];
        let p = if m0 > 0.0 { self.radii[0] * self.slopes[0] / m0 } else { 1.0 };
        (m0, if p.is_finite() && p > 0.0 { p } else { 1.0 })
    }

    fn segment(&self, i: usize, r: f64) -> f64 {
        numerics::hermite(
            self.radii[i],
            self.radii[i + 1],
            self.masses[i],
            self.masses[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            r,
        )
    }
}

/// `masses[i]` is the weighted mass of `B_{radii[i]}`. Integrates
/// segment by segment, so each node costs one local adaptive integration.
pub fn cumulative_mass_table(w: &WeightedRadialDensity, radii: &[f64], tol: f64) -> Result<CumulativeMass> {
    if radii.is_empty() {
        return Err(Error::invalid("need at least one radius"));
    }
    let mut masses = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &r in radii {
        if !(r > prev) {
            return Err(Error::invalid("radii must be positive and strictly increasing"));
        }
        acc += annulus_integral(w, prev, r, tol)?;
        masses.push(acc);
        prev = r;
    }
    let slopes = radii.iter().map(|&r| w.mass_slope(r)).collect();
    CumulativeMass::new(radii.to_vec(), masses, Some(slopes))
}

/// Smallest radius enclosing mass `m`. Exact at tabulated masses.
pub fn invert_mass(c: &CumulativeMass, m: f64) -> Result<f64> {
    let total = c.total();
    let slack = 1e-12 * total.max(f64::MIN_POSITIVE);
    if !(m >= 0.0) || m > total + slack {
        return Err(Error::OutOfRange { mass: m, max: total });
    }
    let m = m.min(total);
    if m == 0.0 {
        return Ok(0.0);
    }
    let i = c.masses.partition_point(|&v| v < m);
    if c.masses[i] == m && (i == 0 || c.masses[i - 1] < m) {
        return Ok(c.radii[i]);
    }
    if i == 0 {
        let (m0, p) = c.head();
        return Ok(c.radii[0] * (m / m0).powf(1.0 / p));
    }
    let (a, b) = (c.radii[i - 1], c.radii[i]);
    let r = numerics::bisect(|r| c.segment(i - 1, r) - m, a, b, 1e-15);
    Ok(r.clamp(a, b))
}
