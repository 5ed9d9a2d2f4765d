//! Equimeasurable radial rearrangement of a function with respect to a source
//! and a target measure: `phi*` is radial, nonincreasing, and the target mass
//! of `{phi* > t}` equals the source mass of `{phi > t}` for every level `t`.
//!
//! Radial data is modelled as piecewise linear in `r` between nodes (held
//! constant on `[0, r_0]` without a center value). Planar data lives on a
//! uniform cell grid whose cells carry constant values.

use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::bubble::{self, BubbleParams};
use crate::error::{Error, Result};
use crate::profile::{fmt_f64, RadialProfile};
use crate::quadrature::{annulus_integral, cumulative_mass_table, invert_mass, CumulativeMass, WeightedRadialDensity};
use crate::report::{Contract, DeficitReport};

/// Minimum number of uniformly spaced levels in equimeasurability checks.
pub const LEVELS: usize = 200;

/// Sub-levels inserted between consecutive sampled values when rearranging a
/// non-monotone radial function.
pub const SUBLEVELS: usize = 8;

/// Tolerance of [`equimeasurability_report`], relative to the source total.
pub const EQUIMEASURABILITY_TOL: f64 = 1e-9;


/// Radial measure onto which mass is transported.
#[derive(Debug, Clone)]
pub enum TargetMeasure {
    /// `|x|^{-2 alpha} e^{U_{lambda, alpha}} dx`.
    Bubble(BubbleParams),
    /// `|x|^{-2 alpha} dx`.
    Lebesgue { alpha: f64 },
    Tabulated(CumulativeMass),
}

impl TargetMeasure {
    pub fn mass_within(&self, r: f64) -> f64 {
        match self {
            TargetMeasure::Bubble(p) => bubble::bubble_mass(p, r),
            TargetMeasure::Lebesgue { alpha } => PI * r.powf(2.0 * (1.0 - alpha)) / (1.0 - alpha),
            TargetMeasure::Tabulated(c) => c.mass_at(r),
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            TargetMeasure::Bubble(p) => p.total_mass(),
            TargetMeasure::Lebesgue { .. } => f64::INFINITY,
            TargetMeasure::Tabulated(c) => c.total(),
        }
    }

    /// Radius of the centered ball carrying target mass `m`.
    pub fn radius_for_mass(&self, m: f64) -> Result<f64> {
        if m <= 0.0 {
            return Ok(0.0);
        }
        let exhausted = || Error::TargetExhausted {
            source_mass: m,
            target_mass: self.total(),
        };
        match self {
            TargetMeasure::Bubble(p) => {
                let a = p.total_mass();
                if m >= a {
                    return Err(exhausted());
                }
                let x = 8.0 * m / (a - m);
                Ok((x / (p.lambda() * p.lambda())).powf(1.0 / p.k()))
            }
            TargetMeasure::Lebesgue { alpha } => Ok((m * (1.0 - alpha) / PI).powf(1.0 / (2.0 * (1.0 - alpha)))),
            TargetMeasure::Tabulated(c) => invert_mass(c, m).map_err(|_| exhausted()),
        }
    }
}

/// Source and target of a radial rearrangement.
#[derive(Debug, Clone)]
pub struct MeasurePair {
    pub source: WeightedRadialDensity,
    pub target: TargetMeasure,
}

impl MeasurePair {
    pub fn new(source: WeightedRadialDensity, target: TargetMeasure) -> Self {
        Self { source, target }
    }
}

/// `t -> m({phi > t})`.
pub trait Distribution {
    fn mass_above(&self, t: f64) -> f64;
    fn total_mass(&self) -> f64;
    fn max_value(&self) -> f64;
    fn min_value(&self) -> f64;
}

/// Superlevel mass of a piecewise-linear radial function under the enclosed
/// mass function `mass`.
fn superlevel_mass(nodes: &[f64], values: &[f64], center: Option<f64>, t: f64, mass: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    let (mut a, mut va) = (0.0, center.unwrap_or(values[0]));
    for (&b, &vb) in nodes.iter().zip(values) {
        total += segment_superlevel(a, b, va, vb, t, &mass);
        a = b;
        va = vb;
    }
    total
}

fn segment_superlevel(a: f64, b: f64, va: f64, vb: f64, t: f64, mass: &impl Fn(f64) -> f64) -> f64 {
    match (va > t, vb > t) {
        (true, true) => mass(b) - mass(a),
        (false, false) => 0.0,
        (true, false) => {
            let x = a + (va - t) / (va - vb) * (b - a);
            mass(x) - mass(a)
        }
        (false, true) => {
            let x = a + (t - va) / (vb - va) * (b - a);
            mass(b) - mass(x)
        }
    }
}

/// Distribution function of a radial profile under a weighted source density.
#[derive(Debug, Clone)]
pub struct RadialDistribution {
    profile: RadialProfile,
    source: WeightedRadialDensity,
    table: CumulativeMass,
    tol: f64,
}

impl RadialDistribution {
    pub fn new(phi: &RadialProfile, source: &WeightedRadialDensity, tol: f64) -> Result<Self> {
        Ok(Self {
            profile: phi.clone(),
            source: source.clone(),
            table: cumulative_mass_table(source, phi.nodes(), tol)?,
            tol,
        })
    }

    pub fn table(&self) -> &CumulativeMass {
        &self.table
    }

    /// Source mass of `B_r`: tabulated at nodes, integrated from the node
    /// below elsewhere.
    fn enclosed(&self, r: f64) -> f64 {
        let radii = self.table.radii();
        let i = radii.partition_point(|&a| a < r);
        if i < radii.len() && radii[i] == r {
            return self.table.masses()[i];
        }
        if i == radii.len() {
            return self.table.total();
        }
        let (base, m0) = if i == 0 { (0.0, 0.0) } else { (radii[i - 1], self.table.masses()[i - 1]) };
        annulus_integral(&self.source, base, r, self.tol).map_or_else(|_| self.table.mass_at(r), |m| m0 + m)
    }
}

impl Distribution for RadialDistribution {
    fn mass_above(&self, t: f64) -> f64 {
        let p = &self.profile;
        superlevel_mass(p.nodes(), p.values(), p.center_value(), t, |r| self.enclosed(r))
    }

    fn total_mass(&self) -> f64 {
        self.table.total()
    }

    fn max_value(&self) -> f64 {
        self.profile.max_value()
    }

    fn min_value(&self) -> f64 {
        self.profile.min_value()
    }
}

/// `n x n` uniform cells covering `[-half_width, half_width]^2`, each with a
/// constant value and a nonnegative source mass. Cell `(i, j)` has index
/// `i + n j`, `i` counting along `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid2D {
    n: usize,
    half_width: f64,
    phi: Vec<f64>,
    mass: Vec<f64>,
}

impl CellGrid2D {
    pub fn new(n: usize, half_width: f64, phi: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("cell grids need n >= 2"));
        }
        if !(half_width > 0.0) {
            return Err(Error::invalid("half width must be positive"));
        }
        if phi.len() != n * n || mass.len() != n * n {
            return Err(Error::invalid(format!("expected {} cells", n * n)));
        }
        if let Some(i) = mass.iter().position(|m| !(*m >= 0.0)) {
            return Err(Error::invalid(format!("cell {i} has negative mass")));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cell values must be finite"));
        }
        Ok(Self { n, half_width, phi, mass })
    }

    /// Samples `phi` and `density` at cell centers; cell mass is density times area.
    pub fn from_fn(n: usize, half_width: f64, phi: impl Fn(f64, f64) -> f64, density: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        let mut ph = Vec::with_capacity(n * n);
        let mut ms = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let x = -half_width + (i as f64 + 0.5) * h;
                let y = -half_width + (j as f64 + 0.5) * h;
                ph.push(phi(x, y));
                ms.push(density(x, y) * h * h);
            }
        }
        Self::new(n, half_width, ph, ms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "j", "phi", "mass"])?;
        for j in 0..self.n {
            for i in 0..self.n {
                let c = i + self.n * j;
                w.write_record([i.to_string(), j.to_string(), fmt_f64(self.phi[c]), fmt_f64(self.mass[c])])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `i,j,phi,mass` rows; every cell of the `n x n` grid must appear once.
    pub fn read_csv<R: Read>(reader: R, half_width: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["i", "j", "phi", "mass"] {
            return Err(Error::invalid("cell grid CSV header must be `i,j,phi,mass`"));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let bad = |e: String| Error::invalid(format!("cell row {rec:?}: {e}"));
            let i: usize = rec[0].parse().map_err(|e| bad(format!("{e}")))?;
            let j: usize = rec[1].parse().map_err(|e| bad(format!("{e}")))?;
            let phi: f64 = rec[2].parse().map_err(|e| bad(format!("{e}")))?;
            let mass: f64 = rec[3].parse().map_err(|e| bad(format!("{e}")))?;
            rows.push((i, j, phi, mass));
        }
        let n = (rows.len() as f64).sqrt().round() as usize;
        if n * n != rows.len() {
            return Err(Error::invalid("cell count is not a perfect square"));
        }
        let mut phi = vec![f64::NAN; n * n];
        let mut mass = vec![f64::NAN; n * n];
        for (i, j, p, m) in rows {
            if i >= n || j >= n || !phi[i + n * j].is_nan() {
                return Err(Error::invalid(format!("cell ({i}, {j}) out of range or repeated")));
            }
            phi[i + n * j] = p;
            mass[i + n * j] = m;
        }
        Self::new(n, half_width, phi, mass)
    }
}

/// Distribution of cell data: cells sorted by value, descending, ties kept in
/// index order, with running masses.
#[derive(Debug, Clone)]
pub struct CellDistribution {
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CellDistribution {
    pub fn new(grid: &CellGrid2D) -> Self {
        let mut order: Vec<usize> = (0..grid.phi.len()).collect();
        order.sort_by(|&a, &b| grid.phi[b].total_cmp(&grid.phi[a]));
        let mut cumulative = Vec::with_capacity(order.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for &c in &order {
            acc += grid.mass[c];
            cumulative.push(acc);
        }
        Self {
            values: order.iter().map(|&c| grid.phi[c]).collect(),
            cumulative,
        }
    }

    /// Distinct cell values, descending.
    pub fn jump_levels(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.dedup();
        v
    }
}

impl Distribution for CellDistribution {
    fn mass_above(&self, t: f64) -> f64 {
        self.cumulative[self.values.partition_point(|&v| v > t)]
    }

    fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn max_value(&self) -> f64 {
        self.values[0]
    }

    fn min_value(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

pub fn distribution_function(phi: &RadialProfile, source: &WeightedRadialDensity, tol: f64) -> Result<RadialDistribution> {
    RadialDistribution::new(phi, source, tol)
}

pub fn cell_distribution_function(grid: &CellGrid2D) -> CellDistribution {
    CellDistribution::new(grid)
}

fn is_nonincreasing(p: &RadialProfile) -> bool {
    let head_ok = p.center_value().map_or(true, |c| p.values()[0] <= c);
    head_ok && p.values().windows(2).all(|w| w[1] <= w[0])
}

fn transported(dist: &RadialDistribution, target: &TargetMeasure) -> Result<Vec<(f64, f64)>> {
    dist.table
        .masses()
        .iter()
        .zip(dist.profile.values())
        .map(|(&m, &v)| Ok((target.radius_for_mass(m)?, v)))
        .collect()
}

/// The transport map applied to the nodes of a nonincreasing `phi`: node `r_i`
/// moves to the radius `r*_i` whose target mass equals the source mass of
/// `B_{r_i}`, keeping its value.
pub fn transport_nodes(phi: &RadialProfile, pair: &MeasurePair, tol: f64) -> Result<RadialProfile> {
    if !is_nonincreasing(phi) {
        let v = phi.values();
        let index = if phi.center_value().is_some_and(|c| v[0] > c) {
            0
        } else {
            v.windows(2).position(|w| w[1] > w[0]).map_or(0, |i| i + 1)
        };
        return Err(Error::NotDecreasing {
            index,
            radius: phi.nodes()[index],
        });
    }
    let dist = RadialDistribution::new(phi, &pair.source, tol)?;
    if dist.total_mass() >= pair.target.total() {
        return Err(Error::TargetExhausted {
            source_mass: dist.total_mass(),
            target_mass: pair.target.total(),
        });
    }
    let (mut nodes, mut values) = (Vec::with_capacity(phi.len()), Vec::with_capacity(phi.len()));
    for (r, v) in transported(&dist, &pair.target)? {
        push_node(&mut nodes, &mut values, r, v);
    }
    RadialProfile::new(nodes, values, phi.center_value())
}

/// Radial rearrangement `phi*` of a radial `phi` sampled on `B_R`,
/// `R = phi.r_max()`.
///
/// A nonincreasing `phi` is transported node by node (see [`transport_nodes`])
/// and also tabulated at the uniform levels of [`equimeasurability_report`].
/// Otherwise `phi*` is tabulated at every sampled value plus
/// [`SUBLEVELS`] intermediate levels between consecutive ones, and at the
/// uniform levels of [`equimeasurability_report`].
pub fn rearrange_two_measures(phi: &RadialProfile, pair: &MeasurePair, tol: f64) -> Result<RadialProfile> {
    let dist = RadialDistribution::new(phi, &pair.source, tol)?;
    let total = dist.total_mass();
    if total >= pair.target.total() {
        return Err(Error::TargetExhausted {
            source_mass: total,
            target_mass: pair.target.total(),
        });
    }
    if is_nonincreasing(phi) {
        let mut points = transported(&dist, &pair.target)?;
        let (lo, hi) = (dist.min_value(), dist.max_value());
        for t in uniform_levels(lo, hi) {
            if t > lo && t < hi {
                points.push((pair.target.radius_for_mass(dist.mass_above(t))?, t));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let (mut nodes, mut values) = (Vec::with_capacity(points.len()), Vec::with_capacity(points.len()));
        for (r, v) in points {
            push_node(&mut nodes, &mut values, r, v);
        }
        return RadialProfile::new(nodes, values, phi.center_value());
    }
    let mut levels: Vec<f64> = phi.values().iter().copied().chain(phi.center_value()).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let mut fine = Vec::with_capacity(levels.len() * SUBLEVELS + LEVELS);
    for w in levels.windows(2) {
        for s in 0..SUBLEVELS {
            fine.push(w[0] + (w[1] - w[0]) * s as f64 / SUBLEVELS as f64);
        }
    }
    fine.push(*levels.last().unwrap());
    fine.extend(uniform_levels(dist.min_value(), dist.max_value()));
    fine.sort_by(|a, b| b.total_cmp(a));
    fine.dedup();
    let top = levels[0];
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for &t in &fine[1..] {
        let r = pair.target.radius_for_mass(dist.mass_above(t))?;
        push_node(&mut nodes, &mut values, r, t);
    }
    let last = pair.target.radius_for_mass(total)?;
    push_node(&mut nodes, &mut values, last, *levels.last().unwrap());
    RadialProfile::new(nodes, values, Some(top))
}

/// Appends `(r, v)` keeping radii strictly increasing; a repeated radius keeps
/// the lower value so the profile stays nonincreasing.
fn push_node(nodes: &mut Vec<f64>, values: &mut Vec<f64>, r: f64, v: f64) {
    if !(r > 0.0) {
        return;
    }
    match nodes.last() {
        Some(&last) if r <= last => {
            let lv = values.last_mut().unwrap();
            *lv = lv.min(v);
        }
        _ => {
            nodes.push(r);
            values.push(v);
        }
    }
}

/// Rearrangement of cell data onto `shells` equal-width radial shells of the
/// ball carrying the whole source mass. Shell `j` spans `(r_{j-1}, r_j]` and
/// takes the value `sup { t : T(r_{j-1}) < m(t) }`, so `phi*` is stored with
/// one node per outer shell radius.
pub fn rearrange_cells(grid: &CellGrid2D, target: &TargetMeasure, shells: usize) -> Result<RadialProfile> {
    if shells < 1 {
        return Err(Error::invalid("need at least one shell"));
    }
    let dist = CellDistribution::new(grid);
    let total = dist.total_mass();
    if !(total > 0.0) {
        return Err(Error::invalid("cell grid carries no mass"));
    }
    if total >= target.total() {
        return Err(Error::TargetExhausted {
            source_mass: total,
            target_mass: target.total(),
        });
    }
    let outer = target.radius_for_mass(total)?;
    let mut nodes = Vec::with_capacity(shells);
    let mut values = Vec::with_capacity(shells);
    for j in 1..=shells {
        let inner_mass = target.mass_within(outer * (j - 1) as f64 / shells as f64);
        // m(t) > inner_mass exactly when t is below the value of the first cell
        // whose running mass exceeds inner_mass.
        let k = dist.cumulative.partition_point(|&c| c <= inner_mass);
        let value = dist.values[k.clamp(1, dist.values.len()) - 1];
        nodes.push(outer * j as f64 / shells as f64);
        values.push(value);
    }
    RadialProfile::new(nodes, values, None)
}

/// Target mass of `{phi* > t}` when `phi*` is read as a shell step function:
/// constant on each `(r_{j-1}, r_j]`.
fn shell_mass_above(phi_star: &RadialProfile, target: &TargetMeasure, t: f64) -> f64 {
    let count = phi_star.values().partition_point(|&v| v > t);
    if count == 0 {
        0.0
    } else {
        target.mass_within(phi_star.nodes()[count - 1])
    }
}

fn uniform_levels(lo: f64, hi: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let mut levels: Vec<f64> = (0..LEVELS).map(|i| lo + (hi - lo) * i as f64 / (LEVELS - 1) as f64).collect();
    levels[LEVELS - 1] = hi;
    levels
}

/// Largest level-wise mismatch between source and target superlevel masses,
/// relative to the source total, over [`LEVELS`] uniform levels plus every
/// sampled value when there are fewer than [`LEVELS`] of them.
pub fn equimeasurability_report(phi: &RadialProfile, phi_star: &RadialProfile, pair: &MeasurePair, tol: f64) -> Result<DeficitReport> {
    let dist = RadialDistribution::new(phi, &pair.source, tol)?;
    let mut levels = uniform_levels(dist.min_value(), dist.max_value());
    let mut sampled: Vec<f64> = phi.values().iter().copied().chain(phi.center_value()).collect();
    sampled.sort_by(f64::total_cmp);
    sampled.dedup();
    if sampled.len() < LEVELS {
        levels.extend(sampled);
    }
    let total = dist.total_mass();
    let scale = if total > 0.0 { total } else { 1.0 };
    let worst = levels
        .iter()
        .map(|&t| {
            let src = dist.mass_above(t);
            let tgt = superlevel_mass(phi_star.nodes(), phi_star.values(), phi_star.center_value(), t, |r| {
                pair.target.mass_within(r)
            });
            (tgt - src).abs() / scale
        })
        .fold(0.0, f64::max);
    Ok(DeficitReport::new("equimeasurability", worst, 0.0, EQUIMEASURABILITY_TOL, Contract::Zero)
        .input("levels", levels.len())
        .input("source_mass", total)
        .with_alpha(pair.source.alpha()))
}

/// Equimeasurability of a shell rearrangement of cell data. Both superlevel
/// masses are step functions of `t` that jump only at cell and shell values,
/// so evaluating at those values (plus [`LEVELS`] uniform levels) yields the
/// exact supremum. The tolerance is the first-order bound `2 / shells`.
pub fn equimeasurability_report_cells(grid: &CellGrid2D, phi_star: &RadialProfile, target: &TargetMeasure) -> DeficitReport {
    let dist = CellDistribution::new(grid);
    let mut levels = uniform_levels(dist.min_value(), dist.max_value());
    levels.extend(dist.jump_levels());
    levels.extend(phi_star.values());
    levels.push(dist.min_value() - 1.0);
    let total = dist.total_mass();
    let worst = levels
        .iter()
        .map(|&t| (shell_mass_above(phi_star, target, t) - dist.mass_above(t)).abs() / total)
        .fold(0.0, f64::max);
    let shells = phi_star.len();
    DeficitReport::new("equimeasurability_cells", worst, 0.0, 2.0 / shells as f64, Contract::Zero)
        .input("n", grid.n())
        .input("shells", shells)
        .input("levels", levels.len())
}

/// Level-by-level comparison of `int_{phi* = t} |grad phi*|` with
/// `int_{phi = t} |grad phi|` for a radial nonincreasing `phi`: at the level of
/// node `r_i` these are `2 pi r*_i |phi*'(r*_i)|` and `2 pi r_i |phi'(r_i)|`,
/// both from five-point differences. `deficit = max_i (lhs_i - rhs_i)`,
/// expected `<= tolerance`, with zero gap when the source measure is itself a
/// bubble measure of the same order.
pub fn gradient_level_check(phi: &RadialProfile, pair: &MeasurePair, tol: f64) -> Result<DeficitReport> {
    if let Some(index) = phi.first_non_decrease() {
        return Err(Error::NotDecreasing {
            index,
            radius: phi.nodes()[index],
        });
    }
    let star = transport_nodes(phi, pair, tol)?;
    if star.len() != phi.len() {
        return Err(Error::invalid("rearranged profile lost nodes; refine the source grid"));
    }
    let d = phi.derivative();
    let ds = star.derivative();
    let mut worst = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0);
    let mut scale: f64 = 0.0;
    for i in 0..phi.len() {
        let rhs = 2.0 * PI * phi.nodes()[i] * d[i].abs();
        let lhs = 2.0 * PI * star.nodes()[i] * ds[i].abs();
        scale = scale.max(rhs);
        if lhs - rhs > worst {
            worst = lhs - rhs;
            at = (lhs, rhs);
        }
    }
    Ok(DeficitReport::new("gradient_level_check", at.0, at.1, 1e-6 * scale.max(1.0), Contract::NonPositive)
        .input("nodes", phi.len())
        .input("worst_gap", worst)
        .with_alpha(pair.source.alpha()))
}
