//! The `verify-all` suites. Each suite is a pure function of the config and
//! returns one report; reports are written as `<suite>.json`.

use std::f64::consts::PI;
use std::fmt::Display;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sphere_covering::bol::{self, GeneratorMode, MassBranch, GENERATOR_NODES};
use sphere_covering::bubble::{self, BubbleParams};
use sphere_covering::meanfield::{self, Atom, DiskTarget, Domain, Region, SingularData};
use sphere_covering::onsager::{self, OnsagerParams, B_MARGIN};
use sphere_covering::profile::{geometric_grid, RadialProfile};
use sphere_covering::quadrature::{self, WeightedRadialDensity};
use sphere_covering::rearrange::{self, CellGrid2D, Distribution, MeasurePair, TargetMeasure};
use sphere_covering::report::{Contract, DeficitReport, Verdict};
use sphere_covering::Result;

use crate::coverage;
use crate::json::render;

pub const SUITES: [&str; 7] = ["bubble", "quadrature", "rearrange", "bol", "thresholds", "onsager", "shooting"];

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;
pub const DEFAULT_CORPUS_SIZE: usize = 500;
pub const DEFAULT_CELL_GRIDS: [usize; 3] = [32, 64, 128];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Requested accuracy of the quadrature suite's integrals.
    pub quadrature_tol: f64,
    /// Bol corpus draws per alpha, each giving one interior and one exterior profile.
    pub corpus_size: usize,
    /// Cell-grid resolutions for the first-order decay check.
    pub cell_grids: Vec<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            quadrature_tol: DEFAULT_QUADRATURE_TOL,
            corpus_size: DEFAULT_CORPUS_SIZE,
            cell_grids: DEFAULT_CELL_GRIDS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<DeficitReport>,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub seed: u64,
    pub reports: Vec<SuiteReport>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn first_failure(&self) -> Option<&DeficitReport> {
        self.reports.iter().flat_map(|r| &r.checks).find(|c| !c.passed())
    }

    /// Per-suite verdicts and the invariant coverage manifest.
    pub fn summary(&self) -> Value {
        let suites: Vec<Value> = self
            .reports
            .iter()
            .map(|r| {
                json!({
                    "suite": r.suite,
                    "passed": r.passed,
                    "checks": r.checks.len(),
                    "failed": r.checks.iter().filter(|c| !c.passed()).count(),
                    "file": format!("{}.json", r.suite),
                })
            })
            .collect();
        let covered = coverage::coverage(&self.reports);
        let manifest: Vec<Value> = coverage::INVARIANTS
            .iter()
            .map(|inv| {
                let by: Value = if inv.tests_only {
                    json!(["integration tests"])
                } else {
                    json!(covered.get(inv.id).cloned().unwrap_or_default())
                };
                json!({"id": inv.id, "module": inv.module, "statement": inv.statement, "covered_by": by})
            })
            .collect();
        json!({
            "seed": self.seed,
            "passed": self.passed(),
            "suites": suites,
            "coverage": manifest,
        })
    }
}

pub fn run_suite(config: &SuiteConfig) -> SuiteOutcome {
    let reports = std::thread::scope(|s| {
        let handles: Vec<_> = SUITES.iter().map(|&name| s.spawn(move || run_one(name, config))).collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    });
    SuiteOutcome { seed: config.seed, reports }
}

pub fn run_one(name: &str, config: &SuiteConfig) -> SuiteReport {
    let checks = match name {
        "bubble" => bubble_suite(config),
        "quadrature" => quadrature_suite(config),
        "rearrange" => rearrange_suite(config),
        "bol" => bol_suite(config),
        "thresholds" => thresholds_suite(config),
        "onsager" => onsager_suite(config),
        "shooting" => shooting_suite(config),
        other => panic!("unknown suite {other}"),
    };
    SuiteReport {
        suite: name.to_string(),
        seed: config.seed,
        passed: checks.iter().all(DeficitReport::passed),
        checks,
    }
}

/// Writes one report per suite into `dir`, creating it if needed.
pub fn write_reports(outcome: &SuiteOutcome, dir: &Path, pretty: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    outcome
        .reports
        .iter()
        .map(|r| {
            let path = dir.join(format!("{}.json", r.suite));
            fs::write(&path, render(r, pretty))?;
            Ok(path)
        })
        .collect()
}

fn rng_for(config: &SuiteConfig, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    rng
}

#[derive(Default)]
struct Checks {
    items: Vec<DeficitReport>,
}

impl Checks {
    fn push(&mut self, invariant: &str, report: DeficitReport) {
        self.items.push(report.input("invariant", invariant));
    }

    fn result(&mut self, invariant: &str, op: &str, report: Result<DeficitReport>) {
        match report {
            Ok(r) => self.push(invariant, r),
            Err(e) => self.push(invariant, failure(op, e)),
        }
    }

    /// Passes when the measured `error` is at most `bound`.
    fn within(&mut self, invariant: &str, op: &str, error: f64, bound: f64) -> &mut DeficitReport {
        self.push(invariant, DeficitReport::new(op, error, 0.0, bound, Contract::NonPositive));
        self.items.last_mut().expect("just pushed")
    }

    /// Passes when no sample violated the property.
    fn count(&mut self, invariant: &str, op: &str, violations: usize, samples: usize) -> &mut DeficitReport {
        let r = DeficitReport::new(op, violations as f64, 0.0, 0.0, Contract::Zero).input("samples", samples);
        self.push(invariant, r);
        self.items.last_mut().expect("just pushed")
    }

    fn finish(self) -> Vec<DeficitReport> {
        self.items
    }
}

fn failure(op: &str, err: impl Display) -> DeficitReport {
    DeficitReport::new(op, f64::NAN, 0.0, 0.0, Contract::Zero).warn(err.to_string())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

fn bp(lambda: f64, alpha: f64) -> Result<BubbleParams> {
    BubbleParams::new(lambda, alpha)
}

/// The 10 x 4 x 3 grid shared by the bubble and covering checks.
fn paired_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for l in log_grid(-1.0, 2.0, 10) {
        for alpha in [0.0, 0.25, 0.5, 0.75] {
            for r in [0.5, 1.0, 2.0] {
                out.push((l, alpha, r));
            }
        }
    }
    out
}

fn bubble_suite(config: &SuiteConfig) -> Vec<DeficitReport> {
    let mut c = Checks::default();
    let mut rng = rng_for(config, 1);
    let alphas = [0.0, 0.25, 0.5, 0.9];

    let mut violations = 0;
    let mut samples = 0;
    for &alpha in &alphas {
        for r in [0.5, 1.0, 2.0] {
            let mut prev = 0.0;
            for l in log_grid(-3.0, 3.0, 100) {
                let m = bubble::bubble_mass(&BubbleParams::new(l, alpha).expect("grid parameters are valid"), r);
                if !(m > prev && m < bubble::total_mass(alpha)) {
                    violations += 1;
                }
                prev = m;
                samples += 1;
            }
        }
    }
    c.count("bubble.mass_monotone", "mass_monotone", violations, samples);

    let mut triples = paired_grid();
    for _ in 0..200 {
        triples.push((10f64.powf(rng.gen_range(-2.0..2.0)), rng.gen_range(0.0..0.99), rng.gen_range(0.05..20.0)));
    }
    let (mut sum_err, mut match_err, mut bol_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut order_violations = 0;
    for &(l1, alpha, r) in &triples {
        let l2 = bubble::pair_lambda(l1, alpha, r);
        let (p1, p2) = (BubbleParams::new(l1, alpha).expect("valid"), BubbleParams::new(l2, alpha).expect("valid"));
        let (m1, m2) = (bubble::bubble_mass(&p1, r), bubble::bubble_mass(&p2, r));
        sum_err = sum_err.max(rel(m1 + m2, bubble::total_mass(alpha)));
        let (u1, u2) = (bubble::eval_bubble(&p1, r), bubble::eval_bubble(&p2, r));
        match_err = match_err.max((u1 - u2).abs() / (1.0 + u1.abs()));
        let b = bubble::boundary_root_integral(&p1, r);
        bol_err = bol_err.max(rel(b * b, 0.5 * m1 * (bubble::total_mass(alpha) - m1)));
        if (l2 - l1).abs() > 1e-6 * l1 {
            let (lo, hi) = if l1 < l2 { (&p1, &p2) } else { (&p2, &p1) };
            order_violations += (1..50)
                .filter(|i| {
                    let s = r * *i as f64 / 50.0;
                    bubble::eval_bubble(hi, s) <= bubble::eval_bubble(lo, s)
                })
                .count();
        }
    }
    c.within("bubble.mass_sum", "paired_mass_sum", sum_err, 1e-10).inputs.insert("triples".into(), triples.len().into());
    c.within("bubble.boundary_match", "paired_boundary_match", match_err, 1e-12);
    c.within("bubble.bol_equality", "bol_equality_on_bubbles", bol_err, 1e-9);
    c.count("bubble.ordering", "paired_ordering", order_violations, triples.len() * 49);

    let analytic = geometric_grid(1e-6, 10.0, 2000);
    let fd = geometric_grid(1e-4, 10.0, 4000);
    let (mut worst_analytic, mut worst_fd) = (0.0f64, 0.0f64);
    for l in log_grid(-1.0, 1.0, 10) {
        for &alpha in &alphas {
            let p = BubbleParams::new(l, alpha).expect("valid");
            worst_analytic = worst_analytic.max(bubble::bubble_residual(&p, &analytic));
            worst_fd = worst_fd.max(bubble::bubble_residual_fd(&p, &fd));
        }
    }
    c.within("bubble.residuals", "analytic_residual", worst_analytic, 1e-12);
    c.within("bubble.residuals", "finite_difference_residual", worst_fd, 1e-6);

    for &alpha in &alphas {
        let mut worst = 0.0f64;
        for l in [0.1, 1.0, 7.0, 40.0] {
            for r in [0.3, 1.0, 5.0] {
                let p = BubbleParams::new(l, alpha).expect("valid");
                match quadrature::annulus_integral(&p.density(), 0.0, r, 1e-12) {
                    Ok(q) => worst = worst.max(rel(q, bubble::bubble_mass(&p, r))),
                    Err(_) => worst = f64::NAN,
                }
            }
        }
        let bound = if alpha == 0.0 { 1e-10 } else { 1e-6 };
        c.within("bubble.mass_quadrature", "mass_closed_form_vs_quadrature", worst, bound).inputs.insert("alpha".into(), alpha.into());
    }
    c.finish()
}

fn quadrature_suite(config: &SuiteConfig) -> Vec<DeficitReport> {
    let mut c = Checks::default();
    let mut rng = rng_for(config, 2);
    let tol = config.quadrature_tol;

    let mut worst = 0.0f64;
    let mut error = None;
    for _ in 0..20 {
        let p = BubbleParams::new(10f64.powf(rng.gen_range(-0.7..0.7)), rng.gen_range(0.0..0.9)).expect("valid");
        let radii = geometric_grid(1e-3, 3.0, 60);
        match quadrature::cumulative_mass_table(&p.density(), &radii, tol) {
            Ok(t) => {
                for (r, m) in radii.iter().zip(t.masses()) {
                    match quadrature::invert_mass(&t, *m) {
                        Ok(back) => worst = worst.max(rel(back, *r)),
                        Err(e) => error = Some(e.to_string()),
                    }
                }
            }
            Err(e) => error = Some(e.to_string()),
        }
    }
    record(&mut c, "quadrature.round_trip", "table_round_trip", worst, 1e-9, error, tol);

    let mut worst = 0.0f64;
    let mut error = None;
    for _ in 0..50 {
        let w = BubbleParams::new(10f64.powf(rng.gen_range(-0.7..0.7)), rng.gen_range(0.0..0.9)).expect("valid").density();
        let r1 = rng.gen_range(0.01..2.0);
        let r2 = r1 + rng.gen_range(0.01..2.0);
        let parts = (|| -> Result<(f64, f64, f64)> {
            Ok((
                quadrature::annulus_integral(&w, 0.0, r1, tol)?,
                quadrature::annulus_integral(&w, r1, r2, tol)?,
                quadrature::annulus_integral(&w, 0.0, r2, tol)?,
            ))
        })();
        match parts {
            Ok((a, b, whole)) => worst = worst.max(rel(a + b, whole)),
            Err(e) => error = Some(e.to_string()),
        }
    }
    record(&mut c, "quadrature.additivity", "annulus_additivity", worst, 10.0 * tol, error, tol);

    let mut worst = 0.0f64;
    let mut error = None;
    for _ in 0..50 {
        let alpha = rng.gen_range(0.0..0.95);
        let coeffs: [f64; 3] = [rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)];
        let r = rng.gen_range(0.1..3.0);
        let w = WeightedRadialDensity::new(alpha, move |s| s.powf(2.0 * alpha) * (coeffs[0] + coeffs[1] * s * s + coeffs[2] * s.powi(4))).expect("valid alpha");
        let x = r * r;
        let exact = PI * (coeffs[0] * x + coeffs[1] * x * x / 2.0 + coeffs[2] * x * x * x / 3.0);
        match quadrature::annulus_integral(&w, 0.0, r, tol) {
            Ok(q) => worst = worst.max(rel(q, exact)),
            Err(e) => error = Some(e.to_string()),
        }
    }
    record(&mut c, "quadrature.exactness", "polynomial_exactness", worst, 1e-12, error, tol);
    c.finish()
}

fn record(c: &mut Checks, invariant: &str, op: &str, worst: f64, bound: f64, error: Option<String>, tol: f64) {
    let r = c.within(invariant, op, if error.is_some() { f64::NAN } else { worst }, bound);
    r.inputs.insert("quadrature_tol".into(), tol.into());
    if let Some(e) = error {
        r.warnings.push(e);
    }
}

/// Non-monotone radial data: a cone plus an oscillation.
fn wavy(a: f64, b: f64, w: f64, lift: f64) -> Result<RadialProfile> {
    RadialProfile::from_fn(geometric_grid(1e-3, 1.0, 300), Some(a + lift), move |r| a * (1.0 - r) + b * (w * r).sin() + lift * (1.0 + r))
}

fn skewed_cells(n: usize) -> Result<CellGrid2D> {
    CellGrid2D::from_fn(n, 1.0, |x, y| (-(x - 0.2).powi(2) - 2.0 * y * y).exp() + 0.1 * x, |_, _| 1.0)
}

fn rearrange_suite(config: &SuiteConfig) -> Vec<DeficitReport> {
    let mut c = Checks::default();
    let mut rng = rng_for(config, 3);
    let tol = 1e-12;

    let mut monotone_violations = 0;
    let mut mass_err = 0.0f64;
    let mut order_violations = 0;
    let mut samples = 0;
    let mut error = None;
    for _ in 0..40 {
        let (a, b, w) = (rng.gen_range(0.1..2.0), rng.gen_range(0.0..3.0), rng.gen_range(1.0..9.0));
        let (l, alpha) = (rng.gen_range(0.5..3.0), rng.gen_range(0.0..0.8));
        let gap = rng.gen_range(0.0..1.0);
        let outcome = (|| -> Result<()> {
            let phi = wavy(a, b, w, 0.0)?;
            let source = BubbleParams::new(l, alpha)?.density();
            let target = TargetMeasure::Lebesgue { alpha };
            let pair = MeasurePair::new(source, target.clone());
            let star = rearrange::rearrange_two_measures(&phi, &pair, tol)?;
            monotone_violations += star.values().windows(2).filter(|v| v[1] > v[0]).count();
            let total = rearrange::distribution_function(&phi, &pair.source, tol)?.total_mass();
            mass_err = mass_err.max(rel(target.mass_within(star.r_max()), total));

            let hi = wavy(a, b.min(1.0), w, gap)?;
            let lo = wavy(a, b.min(1.0), w, 0.0)?;
            let pair = MeasurePair::new(WeightedRadialDensity::constant(0.0, 1.0)?, TargetMeasure::Bubble(bp(2.0, 0.0)?));
            let s_lo = rearrange::rearrange_two_measures(&lo, &pair, tol)?;
            let s_hi = rearrange::rearrange_two_measures(&hi, &pair, tol)?;
            let reach = s_lo.r_max().min(s_hi.r_max());
            let lo_at = s_lo.interpolant();
            order_violations += s_hi
                .nodes()
                .iter()
                .zip(s_hi.values())
                .filter(|(r, v)| **r <= reach && lo_at.eval(**r) > **v + 1e-9 * (1.0 + v.abs()))
                .count();
            samples += 1;
            Ok(())
        })();
        if let Err(e) = outcome {
            error = Some(e.to_string());
        }
    }
    let errored = usize::from(error.is_some());
    c.count("rearrange.monotone", "rearranged_profiles_nonincreasing", monotone_violations + errored, samples);
    c.within("rearrange.mass_conservation", "rearranged_mass_conservation", if error.is_some() { f64::NAN } else { mass_err }, 1e-9);
    let r = c.count("rearrange.order_preservation", "rearrangement_order_preservation", order_violations + errored, samples);
    if let Some(e) = &error {
        r.warnings.push(e.clone());
    }

    let target = TargetMeasure::Lebesgue { alpha: 0.0 };
    let mut previous: Option<f64> = None;
    for &n in &config.cell_grids {
        let report = (|| -> Result<DeficitReport> {
            let grid = skewed_cells(n)?;
            let star = rearrange::rearrange_cells(&grid, &target, n)?;
            Ok(rearrange::equimeasurability_report_cells(&grid, &star, &target))
        })();
        match report {
            Ok(r) => {
                let mismatch = r.lhs;
                c.within("rearrange.first_order_decay", "cell_mismatch_below_two_over_n", mismatch, 2.0 / n as f64)
                    .inputs
                    .insert("n".into(), n.into());
                if let Some(prev) = previous {
                    let ratio = prev / mismatch;
                    let r = DeficitReport::new("cell_mismatch_halving_ratio", ratio, 2.0, 0.5, Contract::Zero).input("n", n);
                    c.push("rearrange.first_order_decay", r);
                }
                previous = Some(mismatch);
            }
            Err(e) => c.push("rearrange.first_order_decay", failure("cell_mismatch", e)),
        }
    }

    let identity = (|| -> Result<DeficitReport> {
        let p = bp(2.0, 0.3)?;
        let phi = RadialProfile::from_fn(geometric_grid(1e-5, 1.5, 1500), Some(bubble::eval_bubble(&p, 0.0)), |r| bubble::eval_bubble(&p, r))?;
        let pair = MeasurePair::new(p.density(), TargetMeasure::Bubble(p));
        let moved = rearrange::transport_nodes(&phi, &pair, tol)?;
        if moved.len() != phi.len() {
            return Err(sphere_covering::Error::InvalidInput("transport merged nodes".into()));
        }
        let shift = phi
            .nodes()
            .iter()
            .zip(moved.nodes())
            .map(|(a, b)| rel(*a, *b))
            .chain(phi.values().iter().zip(moved.values()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        Ok(DeficitReport::new("identity_transport", shift, 0.0, 1e-9, Contract::NonPositive))
    })();
    c.result("rearrange.identity", "identity_transport", identity);
    c.finish()
}

#[derive(Default)]
struct CorpusTally {
    draws: usize,
    failures: usize,
    equality_mismatches: usize,
    bubbles: usize,
    worst: f64,
    error: Option<String>,
}

impl CorpusTally {
    fn add(&mut self, report: Result<DeficitReport>, is_bubble: bool, sign: f64) {
        self.draws += 1;
        match report {
            Ok(r) => {
                if !r.passed() {
                    self.failures += 1;
                }
                if r.is_equality() != is_bubble {
                    self.equality_mismatches += 1;
                }
                let scale = r.lhs.abs().max(r.rhs.abs()).max(f64::MIN_POSITIVE);
                // Most negative signed deficit per unit scale.
                self.worst = self.worst.min(sign * r.deficit / scale);
            }
            Err(e) => {
                self.failures += 1;
                self.error.get_or_insert(e.to_string());
            }
        }
        if is_bubble {
            self.bubbles += 1;
        }
    }

    fn push(self, c: &mut Checks, invariant: &str, op: &str, alpha: f64) {
        let r = c.count(invariant, op, self.failures, self.draws);
        r.inputs.insert("alpha".into(), alpha.into());
        r.inputs.insert("worst_normalized_deficit".into(), self.worst.into());
        if let Some(e) = self.error {
            r.warnings.push(e);
        }
        c.count("bol.equality_iff_bubble", &format!("{op}_equality_iff_bubble"), self.equality_mismatches, self.draws)
            .inputs
            .extend([("alpha".to_string(), alpha.into()), ("bubbles".to_string(), self.bubbles.into())]);
    }
}

fn bol_suite(config: &SuiteConfig) -> Vec<DeficitReport> {
    let mut c = Checks::default();
    let base = config.seed.wrapping_mul(10_000);

    for alpha in [0.0, 0.25, 0.5, 0.75] {
        let mut interior = CorpusTally::default();
        let mut exterior = CorpusTally::default();
        let mut between = 0;
        let mut alternatives = 0;
        for i in 0..config.corpus_size as u64 {
            let seed = base.wrapping_add(i);
            let mode = if i % 2 == 0 { GeneratorMode::Shift } else { GeneratorMode::SubunitCurvature };
            match bol::generate_test_profile(seed, alpha, mode) {
                Ok(g) => {
                    interior.add(bol::bol_deficit_interior(&g.admissible), g.spec.is_bubble(), 1.0);
                    let adm = &g.admissible;
                    if let Some((l1, _)) = bubble::lambdas_through(adm.boundary_value(), alpha, adm.radius()) {
                        alternatives += 1;
                        if !matches!(bol::mass_alternative(adm, l1, 1e-9), Ok(MassBranch::Low | MassBranch::High)) {
                            between += 1;
                        }
                    }
                }
                Err(e) => interior.add(Err(e), false, 1.0),
            }
            match bol::generate_exterior_profile(seed, alpha, mode) {
                Ok(g) => exterior.add(bol::exterior_report(&g.exterior), g.spec.is_bubble(), -1.0),
                Err(e) => exterior.add(Err(e), false, -1.0),
            }
        }
        interior.push(&mut c, "bol.interior_corpus", "interior_bol_corpus", alpha);
        exterior.push(&mut c, "bol.exterior_corpus", "exterior_bol_corpus", alpha);
        c.count("bol.mass_alternative", "mass_alternative_never_between", between, alternatives)
            .inputs
            .insert("alpha".into(), alpha.into());
    }

    for alpha in [0.0, 0.5] {
        for shift in [0.05, 0.1, 0.5] {
            let report = (|| -> Result<DeficitReport> {
                let p = bp(2.0, alpha)?;
                let psi = bol::shift_profile(&p, shift, 1.0, GENERATOR_NODES)?;
                let r = bol::bol_deficit_interior(&bol::check_differential_inequality(&psi, alpha, 1.0)?)?;
                let m0 = bubble::bubble_mass(&p, 1.0);
                let expected = 0.5 * m0 * m0 * shift.exp() * (shift.exp() - 1.0);
                Ok(DeficitReport::new("shifted_bubble_closed_form", rel(r.deficit, expected), 0.0, 1e-6, Contract::NonPositive)
                    .input("shift", shift)
                    .input("deficit", r.deficit)
                    .input("closed_form", expected)
                    .with_alpha(alpha))
            })();
            c.result("bol.shift_closed_form", "shifted_bubble_closed_form", report);
        }
    }

    let mut mismatches = 0;
    let grid = paired_grid();
    for &(l1, alpha, r) in &grid {
        let l2 = bubble::pair_lambda(l1, alpha, r);
        let m1 = bubble::bubble_mass(&BubbleParams::new(l1, alpha).expect("valid"), r);
        let m2 = bubble::bubble_mass(&BubbleParams::new(l2, alpha).expect("valid"), r);
        if !bol::covering_deficit(m1, m2, alpha, 1e-10).is_equality() {
            mismatches += 1;
        }
    }
    c.count("bol.covering_paired_grid", "covering_deficit_zero_on_paired_bubbles", mismatches, grid.len());

    let perturbed = (|| -> Result<DeficitReport> {
        let u2 = bol::shift_profile(&bp(4.0, 0.0)?, 0.1, 1.0, GENERATOR_NODES)?;
        let m2 = quadrature::annulus_integral(&WeightedRadialDensity::exp_of_profile(&u2, 0.0)?, 0.0, 1.0, 1e-11)?;
        let d = bol::covering_deficit(8.0 * PI / 3.0, m2, 0.0, 1e-10);
        Ok(DeficitReport::new("covering_deficit_perturbed", d.deficit, 1e-3, 0.0, Contract::NonNegative).input("shift", 0.1))
    })();
    c.result("bol.covering_perturbed", "covering_deficit_perturbed", perturbed);
    c.finish()
}

fn thresholds_suite(config: &SuiteConfig) -> Vec<DeficitReport> {
    let mut c = Checks::default();
    let mut rng = rng_for(config, 5);

    let exact = |c: &mut Checks, op: &str, value: Option<f64>, expected: f64| {
        let v = value.unwrap_or(f64::NAN);
        c.push(
            "meanfield.threshold_examples",
            DeficitReport::new(op, v, expected, 4.0 * f64::EPSILON * expected.abs(), Contract::Zero),
        );
    };
    match meanfield::thresholds(&[-0.5, -0.5, -0.5], Domain::Sphere) {
        Ok(t) => {
            exact(&mut c, "sphere_three_half_orders_uniqueness", t.sphere_uniqueness, 2.0 * PI);
            exact(&mut c, "sphere_three_half_orders_coercivity", Some(t.coercivity), 4.0 * PI);
            c.count("meanfield.threshold_examples", "sphere_three_half_orders_necessity", usize::from(t.necessity_ok != Some(true)), 1);
        }
        Err(e) => c.push("meanfield.threshold_examples", failure("sphere_three_half_orders", e)),
    }
    match meanfield::thresholds(&[], Domain::Sphere) {
        Ok(t) => exact(&mut c, "sphere_no_atoms_uniqueness", t.sphere_uniqueness, 8.0 * PI),
        Err(e) => c.push("meanfield.threshold_examples", failure("sphere_no_atoms", e)),
    }
    match meanfield::thresholds(&[-0.25, -0.25], Domain::Disk) {
        Ok(t) => {
            exact(&mut c, "disk_half_total_order_uniqueness", t.disk_uniqueness, 4.0 * PI);
            exact(&mut c, "disk_half_total_order_coercivity", Some(t.coercivity), 6.0 * PI);
        }
        Err(e) => c.push("meanfield.threshold_examples", failure("disk_half_total_order", e)),
    }
    // Orders summing to -2.4 violate the necessary condition.
    match meanfield::thresholds(&[-0.8, -0.8, -0.8], Domain::Sphere) {
        Ok(t) => {
            c.count("meanfield.threshold_examples", "necessity_flag_below_minus_two", usize::from(t.necessity_ok != Some(false)), 1);
        }
        Err(e) => c.push("meanfield.threshold_examples", failure("necessity_flag_below_minus_two", e)),
    }

    let mut mismatches = 0;
    let (mut below, mut above) = (0, 0);
    for _ in 0..400 {
        // Equal orders with N >= 3 always fall below; mixed orders and N < 3 reach the other branch.
        let n = rng.gen_range(1..8usize);
        let orders: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.999..-0.001)).collect();
        let sum: f64 = orders.iter().sum();
        let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
        match meanfield::thresholds(&orders, Domain::Sphere) {
            Ok(t) => {
                let u = t.sphere_uniqueness.unwrap_or(f64::NAN);
                let claim = 4.0 * PI * (2.0 + sum) < 8.0 * PI * (1.0 + min);
                if (u < t.coercivity) != claim {
                    mismatches += 1;
                }
                if claim {
                    below += 1;
                } else {
                    above += 1;
                }
            }
            Err(_) => mismatches += 1,
        }
    }
    // Both branches must actually be exercised.
    let unseen = usize::from(below == 0) + usize::from(above == 0);
    c.count("meanfield.threshold_algebra", "threshold_algebra", mismatches + unseen, 400)
        .inputs
        .extend([("below".to_string(), below.into()), ("above".to_string(), above.into())]);

    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..300 {
        let n = rng.gen_range(0..5usize);
        let orders: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.99..-0.01)).collect();
        let sum: f64 = orders.iter().sum();
        if sum <= -2.0 {
            continue;
        }
        let rho = rng.gen_range(0.01..0.99) * 4.0 * PI * (2.0 + sum);
        let atoms: Vec<Atom> = orders
            .iter()
            .map(|&order| {
                let (t, r) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.01..4.0));
                Atom {
                    order,
                    location: [r * t.cos(), r * t.sin()],
                }
            })
            .collect();
        let (r1, r2) = (rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0));
        let outcome = (|| -> Result<(f64, f64, f64)> {
            let data = SingularData::new(atoms, meanfield::smooth_exponent(rho, &orders))?;
            let (w1, w2) = (Region::half_disk(r1, true)?, Region::half_disk(r2, false)?);
            let alpha = meanfield::alpha_region(&data, &w1) + meanfield::alpha_region(&data, &w2);
            let inside: f64 = data.atoms().iter().filter(|a| w1.contains(a.location) || w2.contains(a.location)).map(|a| a.order).sum();
            Ok((alpha, data.smooth_exponent() - inside, (8.0 * PI - rho) / (4.0 * PI)))
        })();
        match outcome {
            Ok((alpha, chain, bound)) => {
                if alpha > chain + 1e-12 || alpha > bound + 1e-12 || alpha >= 2.0 {
                    violations += 1;
                }
                worst = worst.max(alpha);
            }
            Err(_) => violations += 1,
        }
    }
    c.count("meanfield.alpha_partition", "two_region_curvature_below_two", violations, 300)
        .inputs
        .insert("largest_alpha".into(), worst.into());

    let fractions = [
        ("disk_area_fraction", meanfield::sphere_area_fraction(&Region::Disk { radius: 1.0 }), 0.5),
        ("plane_area_fraction", meanfield::sphere_area_fraction_filled(&Region::Plane), 1.0),
        (
            "filled_annulus_area_fraction",
            Region::annulus(1.0, 3f64.sqrt()).map_or(f64::NAN, |r| meanfield::sphere_area_fraction_filled(&r)),
            0.75,
        ),
    ];
    for (op, v, expected) in fractions {
        c.push("meanfield.area_fraction", DeficitReport::new(op, v, expected, 1e-14, Contract::Zero));
    }
    c.finish()
}

fn onsager_suite(config: &SuiteConfig) -> Vec<DeficitReport> {
    let mut c = Checks::default();
    let mut rng = rng_for(config, 6);

    let mut violations = 0;
    for _ in 0..50 {
        let b = rng.gen_range(1.0001..2.0);
        let gamma = b - 1.0 + rng.gen_range(0.01..6.0);
        let p = OnsagerParams::new(b, gamma).expect("sampled parameters are valid");
        let r0 = onsager::positivity_radius(&p).unwrap_or(f64::NAN);
        for i in 1..=200 {
            let r = 3.0 * r0 * i as f64 / 201.0;
            if (r - r0).abs() < 1e-9 * r0 {
                continue;
            }
            let d = onsager::laplacian_h(r, &p);
            if !(if r < r0 { d < 0.0 } else { d > 0.0 }) {
                violations += 1;
            }
        }
    }
    c.count("onsager.sign_structure", "laplacian_sign_structure", violations, 50 * 200);

    let (mut dominance, mut regime, mut root_err) = (0, 0, 0.0f64);
    for i in 1..=50 {
        let b = 1.0 + i as f64 / 50.0;
        match onsager::gamma_threshold(b) {
            Ok(t) => {
                let ok = if i == 50 { t.paper_bound == t.exact_root } else { t.paper_bound < t.exact_root };
                dominance += usize::from(!ok);
                regime += usize::from(t.paper_bound < b - 1.0);
                let at_root = OnsagerParams::new(b, t.exact_root).and_then(|p| onsager::contradiction_value(&p));
                root_err = root_err.max(at_root.map_or(f64::NAN, |v| (v - 2.0).abs()));
            }
            Err(_) => dominance += 1,
        }
    }
    c.count("onsager.dominance", "paper_bound_below_exact_root", dominance, 50);
    c.count("onsager.regime_consistency", "paper_bound_at_least_b_minus_one", regime, 50);
    c.within("onsager.root_property", "contradiction_value_at_exact_root", root_err, 1e-12);

    let mut decreases = 0;
    for _ in 0..200 {
        let b = rng.gen_range(1.0001..2.0);
        let g1 = b - 1.0 + rng.gen_range(1e-6..8.0);
        let g2 = g1 + rng.gen_range(1e-6..1.0);
        let v = |g| OnsagerParams::new(b, g).and_then(|p| onsager::contradiction_value(&p)).unwrap_or(f64::NAN);
        if !(v(g2) > v(g1)) {
            decreases += 1;
        }
    }
    c.count("onsager.monotonicity", "contradiction_value_increasing", decreases, 200).notes.push(
        "on gamma > b - 1 the contradiction value is strictly increasing, so the unimodal shape reduces to monotonicity".into(),
    );

    match onsager::gamma_threshold(2.0) {
        Ok(t) => c.push("onsager.examples", DeficitReport::new("threshold_at_b_two", t.paper_bound, 1.0, 0.0, Contract::Zero)),
        Err(e) => c.push("onsager.examples", failure("threshold_at_b_two", e)),
    }
    for (b, g) in [(1.5, 1.0), (1.1, 0.4), (1.9, 2.5), (1.3, 3.2)] {
        c.result("onsager.chain", "onsager_curvature_chain", OnsagerParams::new(b, g).and_then(|p| onsager::chain_report(&p)));
    }
    let remark_failures = (1..=100)
        .filter(|i| !onsager::remark_check(1.0 + 2.0 * B_MARGIN + (1.0 - 2.0 * B_MARGIN) * *i as f64 / 100.0).unwrap_or(false))
        .count();
    c.count("onsager.examples", "remark_on_range", remark_failures, 100);
    c.finish()
}

fn shooting_suite(_config: &SuiteConfig) -> Vec<DeficitReport> {
    let mut c = Checks::default();

    for alpha in [0.1, 0.5, 0.9] {
        let mut worst = 0.0f64;
        let mut error = None;
        for l in log_grid(-1.0, 2.0, 13) {
            let outcome = (|| -> Result<f64> {
                let forward = meanfield::shoot_disk(alpha, DiskTarget::Lambda(l))?;
                let back = meanfield::shoot_disk(alpha, DiskTarget::Rho(forward.rho))?;
                let closed = bubble::lambda_for_mass(forward.rho, alpha, 1.0)?;
                Ok(rel(back.lambda, l).max(rel(closed, l)))
            })();
            match outcome {
                Ok(e) => worst = worst.max(e),
                Err(e) => error = Some(e.to_string()),
            }
        }
        let r = c.within("meanfield.disk_round_trip", "disk_lambda_rho_round_trip", if error.is_some() { f64::NAN } else { worst }, 1e-6);
        r.inputs.insert("alpha".into(), alpha.into());
        if let Some(e) = error {
            r.warnings.push(e);
        }
    }

    let exact = (|| -> Result<DeficitReport> {
        let shot = meanfield::shoot_sphere(4.0 * PI, 4f64.ln())?;
        let err = shot
            .profile
            .nodes()
            .iter()
            .zip(shot.profile.values())
            .filter(|(r, _)| **r <= 100.0)
            .map(|(r, v)| (v - (4.0 / (1.0 + r * r)).ln()).abs())
            .fold(0.0, f64::max);
        Ok(DeficitReport::new("sphere_exact_profile", err, 0.0, 1e-6, Contract::NonPositive))
    })();
    c.result("meanfield.sphere_exact", "sphere_exact_profile", exact);

    for rho in [5.0 * PI, 6.0 * PI, 6.5 * PI, 7.0 * PI] {
        let report = meanfield::solve_sphere(rho).map(|s| {
            DeficitReport::new("sphere_mass_contract", s.mass, rho, s.tolerance, Contract::Zero)
                .input("rho", rho)
                .input("u0", s.u0)
                .input("tail", s.tail)
        });
        c.result("meanfield.sphere_mass_contract", "sphere_mass_contract", report);
    }

    for rho in [4.0 * PI, 6.0 * PI, 7.0 * PI] {
        match meanfield::uniqueness_scan(rho, meanfield::SCAN_SAMPLES) {
            Ok(scan) => {
                let r = c.count("meanfield.uniqueness_scan", "uniqueness_scan_monotone", usize::from(!scan.strictly_monotone), scan.mass.len());
                r.inputs.insert("rho".into(), rho.into());
                r.inputs.insert("center".into(), scan.center.into());
                // A monotone scan finds no same-mass pair, as the bound below 8 pi requires.
                let bound = bol::same_mass_bound(rho, 0.0);
                let consistent = bound.verdict != Verdict::Fail || scan.strictly_monotone;
                let r = c.count("meanfield.same_mass_consistency", "same_mass_bound_consistency", usize::from(!consistent), 1);
                r.inputs.insert("rho".into(), rho.into());
                r.inputs.insert("bound_deficit".into(), bound.deficit.into());
                r.notes.extend(bound.notes);
            }
            Err(e) => c.push("meanfield.uniqueness_scan", failure("uniqueness_scan_monotone", e)),
        }
    }
    c.finish()
}
