//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Oracles are closed forms or brute force computed here.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use sphere_covering::bol::{self, GeneratorMode, GENERATOR_NODES};
use sphere_covering::bubble::{self, BubbleParams};
use sphere_covering::meanfield::{self, DiskTarget, Domain};
use sphere_covering::onsager::{self, OnsagerParams};
use sphere_covering::profile::{geometric_grid, RadialProfile};
use sphere_covering::quadrature::{self, WeightedRadialDensity};
use sphere_covering::rearrange::{self, CellGrid2D, MeasurePair, TargetMeasure};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

fn bp(l: f64, a: f64) -> Result<BubbleParams, String> {
    BubbleParams::new(l, a).map_err(|e| e.to_string())
}

/// `8 pi (1 - alpha) x / (8 + x)` with `x = lambda^2 R^{2(1 - alpha)}`.
fn closed_mass(l: f64, alpha: f64, r: f64) -> f64 {
    let x = l * l * r.powf(2.0 * (1.0 - alpha));
    8.0 * PI * (1.0 - alpha) * x / (8.0 + x)
}

fn bubble_identities() -> Outcome {
    let analytic = geometric_grid(1e-6, 10.0, 2000);
    let fd = geometric_grid(1e-4, 10.0, 4000);
    let (mut worst_a, mut worst_fd) = (0.0f64, 0.0f64);
    for l in log_grid(-1.0, 1.0, 10) {
        for alpha in [0.0, 0.25, 0.5, 0.9] {
            let p = bp(l, alpha)?;
            worst_a = worst_a.max(bubble::bubble_residual(&p, &analytic));
            worst_fd = worst_fd.max(bubble::bubble_residual_fd(&p, &fd));
        }
    }
    ensure(worst_a < 1e-12, || format!("analytic residual {worst_a:e}"))?;
    ensure(worst_fd < 1e-6, || format!("finite-difference residual {worst_fd:e}"))?;
    let mut worst = [0.0f64; 2];
    for l in log_grid(-1.0, 1.0, 10) {
        for (alpha, slot) in [(0.0, 0), (0.25, 1), (0.5, 1), (0.9, 1)] {
            for r in [0.5, 1.0, 2.0] {
                let quad = quadrature::annulus_integral(&bp(l, alpha)?.density(), 0.0, r, 1e-12).map_err(|e| e.to_string())?;
                worst[slot] = worst[slot].max(rel(quad, closed_mass(l, alpha, r)));
            }
        }
    }
    ensure(worst[0] < 1e-10, || format!("alpha = 0 mass error {:e}", worst[0]))?;
    ensure(worst[1] < 1e-6, || format!("alpha > 0 mass error {:e}", worst[1]))?;
    Ok(format!("residuals {worst_a:.1e} / {worst_fd:.1e}, mass errors {:.1e} / {:.1e}", worst[0], worst[1]))
}

fn paired_triples() -> Vec<(f64, f64, f64)> {
    let mut v = Vec::new();
    for l in log_grid(-1.0, 1.0, 10) {
        for alpha in [0.0, 0.25, 0.5, 0.9] {
            for r in [0.5, 1.0, 2.0] {
                v.push((l, alpha, r));
            }
        }
    }
    v
}

fn mass_sum() -> Outcome {
    let triples = paired_triples();
    let (mut worst_sum, mut worst_match) = (0.0f64, 0.0f64);
    for &(l1, alpha, r) in &triples {
        let l2 = bubble::pair_lambda(l1, alpha, r);
        let (p1, p2) = (bp(l1, alpha)?, bp(l2, alpha)?);
        let sum = bubble::bubble_mass(&p1, r) + bubble::bubble_mass(&p2, r);
        worst_sum = worst_sum.max(rel(sum, 8.0 * PI * (1.0 - alpha)));
        let (u1, u2) = (bubble::eval_bubble(&p1, r), bubble::eval_bubble(&p2, r));
        worst_match = worst_match.max((u1 - u2).abs() / u1.abs().max(1.0));
    }
    ensure(triples.len() == 120, || format!("{} triples", triples.len()))?;
    ensure(worst_sum <= 1e-10, || format!("mass sum error {worst_sum:e}"))?;
    ensure(worst_match <= 1e-12, || format!("boundary mismatch {worst_match:e}"))?;
    Ok(format!("120 triples, sum error {worst_sum:.1e}, boundary mismatch {worst_match:.1e}"))
}

fn bol_corpus() -> Outcome {
    let mut equalities = 0;
    for alpha in [0.0, 0.25, 0.5, 0.75] {
        for seed in 0..500u64 {
            let mode = if seed % 2 == 0 { GeneratorMode::Shift } else { GeneratorMode::SubunitCurvature };
            let g = bol::generate_test_profile(seed, alpha, mode).map_err(|e| format!("interior seed {seed} alpha {alpha}: {e}"))?;
            let r = bol::bol_deficit_interior(&g.admissible).map_err(|e| e.to_string())?;
            let scale = 1e-8 * r.lhs.max(r.rhs);
            ensure(r.deficit >= -scale, || format!("interior seed {seed} alpha {alpha}: deficit {:e}", r.deficit))?;
            ensure((r.deficit.abs() <= scale) == g.spec.is_bubble(), || {
                format!("interior seed {seed} alpha {alpha}: deficit {:e}, bubble {}", r.deficit, g.spec.is_bubble())
            })?;

            let g = bol::generate_exterior_profile(seed, alpha, mode).map_err(|e| format!("exterior seed {seed} alpha {alpha}: {e}"))?;
            let r = bol::exterior_report(&g.exterior).map_err(|e| e.to_string())?;
            let scale = 1e-8 * r.lhs.max(r.rhs);
            ensure(r.deficit <= scale, || format!("exterior seed {seed} alpha {alpha}: deficit {:e}", r.deficit))?;
            ensure((r.deficit.abs() <= scale) == g.spec.is_bubble(), || {
                format!("exterior seed {seed} alpha {alpha}: deficit {:e}, bubble {}", r.deficit, g.spec.is_bubble())
            })?;
            equalities += usize::from(g.spec.is_bubble());
        }
    }
    let mut worst = 0.0f64;
    for c in [0.05, 0.1, 0.5] {
        for alpha in [0.0, 0.25, 0.5, 0.75] {
            let p = bp(2.0, alpha)?;
            let psi = bol::shift_profile(&p, c, 1.0, GENERATOR_NODES).map_err(|e| e.to_string())?;
            let adm = bol::check_differential_inequality(&psi, alpha, 1.0).map_err(|e| e.to_string())?;
            let d = bol::bol_deficit_interior(&adm).map_err(|e| e.to_string())?.deficit;
            let m0 = closed_mass(2.0, alpha, 1.0);
            let expected = 0.5 * m0 * m0 * c.exp() * (c.exp() - 1.0);
            worst = worst.max(rel(d, expected));
        }
    }
    ensure(worst <= 1e-6, || format!("shift closed form error {worst:e}"))?;
    Ok(format!("4000 interior + 4000 exterior, {equalities} bubbles per side, shift error {worst:.1e}"))
}

/// Largest superlevel mismatch between cells and shells, relative to the total.
fn brute_force_mismatch(grid: &CellGrid2D, star: &RadialProfile) -> f64 {
    let total: f64 = grid.mass().iter().sum();
    let mut levels: Vec<f64> = grid.phi().to_vec();
    levels.extend(star.values());
    levels.push(f64::NEG_INFINITY);
    let mut worst = 0.0f64;
    for &t in &levels {
        let src: f64 = grid.phi().iter().zip(grid.mass()).filter(|(v, _)| **v > t).map(|(_, m)| m).sum();
        let shells = star.values().iter().filter(|&&v| v > t).count();
        let tgt = if shells == 0 { 0.0 } else { PI * star.nodes()[shells - 1].powi(2) };
        worst = worst.max((src - tgt).abs() / total);
    }
    worst
}

fn rearrangement() -> Outcome {
    let p = bp(2.0, 0.3)?;
    let phi = RadialProfile::from_fn(geometric_grid(1e-5, 1.5, 1500), Some(bubble::eval_bubble(&p, 0.0)), |r| bubble::eval_bubble(&p, r))
        .map_err(|e| e.to_string())?;
    let pair = MeasurePair::new(p.density(), TargetMeasure::Bubble(p));
    let moved = rearrange::transport_nodes(&phi, &pair, 1e-12).map_err(|e| e.to_string())?;
    ensure(moved.len() == phi.len(), || "transport merged nodes".into())?;
    let shift = phi
        .nodes()
        .iter()
        .zip(moved.nodes())
        .map(|(a, b)| rel(*a, *b))
        .chain(phi.values().iter().zip(moved.values()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    ensure(shift <= 1e-9, || format!("identity transport moved nodes by {shift:e}"))?;

    let target = TargetMeasure::Lebesgue { alpha: 0.0 };
    let mut mismatches = Vec::new();
    for n in [32, 64, 128] {
        let grid = CellGrid2D::from_fn(n, 1.0, |x, y| (-(x - 0.2).powi(2) - 2.0 * y * y).exp() + 0.1 * x, |_, _| 1.0)
            .map_err(|e| e.to_string())?;
        let star = rearrange::rearrange_cells(&grid, &target, n).map_err(|e| e.to_string())?;
        let oracle = brute_force_mismatch(&grid, &star);
        let reported = rearrange::equimeasurability_report_cells(&grid, &star, &target).lhs;
        ensure((oracle - reported).abs() <= 1e-12, || format!("n = {n}: report {reported:e}, oracle {oracle:e}"))?;
        ensure(oracle < 2.0 / n as f64, || format!("n = {n}: mismatch {oracle:e}"))?;
        mismatches.push(oracle);
    }
    for w in mismatches.windows(2) {
        let ratio = w[0] / w[1];
        ensure((1.5..=2.5).contains(&ratio), || format!("halving ratio {ratio}"))?;
    }
    Ok(format!(
        "identity {shift:.1e}, mismatches {:.2e} {:.2e} {:.2e}",
        mismatches[0], mismatches[1], mismatches[2]
    ))
}

fn covering_equality() -> Outcome {
    let mut worst = 0.0f64;
    for &(l1, alpha, r) in &paired_triples() {
        let l2 = bubble::pair_lambda(l1, alpha, r);
        let (m1, m2) = (bubble::bubble_mass(&bp(l1, alpha)?, r), bubble::bubble_mass(&bp(l2, alpha)?, r));
        let d = bol::covering_deficit(m1, m2, alpha, 1e-10);
        ensure(d.is_equality(), || format!("({l1}, {alpha}, {r}): deficit {:e}", d.deficit))?;
        worst = worst.max(d.deficit.abs() / (8.0 * PI * (1.0 - alpha)));
    }
    ensure(worst <= 1e-10, || format!("paired deficit {worst:e}"))?;
    let u2 = bol::shift_profile(&bp(4.0, 0.0)?, 0.1, 1.0, GENERATOR_NODES).map_err(|e| e.to_string())?;
    let density = WeightedRadialDensity::exp_of_profile(&u2, 0.0).map_err(|e| e.to_string())?;
    let m2 = quadrature::annulus_integral(&density, 0.0, 1.0, 1e-11).map_err(|e| e.to_string())?;
    let perturbed = bol::covering_deficit(closed_mass(2.0, 0.0, 1.0), m2, 0.0, 1e-10).deficit;
    ensure(perturbed > 1e-3, || format!("perturbed deficit {perturbed:e}"))?;
    Ok(format!("paired deficit {worst:.1e}, perturbed {perturbed:.4}"))
}

fn exact(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * b.abs()
}

fn thresholds() -> Outcome {
    let t = |orders: &[f64], d| meanfield::thresholds(orders, d).map_err(|e| e.to_string());
    let three = t(&[-0.5, -0.5, -0.5], Domain::Sphere)?;
    ensure(three.sphere_uniqueness.is_some_and(|u| exact(u, 2.0 * PI)), || format!("N = 3: {:?}", three.sphere_uniqueness))?;
    let none = t(&[], Domain::Sphere)?;
    ensure(none.sphere_uniqueness.is_some_and(|u| exact(u, 8.0 * PI)), || format!("N = 0: {:?}", none.sphere_uniqueness))?;
    let disk = t(&[-0.5], Domain::Disk)?;
    ensure(disk.disk_uniqueness.is_some_and(|u| exact(u, 4.0 * PI)), || format!("disk: {:?}", disk.disk_uniqueness))?;
    for (orders, expected) in [
        (vec![-0.5, -0.5, -0.5], true),
        (vec![-0.8, -0.8, -0.8], false),
        (vec![-0.9, -0.9, -0.1, -0.1], false),
        (vec![-0.99, -0.99], true),
    ] {
        let flag = t(&orders, Domain::Sphere)?.necessity_ok;
        ensure(flag == Some(expected), || format!("necessity for {orders:?}: {flag:?}"))?;
    }
    Ok("2 pi, 8 pi, 4 pi and necessity flags exact".into())
}

fn shooting() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.0, 0.1, 0.5, 0.9] {
        for l in log_grid(-1.0, 2.0, 13) {
            let forward = meanfield::shoot_disk(alpha, DiskTarget::Lambda(l)).map_err(|e| e.to_string())?;
            worst = worst.max(rel(forward.rho, closed_mass(l, alpha, 1.0)));
            let back = meanfield::shoot_disk(alpha, DiskTarget::Rho(forward.rho)).map_err(|e| e.to_string())?;
            worst = worst.max(rel(back.lambda, l));
        }
    }
    ensure(worst <= 1e-6, || format!("disk round trip {worst:e}"))?;
    let shot = meanfield::solve_sphere(4.0 * PI).map_err(|e| e.to_string())?;
    let sup = shot
        .profile
        .nodes()
        .iter()
        .zip(shot.profile.values())
        .filter(|(r, _)| **r <= 100.0)
        .map(|(r, v)| (v - (4.0 / (1.0 + r * r)).ln()).abs())
        .chain(shot.profile.center_value().map(|c| (c - 4f64.ln()).abs()))
        .fold(0.0, f64::max);
    ensure(sup < 1e-6, || format!("sphere exact case sup error {sup:e}"))?;
    for rho in [4.0 * PI, 6.0 * PI, 7.0 * PI] {
        let scan = meanfield::uniqueness_scan(rho, 50).map_err(|e| e.to_string())?;
        ensure(scan.mass.len() == 50, || format!("{} samples", scan.mass.len()))?;
        ensure(scan.strictly_monotone && scan.mass.windows(2).all(|w| w[1] > w[0]), || format!("scan at rho = {rho} not monotone"))?;
    }
    Ok(format!("disk round trip {worst:.1e}, sphere sup error {sup:.1e}, scans monotone"))
}

/// `Delta H` for the Onsager weight with `b = beta / 8 pi`.
fn laplacian(r: f64, b: f64, gamma: f64) -> f64 {
    let s = 1.0 + r * r;
    4.0 * (2.0 * b - 2.0) / (s * s) + 8.0 * gamma * (r * r - 1.0) / (s * s * s)
}

/// `-int_{B_r} Delta H dx` by composite Simpson in the radius.
fn chain_integral(b: f64, gamma: f64, r: f64) -> f64 {
    let n = 20_000;
    let h = r / n as f64;
    let f = |s: f64| 2.0 * PI * s * laplacian(s, b, gamma);
    let mut sum = f(0.0) + f(r);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    -sum * h / 3.0
}

fn onsager_checks() -> Outcome {
    let at_two = onsager::gamma_threshold(2.0).map_err(|e| e.to_string())?;
    ensure(exact(at_two.paper_bound, 1.0) && exact(at_two.exact_root, 1.0), || format!("{at_two:?} at beta = 16 pi"))?;
    let mut worst_gap = f64::INFINITY;
    for i in 0..50 {
        let b = 1.0 + (i as f64 + 1.0) / 50.0;
        let g = onsager::gamma_threshold(b).map_err(|e| e.to_string())?;
        let bound = 3.0 - b + (2.0 * (3.0 - b) * (2.0 - b)).sqrt();
        let root = 3.0 - b + 2.0 * (2.0 - b).sqrt();
        ensure(rel(g.paper_bound, bound) <= 1e-12 && rel(g.exact_root, root) <= 1e-12, || format!("b = {b}: {g:?}"))?;
        ensure(g.paper_bound <= g.exact_root, || format!("b = {b}: paper bound above the root"))?;
        if i < 49 {
            worst_gap = worst_gap.min(g.exact_root - g.paper_bound);
            ensure(g.paper_bound < g.exact_root, || format!("b = {b}: equality away from 16 pi"))?;
        } else {
            ensure(g.paper_bound == g.exact_root, || "no equality at 16 pi".into())?;
        }
        if b < 2.0 {
            let p = OnsagerParams::new(b, g.exact_root).map_err(|e| e.to_string())?;
            let v = onsager::contradiction_value(&p).map_err(|e| e.to_string())?;
            ensure((v - 2.0).abs() <= 1e-12, || format!("b = {b}: contradiction value at the root {v}"))?;
        }
    }
    let mut worst_chain = 0.0f64;
    for (b, gamma) in [(1.5, 1.0), (1.2, 0.5), (1.9, 2.0), (1.05, 3.0), (2.0, 1.5)] {
        let p = OnsagerParams::new(b, gamma).map_err(|e| e.to_string())?;
        let bound = onsager::deficit_bound(&p).map_err(|e| e.to_string())?;
        let r = ((gamma + 1.0 - b) / (gamma - 1.0 + b)).sqrt();
        let chain = chain_integral(b, gamma, r);
        worst_chain = worst_chain.max((bound - chain).abs() / bound.abs().max(1.0));
        ensure(onsager::chain_report(&p).map_err(|e| e.to_string())?.passed(), || format!("library chain fails at b = {b}"))?;
    }
    ensure(worst_chain <= 1e-6, || format!("deficit bound vs chain {worst_chain:e}"))?;
    for i in 0..=200 {
        let b = 1.0 + 1e-6 + (1.0 - 1e-6) * i as f64 / 200.0;
        ensure(onsager::remark_check(b).map_err(|e| e.to_string())?, || format!("remark fails at b = {b}"))?;
    }
    Ok(format!("smallest gap below 16 pi {worst_gap:.2e}, chain error {worst_chain:.1e}"))
}

fn files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        out.push((e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).map_err(|e| e.to_string())?));
    }
    out.sort();
    Ok(out)
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    let mut slowest = Duration::ZERO;
    for name in ["first", "second"] {
        let dir = tmp.path().join(name);
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_scov"))
            .args(["verify-all", "--seed", "7", "--out"])
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        ensure(out.status.success(), || format!("{name} run exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
        ensure(took < Duration::from_secs(300), || format!("{name} run took {took:?}"))?;
        runs.push((out.stdout, files(&dir)?));
    }
    ensure(runs[0].1.len() == 7, || format!("{} report files", runs[0].1.len()))?;
    ensure(runs[0] == runs[1], || "reports differ between runs".into())?;
    Ok(format!("exit 0, 7 identical reports, slowest run {:.1} s", slowest.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "bubble identity suite", budget: Some(Duration::from_secs(10)), run: bubble_identities },
        Criterion { name: "paired mass sum", budget: None, run: mass_sum },
        Criterion { name: "Bol deficit corpus", budget: Some(Duration::from_secs(60)), run: bol_corpus },
        Criterion { name: "rearrangement", budget: None, run: rearrangement },
        Criterion { name: "covering equality cases", budget: None, run: covering_equality },
        Criterion { name: "thresholds", budget: None, run: thresholds },
        Criterion { name: "shooting round trips", budget: Some(Duration::from_secs(120)), run: shooting },
        Criterion { name: "Onsager", budget: None, run: onsager_checks },
        Criterion { name: "end-to-end verify-all", budget: None, run: end_to_end },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(budget)) if took > budget => Err(format!("took {:.1} s, budget {} s", took.as_secs_f64(), budget.as_secs())),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(result.is_err());
        println!("{tag} {}. {} ({:.2} s): {detail}", i + 1, c.name, took.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
