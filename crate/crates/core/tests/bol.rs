use std::f64::consts::PI;

use proptest::prelude::*;
use sphere_covering::bol::*;
use sphere_covering::bubble::{bubble_mass, eval_bubble, lambda_for_mass, lambdas_through, pair_lambda, total_mass, BubbleParams};
use sphere_covering::error::Error;
use sphere_covering::profile::RadialProfile;
use sphere_covering::quadrature::{annulus_integral, WeightedRadialDensity};
use sphere_covering::report::Verdict;

fn bp(l: f64, a: f64) -> BubbleParams {
    BubbleParams::new(l, a).unwrap()
}

fn shifted(l: f64, alpha: f64, c: f64, r: f64) -> AdmissibleProfile {
    let psi = shift_profile(&bp(l, alpha), c, r, GENERATOR_NODES).unwrap();
    check_differential_inequality(&psi, alpha, r).unwrap()
}

/// Mass of `e^psi |x|^{-2 alpha}` over `B_R` by adaptive quadrature of the interpolant.
fn quadrature_mass(psi: &RadialProfile, alpha: f64, r: f64) -> f64 {
    let w = WeightedRadialDensity::exp_of_profile(psi, alpha).unwrap();
    annulus_integral(&w, 0.0, r, 1e-11).unwrap()
}

#[test]
fn margins_of_bubbles_and_shifts() {
    let adm = shifted(2.0, 0.0, 0.0, 1.0);
    assert!(adm.is_admissible());
    assert!(adm.margins().iter().all(|m| m.abs() < 1e-8));

    let adm = shifted(2.0, 0.0, 0.1, 1.0);
    let p = bp(2.0, 0.0);
    for ((r, m), tol) in adm.radii().iter().zip(adm.margins()).zip(adm.tolerances()) {
        let expected = (0.1f64.exp() - 1.0) * bubble_mass(&p, *r);
        assert!((m - expected).abs() <= tol + 1e-9 * expected, "r = {r}");
        assert!(*m > 0.0 || expected < *tol);
    }

    let adm = shifted(2.0, 0.0, -0.5, 1.0);
    assert!(!adm.is_admissible());
    assert!(matches!(bol_deficit_interior(&adm), Err(Error::NotAdmissible { .. })));
}

#[test]
fn non_decreasing_profiles_are_rejected() {
    let psi = RadialProfile::new(vec![0.1, 0.5, 1.0], vec![1.0, 1.0, 0.5], Some(1.0)).unwrap();
    assert!(matches!(check_differential_inequality(&psi, 0.0, 1.0), Err(Error::NotDecreasing { .. })));
}

#[test]
fn interior_deficit_examples() {
    let r = bol_deficit_interior(&shifted(2.0, 0.0, 0.0, 1.0)).unwrap();
    assert!((r.lhs - 64.0 * PI * PI / 9.0).abs() < 1e-6);
    assert!((r.rhs - 70.183_853_5).abs() < 1e-6);
    assert!(r.is_equality());

    let r = bol_deficit_interior(&shifted(2.0, 0.0, 0.1, 1.0)).unwrap();
    let m0 = 8.0 * PI / 3.0;
    let expected = 0.5 * m0 * m0 * 0.1f64.exp() * (0.1f64.exp() - 1.0);
    assert!((expected - 4.078_799_219).abs() < 1e-9);
    assert!((r.deficit - expected).abs() < 1e-6 * expected, "{} vs {expected}", r.deficit);
    assert_eq!(r.verdict, Verdict::Pass);

    let r = bol_deficit_interior(&shifted(1.0, 0.5, 0.0, 1.0)).unwrap();
    assert!(r.is_equality(), "{}", r.deficit);
}

#[test]
fn interior_mass_agrees_with_quadrature() {
    let adm = shifted(1.7, 0.25, 0.4, 1.3);
    let q = quadrature_mass(adm.profile(), 0.25, 1.3);
    assert!((adm.mass().unwrap() - q).abs() < 1e-7 * q);
    let exact = 0.4f64.exp() * bubble_mass(&bp(1.7, 0.25), 1.3);
    assert!((q - exact).abs() < 1e-7 * exact);
}

#[test]
fn exterior_deficit_examples() {
    let p = bp(2.0, 0.0);
    let psi = exterior_shift_profile(&p, 0.0, 1.0, GENERATOR_NODES).unwrap();
    let r = bol_deficit_exterior(&psi, 0.0, 1.0).unwrap();
    let ext = check_exterior_inequality(&psi, 0.0, 1.0).unwrap();
    assert!((ext.mass() - 16.0 * PI / 3.0).abs() < 1e-7);
    assert!((r.lhs - 64.0 * PI * PI / 9.0).abs() < 1e-6 && r.is_equality());

    let psi = exterior_shift_profile(&p, 0.3, 1.0, GENERATOR_NODES).unwrap();
    let r = bol_deficit_exterior(&psi, 0.0, 1.0).unwrap();
    assert!(r.deficit < -r.tolerance && r.passed());

    // Raising the profile pushes the exterior mass past the total.
    let psi = exterior_shift_profile(&p, -0.5, 1.0, GENERATOR_NODES).unwrap();
    assert!(matches!(bol_deficit_exterior(&psi, 0.0, 1.0), Err(Error::MassTooLarge { .. })));
}

#[test]
fn mass_alternative_examples() {
    assert_eq!(mass_alternative(&shifted(2.0, 0.0, 0.0, 1.0), 2.0, 1e-9).unwrap(), MassBranch::Low);
    assert_eq!(mass_alternative(&shifted(4.0, 0.0, 0.0, 1.0), 2.0, 1e-9).unwrap(), MassBranch::High);
    assert!(matches!(
        mass_alternative(&shifted(2.0, 0.0, 0.1, 1.0), 2.0, 1e-9),
        Err(Error::BoundaryMismatch { .. })
    ));
}

#[test]
fn mass_alternative_never_between_on_generated_profiles() {
    // Draws whose boundary value lies above every bubble at R are outside the lemma.
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 200 {
        let alpha = [0.0, 0.25, 0.5, 0.75][(seed % 4) as usize];
        let mode = if seed % 2 == 0 { GeneratorMode::Shift } else { GeneratorMode::SubunitCurvature };
        let g = generate_test_profile(seed, alpha, mode).unwrap();
        let adm = &g.admissible;
        if let Some((l1, _)) = lambdas_through(adm.boundary_value(), alpha, adm.radius()) {
            let branch = mass_alternative(adm, l1, 1e-9).unwrap();
            assert_ne!(branch, MassBranch::Between, "seed {seed}");
            checked += 1;
        }
        seed += 1;
        assert!(seed < 2000);
    }
}

#[test]
fn exterior_sandwich_examples() {
    let (alpha, radius) = (0.0, 1.0);
    let (l1, l2) = (2.0, pair_lambda(2.0, alpha, radius));
    let psi = exterior_shift_profile(&bp(l1, alpha), 0.0, radius, GENERATOR_NODES).unwrap();
    let (lo, hi) = exterior_sandwich(&psi, l1, l2, alpha, radius, 1e-9).unwrap();
    assert!(hi.is_equality() && lo.passed() && !lo.is_equality());
    let psi = exterior_shift_profile(&bp(l2, alpha), 0.0, radius, GENERATOR_NODES).unwrap();
    let (lo, hi) = exterior_sandwich(&psi, l1, l2, alpha, radius, 1e-9).unwrap();
    assert!(lo.is_equality() && hi.passed() && !hi.is_equality());
}

#[test]
fn exterior_sandwich_is_strict_for_curvature_profiles() {
    for seed in 1..13u64 {
        let alpha = [0.0, 0.25, 0.5][(seed % 3) as usize];
        let g = generate_exterior_profile(seed, alpha, GeneratorMode::SubunitCurvature).unwrap();
        let ext = &g.exterior;
        let (l1, l2) = lambdas_through(ext.boundary_value(), alpha, ext.radius()).unwrap();
        let (lo, hi) = exterior_sandwich(ext.profile(), l1, l2, alpha, ext.radius(), 1e-9).unwrap();
        assert!(lo.verdict == Verdict::Pass && hi.verdict == Verdict::Pass, "seed {seed}: {} {}", lo.deficit, hi.deficit);
    }
}

#[test]
fn boundary_comparison_examples() {
    let adm = shifted(1.5, 0.3, 0.0, 1.2);
    assert!(boundary_comparison(&adm, 1.5, 1e-9).unwrap().is_equality());
    assert!(matches!(boundary_comparison(&adm, 3.0, 1e-9), Err(Error::MassMismatch { .. })));

    for seed in [1u64, 2, 3, 5, 8] {
        let alpha = 0.25;
        let g = generate_test_profile(seed, alpha, GeneratorMode::SubunitCurvature).unwrap();
        let radius = g.admissible.radius();
        let m = g.admissible.mass().unwrap();
        // Lift the profile by the constant that matches a bubble with 20% more mass.
        let target = (1.2 * m).min(0.5 * (m + total_mass(alpha)));
        let lambda = lambda_for_mass(target, alpha, radius).unwrap();
        let mb = bubble_mass(&bp(lambda, alpha), radius);
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        for _ in 0..100 {
            let c = 0.5 * (lo + hi);
            if c.exp() * m < mb {
                lo = c;
            } else {
                hi = c;
            }
        }
        let lifted = check_differential_inequality(&g.admissible.profile().shifted(lo), alpha, radius).unwrap();
        let report = boundary_comparison(&lifted, lambda, 1e-8).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "seed {seed}: {}", report.deficit);
    }
}

#[test]
fn covering_deficit_examples() {
    let r = covering_deficit(8.0 * PI / 3.0, 16.0 * PI / 3.0, 0.0, 1e-12);
    assert!(r.is_equality());
    let (m1, m2) = (bubble_mass(&bp(1.0, 0.5), 1.0), bubble_mass(&bp(8.0, 0.5), 1.0));
    assert!((m1 - 4.0 * PI / 9.0).abs() < 1e-14 && (m2 - 32.0 * PI / 9.0).abs() < 1e-13);
    assert!(covering_deficit(m1, m2, 0.5, 1e-12).is_equality());

    let u2 = shift_profile(&bp(4.0, 0.0), 0.1, 1.0, GENERATOR_NODES).unwrap();
    let m2 = quadrature_mass(&u2, 0.0, 1.0);
    let r = covering_deficit(8.0 * PI / 3.0, m2, 0.0, 1e-10);
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.deficit - 16.0 * PI / 3.0 * (0.1f64.exp() - 1.0)).abs() < 1e-7);
}

#[test]
fn covering_deficit_vanishes_on_paired_bubbles() {
    for i in 0..10 {
        let l1 = 10f64.powf(-1.0 + 3.0 * i as f64 / 9.0);
        for alpha in [0.0, 0.25, 0.5, 0.75] {
            for radius in [0.5, 1.0, 2.0] {
                let l2 = pair_lambda(l1, alpha, radius);
                let (m1, m2) = (bubble_mass(&bp(l1, alpha), radius), bubble_mass(&bp(l2, alpha), radius));
                let r = covering_deficit(m1, m2, alpha, 1e-10);
                assert!(r.is_equality(), "{l1} {alpha} {radius}: {}", r.deficit);
            }
        }
    }
}

#[test]
fn same_mass_examples() {
    assert!(same_mass_bound(8.0 * PI, 0.0).is_equality());
    assert!(same_mass_bound(4.0 * PI, 0.5).is_equality());
    let r = same_mass_bound(6.0 * PI, 0.0);
    assert!((r.deficit + 2.0 * PI).abs() < 1e-12);
    assert_eq!(r.verdict, Verdict::Fail);
}

#[test]
fn generator_examples() {
    let bare = generate_test_profile(10, 0.25, GeneratorMode::Shift).unwrap();
    assert!(bare.spec.is_bubble());
    let p = bp(bare.spec.lambda, 0.25);
    let psi = bare.admissible.profile();
    for (r, v) in psi.nodes().iter().zip(psi.values()) {
        assert_eq!(*v, eval_bubble(&p, *r));
    }

    let adm = shifted(1.0, 0.0, 0.3, 1.0);
    let p = bp(1.0, 0.0);
    for ((r, m), tol) in adm.radii().iter().zip(adm.margins()).zip(adm.tolerances()) {
        assert!((m - (0.3f64.exp() - 1.0) * bubble_mass(&p, *r)).abs() <= *tol, "r = {r}");
    }

    for alpha in [0.0, 0.5, 0.9] {
        let v0 = eval_bubble(&bp(2.0, alpha), 0.0);
        let grid = interior_grid(alpha, 2.0, GENERATOR_NODES);
        let psi = curvature_profile(v0, alpha, &Curvature::ONE, &grid).unwrap();
        let p = bp(2.0, alpha);
        let err = psi.nodes().iter().zip(psi.values()).map(|(r, v)| (v - eval_bubble(&p, *r)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "alpha {alpha}: {err}");
    }
}

#[test]
fn exterior_kelvin_image_of_unit_curvature_is_a_bubble() {
    let alpha = 0.25;
    let p = bp(1.5, alpha);
    let grid = interior_grid(alpha, 2.0, GENERATOR_NODES);
    let inner = curvature_profile(eval_bubble(&p, 0.0), alpha, &Curvature::ONE, &grid).unwrap();
    let outer = kelvin_transform(&inner, alpha).unwrap();
    let q = bp(8.0 / 1.5, alpha);
    for (r, v) in outer.nodes().iter().zip(outer.values()) {
        assert!((v - eval_bubble(&q, *r)).abs() < 1e-7, "r = {r}");
    }
}

#[test]
fn seeded_corpus_respects_both_inequalities_with_equality_only_on_bubbles() {
    for alpha in [0.0, 0.25, 0.5, 0.75] {
        for seed in 0..20u64 {
            for mode in [GeneratorMode::Shift, GeneratorMode::SubunitCurvature] {
                let g = generate_test_profile(seed, alpha, mode).unwrap();
                let r = bol_deficit_interior(&g.admissible).unwrap();
                assert!(r.passed(), "interior {alpha} {seed} {mode:?}: {}", r.deficit);
                assert_eq!(r.is_equality(), g.spec.is_bubble(), "interior {alpha} {seed} {mode:?}: {}", r.deficit);

                let e = generate_exterior_profile(seed, alpha, mode).unwrap();
                let r = exterior_report(&e.exterior).unwrap();
                assert!(r.passed(), "exterior {alpha} {seed} {mode:?}: {}", r.deficit);
                assert_eq!(r.is_equality(), e.spec.is_bubble(), "exterior {alpha} {seed} {mode:?}: {}", r.deficit);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifted_bubbles_have_the_closed_form_deficit(l in 0.3f64..6.0, alpha in 0.0f64..0.9, c in 0.0f64..1.0, r in 0.3f64..2.5) {
        let adm = shifted(l, alpha, c, r);
        let rep = bol_deficit_interior(&adm).unwrap();
        let m0 = bubble_mass(&bp(l, alpha), r);
        let expected = 0.5 * m0 * m0 * c.exp() * (c.exp() - 1.0);
        prop_assert!((rep.deficit - expected).abs() <= rep.tolerance + 1e-7 * expected.max(m0 * m0));
        prop_assert!(rep.passed());
    }

    #[test]
    fn paired_bubbles_cover_the_total_mass(l in 0.01f64..100.0, alpha in 0.0f64..0.95, r in 0.1f64..10.0) {
        let l2 = pair_lambda(l, alpha, r);
        let rep = covering_deficit(bubble_mass(&bp(l, alpha), r), bubble_mass(&bp(l2, alpha), r), alpha, 1e-10);
        prop_assert!(rep.is_equality());
    }
}

#[test]
fn coarsely_sampled_bubbles_stay_admissible() {
    // 400 log-spaced nodes: stencil truncation, not rounding, dominates the margin error.
    for &alpha in &[0.0, 0.5] {
        let p = bp(2.0, alpha);
        let radii: Vec<f64> = (0..400).map(|i| 1e-5 * 2e5f64.powf(i as f64 / 399.0)).collect();
        let psi = RadialProfile::from_fn(radii, Some(eval_bubble(&p, 0.0)), |r| eval_bubble(&p, r)).unwrap();
        let adm = check_differential_inequality(&psi, alpha, 1.0).unwrap();
        assert!(adm.is_admissible(), "alpha {alpha}: {:?}", adm.worst_margin());
        assert_eq!(bol_deficit_interior(&adm).unwrap().verdict, Verdict::Equality);
    }
}
