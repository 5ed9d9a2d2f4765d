use std::f64::consts::PI;

use proptest::prelude::*;
use sphere_covering::error::Error;
use sphere_covering::onsager::*;

/// Larger root of `g^2 + 2 g (b - 3) + (b - 1)^2` by bisection on `[3 - b, 8]`.
fn root_oracle(b: f64) -> f64 {
    let f = |g: f64| g * g + 2.0 * g * (b - 3.0) + (b - 1.0) * (b - 1.0);
    let (mut lo, mut hi) = (3.0 - b, 8.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn weight_at_the_origin() {
    let p = OnsagerParams::from_beta(16.0 * PI, 0.0).unwrap();
    assert!((onsager_weight(0.0, &p) - 8.0).abs() < 1e-15);
    // b = 1 is outside the parameter range; the weight formula itself is exercised just above it.
    let p = OnsagerParams::new(1.0 + 2.0 * B_MARGIN, 1.0).unwrap();
    assert!((onsager_weight(0.0, &p) - 8.0 * 1f64.exp().powi(2)).abs() < 1e-6);
}

#[test]
fn laplacian_at_the_origin() {
    for (b, g) in [(1.2, 0.1), (1.5, 1.0), (2.0, 3.0)] {
        let p = OnsagerParams::new(b, g).unwrap();
        assert!((laplacian_h(0.0, &p) - (8.0 * (b - 1.0) - 8.0 * g)).abs() < 1e-13);
        assert_eq!(-laplacian_h(0.0, &p) > 0.0, g > b - 1.0);
    }
}

#[test]
fn laplacian_matches_finite_differences_of_log_weight() {
    let p = OnsagerParams::new(1.37, 2.2).unwrap();
    let lnh = |r: f64| onsager_weight(r, &p).ln();
    for i in 0..100 {
        let r = 0.05 + 0.05 * i as f64;
        let h = 1e-3;
        let (m2, m1, c, p1, p2) = (lnh(r - 2.0 * h), lnh(r - h), lnh(r), lnh(r + h), lnh(r + 2.0 * h));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
        let fd = d2 + d1 / r;
        let exact = laplacian_h(r, &p);
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "r = {r}: {fd} vs {exact}");
    }
}

#[test]
fn positivity_radius_examples() {
    assert!((positivity_radius_for(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((positivity_radius_for(1.5, 1.0).unwrap().powi(2) - 1.0 / 3.0).abs() < 1e-15);
    assert!(matches!(positivity_radius_for(1.5, 0.5), Err(Error::SubharmonicRegime { .. })));
    let p = OnsagerParams::new(1.5, 0.4).unwrap();
    assert!(matches!(deficit_bound(&p), Err(Error::SubharmonicRegime { .. })));
    assert_eq!(deficit_bound(&OnsagerParams::new(1.5, 0.5).unwrap()).unwrap(), 0.0);
}

#[test]
fn threshold_examples() {
    let t = gamma_threshold(2.0).unwrap();
    assert_eq!((t.paper_bound, t.exact_root), (1.0, 1.0));
    let t = gamma_threshold(1.5).unwrap();
    assert!((t.paper_bound - 2.724_744_871_391_589).abs() < 1e-12);
    assert!((t.exact_root - 2.914_213_562_373_095).abs() < 1e-12);
    assert!((t.exact_root - root_oracle(1.5)).abs() < 1e-12);
    let t = gamma_threshold(1.0 + 2.0 * B_MARGIN).unwrap();
    assert!((t.paper_bound - 4.0).abs() < 1e-4);
    assert!(gamma_threshold(1.0).is_err());
    assert!(gamma_threshold(2.1).is_err());
}

#[test]
fn deficit_and_contradiction_examples() {
    let p = OnsagerParams::new(2.0, 1.0).unwrap();
    assert_eq!(deficit_bound(&p).unwrap(), 0.0);
    assert_eq!(contradiction_value(&p).unwrap(), 2.0);
    let p = OnsagerParams::new(1.5, 1.0).unwrap();
    assert!((deficit_bound(&p).unwrap() - 1.570_796_326_794_896_6).abs() < 1e-12);
    assert!((contradiction_value(&p).unwrap() - 1.5625).abs() < 1e-15);
}

#[test]
fn chain_matches_quadrature() {
    for (b, g) in [(1.5, 1.0), (1.1, 0.4), (1.9, 2.5), (1.3, 3.2)] {
        let p = OnsagerParams::new(b, g).unwrap();
        let c = curvature_chain(&p).unwrap();
        let scale = c.deficit_bound;
        for v in [c.half_disk, c.full_disk, c.closed_form] {
            assert!((v - scale).abs() < 1e-6 * scale, "b {b} g {g}: {v} vs {scale}");
        }
        assert!(chain_report(&p).unwrap().passed());
    }
}

#[test]
fn chain_closed_form_matches_quadrature_on_other_radii() {
    let p = OnsagerParams::new(1.4, 1.7).unwrap();
    for r in [0.2, 0.7, 1.5] {
        let q = sphere_covering::quadrature::integrate(|s| 2.0 * PI * s * laplacian_h(s, &p), 0.0, r, 1e-12).unwrap();
        let s = 1.0 / (1.0 + r * r);
        let closed = 8.0 * PI * (1.0 - s) * (-(-1.0 + p.b() + p.gamma()) + p.gamma() * (1.0 + s));
        assert!((-q - closed).abs() < 1e-10);
    }
}

#[test]
fn remark_holds_on_the_range() {
    assert!(remark_check(2.0).unwrap());
    assert!(remark_check(1.5).unwrap());
    assert!(remark_check(1.25).unwrap());
    assert!(remark_check(0.9).is_err());
}

#[test]
fn record_keys() {
    let r = onsager_record(&OnsagerParams::new(1.5, 1.0).unwrap()).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in [
        "beta_over_8pi",
        "gamma",
        "paper_bound",
        "exact_root",
        "positivity_radius",
        "deficit_bound",
        "contradiction_value",
        "symmetry_forced",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let sub = onsager_record(&OnsagerParams::new(1.5, 0.2).unwrap()).unwrap();
    assert!(sub.symmetry_forced && sub.positivity_radius.is_none() && sub.deficit_bound.is_none());
    let edge = onsager_record(&OnsagerParams::new(2.0, 1.0).unwrap()).unwrap();
    assert_eq!(edge.deficit_bound, Some(0.0));
    assert!(edge.symmetry_forced && edge.positivity_radius.is_none());
}

#[test]
fn threshold_dominance_on_fifty_betas() {
    for i in 1..=50 {
        let b = 1.0 + i as f64 / 50.0;
        let t = gamma_threshold(b).unwrap();
        if i == 50 {
            assert_eq!(t.paper_bound, t.exact_root);
        } else {
            assert!(t.paper_bound < t.exact_root, "b = {b}");
        }
        assert!(t.paper_bound >= b - 1.0);
        let at_root = contradiction_value(&OnsagerParams::new(b, t.exact_root).unwrap()).unwrap();
        assert!((at_root - 2.0).abs() < 1e-12, "b = {b}: {at_root}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn laplacian_sign_structure(b in 1.0001f64..2.0, extra in 0.01f64..6.0) {
        let p = OnsagerParams::new(b, b - 1.0 + extra).unwrap();
        let r0 = positivity_radius(&p).unwrap();
        for i in 1..=200 {
            let r = r0 * 3.0 * i as f64 / 201.0;
            if (r - r0).abs() < 1e-9 * r0 {
                continue;
            }
            let d = laplacian_h(r, &p);
            prop_assert!(if r < r0 { d < 0.0 } else { d > 0.0 }, "r = {r}, r0 = {r0}, d = {d}");
        }
    }

    #[test]
    fn paper_bound_is_dominated(b in (1.0 + 2.0 * B_MARGIN)..2.0) {
        let t = gamma_threshold(b).unwrap();
        prop_assert!(t.paper_bound <= t.exact_root);
        prop_assert!(t.paper_bound >= b - 1.0);
        prop_assert!((t.exact_root - root_oracle(b)).abs() < 1e-12);
    }

    #[test]
    fn contradiction_value_increases_in_gamma(b in 1.0001f64..2.0, g1 in 0.0f64..8.0, g2 in 0.0f64..8.0) {
        let lo = b - 1.0;
        let (a, c) = (lo + g1.min(g2) * (8.0 - lo) / 8.0, lo + g1.max(g2) * (8.0 - lo) / 8.0);
        prop_assume!(a > lo && c > a);
        let va = contradiction_value(&OnsagerParams::new(b, a).unwrap()).unwrap();
        let vc = contradiction_value(&OnsagerParams::new(b, c).unwrap()).unwrap();
        prop_assert!(vc > va);
    }

    #[test]
    fn symmetry_region_matches_the_exact_root(b in 1.0001f64..2.0, g in 0.0f64..8.0) {
        let p = OnsagerParams::new(b, g).unwrap();
        let r = onsager_record(&p).unwrap();
        prop_assume!((g - r.exact_root).abs() > 1e-9);
        prop_assert_eq!(r.symmetry_forced, g <= r.exact_root);
        if r.within_sufficient_bound {
            prop_assert!(r.symmetry_forced);
        }
    }
}
