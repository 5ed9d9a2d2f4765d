//! The invariants `verify-all` is required to exercise. Every check in a
//! suite report names the invariant it covers through its `invariant` input.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::suite::SuiteReport;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Invariant {
    pub id: &'static str,
    pub module: &'static str,
    pub statement: &'static str,
    /// Exercised by the integration tests rather than by a suite.
    pub tests_only: bool,
}

const fn suite(id: &'static str, module: &'static str, statement: &'static str) -> Invariant {
    Invariant {
        id,
        module,
        statement,
        tests_only: false,
    }
}

pub const INVARIANTS: &[Invariant] = &[
    suite("bubble.mass_monotone", "bubble", "lambda -> mass over B_R is strictly increasing and below 8 pi (1 - alpha)"),
    suite("bubble.mass_sum", "bubble", "paired bubbles carry total mass 8 pi (1 - alpha) over B_R"),
    suite("bubble.boundary_match", "bubble", "paired bubbles agree at R"),
    suite("bubble.bol_equality", "bubble", "bubbles attain equality in the Bol inequality"),
    suite("bubble.ordering", "bubble", "the larger scale dominates inside B_R"),
    suite("bubble.residuals", "bubble", "bubbles solve the singular Liouville equation, analytically and by finite differences"),
    suite("bubble.mass_quadrature", "bubble", "the closed-form mass over B_R agrees with quadrature"),
    suite("quadrature.round_trip", "quadrature", "inverting the cumulative mass table recovers the radii"),
    suite("quadrature.additivity", "quadrature", "annulus integrals add over adjacent annuli"),
    suite("quadrature.exactness", "quadrature", "weighted polynomial densities integrate exactly"),
    suite("rearrange.monotone", "rearrange", "rearranged profiles are nonincreasing"),
    suite("rearrange.mass_conservation", "rearrange", "source total equals the target mass of the rearranged support"),
    suite("rearrange.order_preservation", "rearrange", "rearrangement preserves pointwise order"),
    suite("rearrange.first_order_decay", "rearrange", "cell-grid equimeasurability error decays at first order"),
    suite("rearrange.identity", "rearrange", "rearranging a decreasing profile between identical measures moves nothing"),
    suite("bol.interior_corpus", "bol", "interior Bol deficit is nonnegative on the seeded corpus"),
    suite("bol.exterior_corpus", "bol", "exterior Bol deficit is nonpositive on the seeded corpus"),
    suite("bol.equality_iff_bubble", "bol", "the deficit vanishes exactly on the bubble subfamily"),
    suite("bol.mass_alternative", "bol", "the mass alternative never lands strictly between the paired masses"),
    suite("bol.covering_paired_grid", "bol", "the covering deficit vanishes on paired bubbles"),
    suite("bol.covering_perturbed", "bol", "perturbing one paired profile makes the covering deficit strictly positive"),
    suite("bol.shift_closed_form", "bol", "the deficit of a shifted bubble matches its closed form"),
    suite("meanfield.threshold_algebra", "meanfield", "uniqueness bound below coercivity bound exactly when the level comparison says so"),
    suite("meanfield.alpha_partition", "meanfield", "curvature of two disjoint regions stays below (8 pi - rho) / 4 pi and below 2"),
    suite("meanfield.disk_round_trip", "meanfield", "disk shooting inverts the closed-form mass map"),
    suite("meanfield.sphere_mass_contract", "meanfield", "sphere shots carry mass rho within their a posteriori bound"),
    suite("meanfield.threshold_examples", "meanfield", "tabulated thresholds are exact multiples of pi"),
    suite("meanfield.area_fraction", "meanfield", "spherical area fractions of disks, annuli and the plane are exact"),
    suite("meanfield.sphere_exact", "meanfield", "sphere shooting at rho = 4 pi reproduces ln(4 / (1 + r^2))"),
    suite("meanfield.uniqueness_scan", "meanfield", "the mass is strictly monotone in the center value"),
    suite("meanfield.same_mass_consistency", "meanfield", "scanned solutions satisfy the same-mass bound"),
    suite("onsager.sign_structure", "onsager", "the Laplacian of the weight changes sign once, at the positivity radius"),
    suite("onsager.dominance", "onsager", "the sufficient bound lies below the exact root, with equality only at b = 2"),
    suite("onsager.regime_consistency", "onsager", "the sufficient bound is at least b - 1"),
    suite("onsager.root_property", "onsager", "the contradiction value equals 2 at the exact root"),
    suite("onsager.monotonicity", "onsager", "the contradiction value is monotone in gamma above b - 1"),
    suite("onsager.chain", "onsager", "the deficit bound agrees with its quadrature chain"),
    suite("onsager.examples", "onsager", "thresholds and records at tabulated parameters"),
    Invariant {
        id: "cli.side_effect_free",
        module: "cli",
        statement: "subcommands write only declared outputs and are deterministic",
        tests_only: true,
    },
    Invariant {
        id: "cli.coverage",
        module: "cli",
        statement: "verify-all covers every suite invariant",
        tests_only: true,
    },
];

/// Suites exercising each invariant; empty lists are coverage gaps.
pub fn coverage(reports: &[SuiteReport]) -> BTreeMap<&'static str, Vec<String>> {
    INVARIANTS
        .iter()
        .filter(|inv| !inv.tests_only)
        .map(|inv| {
            let suites = reports
                .iter()
                .filter(|r| r.checks.iter().any(|c| c.inputs.get("invariant").and_then(|v| v.as_str()) == Some(inv.id)))
                .map(|r| r.suite.clone())
                .collect();
            (inv.id, suites)
        })
        .collect()
}
