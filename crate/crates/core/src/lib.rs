//! Numerical verification of the singular Sphere Covering Inequality and its
//! consequences: bubbles, weighted radial quadrature, two-measure
//! rearrangement, Alexandrov-Bol deficits, mean field thresholds and the
//! Onsager symmetry bound.

pub mod bol;
pub mod bubble;
pub mod error;
pub mod meanfield;
pub mod numerics;
pub mod onsager;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod rearrange;
pub mod report;

pub use bubble::BubbleParams;
pub use error::{Error, Result};
pub use profile::RadialProfile;
pub use quadrature::{CumulativeMass, WeightedRadialDensity};
pub use report::{Contract, DeficitReport, Verdict};
