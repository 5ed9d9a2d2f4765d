use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Alpha above which quadrature conditioning is known to degrade.
pub const ALPHA_WARNING_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Equality,
}

/// Which sign of `deficit = lhs - rhs` the checked inequality asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contract {
    /// `deficit >= -tolerance`.
    NonNegative,
    /// `deficit <= tolerance`.
    NonPositive,
    /// `|deficit| <= tolerance`.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub op: String,
    pub inputs: Map<String, Value>,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub contract: Contract,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl DeficitReport {
    pub fn new(op: &str, lhs: f64, rhs: f64, tolerance: f64, contract: Contract) -> Self {
        let deficit = lhs - rhs;
        Self {
            op: op.to_string(),
            inputs: Map::new(),
            lhs,
            rhs,
            deficit,
            tolerance,
            verdict: verdict(deficit, tolerance, contract),
            contract,
            warnings: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    /// Records `alpha` and attaches the conditioning warning when it is large.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.inputs.insert("alpha".into(), alpha.into());
        if alpha > ALPHA_WARNING_THRESHOLD {
            self.warnings.push(format!(
                "alpha = {alpha} exceeds {ALPHA_WARNING_THRESHOLD}; quadrature conditioning degrades as 1 - alpha -> 0"
            ));
        }
        self
    }

    pub fn warn(mut self, message: impl Into<String>) -> Self {
        self.warnings.push(message.into());
        self
    }

    pub fn note(mut self, message: impl Into<String>) -> Self {
        self.notes.push(message.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn is_equality(&self) -> bool {
        self.verdict == Verdict::Equality
    }
}

/// Equality when `|deficit| <= tolerance`; otherwise pass or fail according
/// to the contract's sign.
pub fn verdict(deficit: f64, tolerance: f64, contract: Contract) -> Verdict {
    if !deficit.is_finite() {
        return Verdict::Fail;
    }
    if deficit.abs() <= tolerance {
        return Verdict::Equality;
    }
    let ok = match contract {
        Contract::NonNegative => deficit >= -tolerance,
        Contract::NonPositive => deficit <= tolerance,
        Contract::Zero => false,
    };
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        assert_eq!(verdict(0.5e-9, 1e-9, Contract::NonNegative), Verdict::Equality);
        assert_eq!(verdict(1.0, 1e-9, Contract::NonNegative), Verdict::Pass);
        assert_eq!(verdict(-1.0, 1e-9, Contract::NonNegative), Verdict::Fail);
        assert_eq!(verdict(-1.0, 1e-9, Contract::NonPositive), Verdict::Pass);
        assert_eq!(verdict(1.0, 1e-9, Contract::Zero), Verdict::Fail);
        assert_eq!(verdict(f64::NAN, 1.0, Contract::NonNegative), Verdict::Fail);
    }

    #[test]
    fn json_has_the_documented_keys() {
        let r = DeficitReport::new("demo", 2.0, 1.0, 1e-8, Contract::NonNegative)
            .input("R", 1.0)
            .with_alpha(0.97);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["op", "inputs", "lhs", "rhs", "deficit", "tolerance", "verdict"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["verdict"], "pass");
        assert_eq!(r.warnings.len(), 1);
    }
}
