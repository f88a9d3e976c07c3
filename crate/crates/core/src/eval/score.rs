//! Turning violations into a score.

use serde::{Deserialize, Serialize};

use super::analyze::{Violation, ViolationKind};

/// Penalty table. The defaults are the four published rules; other values
/// can be loaded from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rubric {
    pub start: f64,
    pub llm_assert: f64,
    pub relation_misuse: f64,
    /// An uninstantiated tool input forces the score to zero.
    pub uninstantiated_is_fatal: bool,
    /// Used only when `uninstantiated_is_fatal` is off.
    pub uninstantiated: f64,
}

impl Default for Rubric {
    fn default() -> Rubric {
        Rubric {
            start: 1.0,
            llm_assert: 0.2,
            relation_misuse: 0.4,
            uninstantiated_is_fatal: true,
            uninstantiated: 1.0,
        }
    }
}

impl Rubric {
    pub fn penalty(&self, kind: ViolationKind) -> f64 {
        match kind {
            ViolationKind::UninstantiatedInput if self.uninstantiated_is_fatal => self.start,
            ViolationKind::UninstantiatedInput => self.uninstantiated,
            ViolationKind::LlmAssert => self.llm_assert,
            ViolationKind::RelationMisuse => self.relation_misuse,
        }
    }

    pub fn score(&self, violations: &[Violation], claimed: f64) -> ScoreReport {
        let fatal = self.uninstantiated_is_fatal && violations.iter().any(|v| v.kind == ViolationKind::UninstantiatedInput);
        let score = if fatal {
            0.0
        } else {
            let total: f64 = violations.iter().map(|v| v.penalty).sum();
            round_score((self.start - total).max(0.0))
        };
        ScoreReport {
            score: score.clamp(0.0, 1.0),
            claimed,
            violations: violations.to_vec(),
        }
    }
}

/// Scores are reported to 1e-9 so that sums of decimal penalties compare
/// exactly against their written values.
fn round_score(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreReport {
    pub score: f64,
    /// The planner's own figure, never used in the computation.
    pub claimed: f64,
    pub violations: Vec<Violation>,
}

impl ScoreReport {
    /// Claimed minus computed.
    pub fn divergence(&self) -> f64 {
        self.claimed - self.score
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl std::fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "score: {:?}\nclaimed: {:?}", self.score, self.claimed)?;
        if self.violations.is_empty() {
            return write!(f, "\nviolations: none");
        }
        write!(f, "\nviolations:")?;
        for v in &self.violations {
            write!(f, "\n  {v} (-{})", v.penalty)?;
        }
        Ok(())
    }
}

/// Scores with the default rubric.
pub fn score(violations: &[Violation], claimed: f64) -> ScoreReport {
    Rubric::default().score(violations, claimed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::analyze::Location;

    fn v(kind: ViolationKind) -> Violation {
        Violation {
            kind,
            location: Location::default(),
            penalty: Rubric::default().penalty(kind),
            detail: String::new(),
        }
    }

    #[test]
    fn published_values() {
        assert_eq!(score(&[], 1.0).score, 1.0);
        assert_eq!(score(&[v(ViolationKind::LlmAssert)], 1.0).score, 0.8);
        assert_eq!(score(&[v(ViolationKind::RelationMisuse)], 1.0).score, 0.6);
        assert_eq!(
            score(&[v(ViolationKind::LlmAssert), v(ViolationKind::RelationMisuse)], 1.0).score,
            0.4
        );
        assert_eq!(score(&[v(ViolationKind::UninstantiatedInput)], 1.0).score, 0.0);
        let three = [
            v(ViolationKind::RelationMisuse),
            v(ViolationKind::RelationMisuse),
            v(ViolationKind::RelationMisuse),
        ];
        assert_eq!(score(&three, 0.5).score, 0.0);
    }

    #[test]
    fn rubric_from_json() {
        let r: Rubric = serde_json::from_str(r#"{"llm_assert": 0.1}"#).unwrap();
        assert_eq!(r.relation_misuse, 0.4);
        assert!((r.score(&[v(ViolationKind::LlmAssert)], 1.0).score - 0.8).abs() < 1e-12);
    }
}
