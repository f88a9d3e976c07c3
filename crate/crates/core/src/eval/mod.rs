//! Static checking and scoring of planner output.

pub mod analyze;
pub mod envelope;
pub mod program;
pub mod score;

pub use analyze::{analyze_program, AnalyzeError, Inst, InstantiationState, Location, Violation, ViolationKind};
pub use envelope::{parse_plan_envelope, EnvelopeError, PlanEnvelope};
pub use program::{ActionProgram, PlanClause, PlanGoal, ProgramError};
pub use score::{score, Rubric, ScoreReport};

use crate::logic::KnowledgeBase;
use crate::tools::ToolRegistry;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
}

/// A parsed plan ready to score and run.
#[derive(Clone, Debug)]
pub struct Plan {
    pub envelope: PlanEnvelope,
    pub program: ActionProgram,
}

impl Plan {
    pub fn parse(text: &str, kb: &KnowledgeBase, registry: &ToolRegistry) -> Result<Plan, PlanError> {
        let envelope = parse_plan_envelope(text)?;
        let program = ActionProgram::from_units(&envelope.units, kb, registry)?.with_result_field(&envelope.result);
        Ok(Plan { envelope, program })
    }

    pub fn evaluate(&self, kb: &KnowledgeBase, registry: &ToolRegistry, rubric: &Rubric) -> Result<ScoreReport, PlanError> {
        let violations = analyze_program(&self.program, kb, registry, rubric)?;
        Ok(rubric.score(&violations, self.envelope.evaluation))
    }
}

/// Parses, analyzes and scores a planner response in one step.
pub fn evaluate_plan(text: &str, kb: &KnowledgeBase, registry: &ToolRegistry, rubric: &Rubric) -> Result<ScoreReport, PlanError> {
    Plan::parse(text, kb, registry)?.evaluate(kb, registry, rubric)
}

/// Reference plans shipped with the crate: (name, envelope text, score).
pub const CANONICAL_PLANS: [(&str, &str, f64); 5] = [
    ("clean", include_str!("../../assets/plans/clean.json"), 1.0),
    ("uninstantiated", include_str!("../../assets/plans/uninstantiated.json"), 0.0),
    ("llm_assert", include_str!("../../assets/plans/llm_assert.json"), 0.8),
    ("sort_on_relation", include_str!("../../assets/plans/sort_on_relation.json"), 0.6),
    ("combined", include_str!("../../assets/plans/combined.json"), 0.4),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn report(action: &[&str]) -> Result<ScoreReport, PlanError> {
        let text = serde_json::json!({
            "explanation": "", "gaps": [], "findings": [], "plan": [],
            "action": action, "result": "", "evaluation": 1.0,
        })
        .to_string();
        let mut kb = KnowledgeBase::new();
        kb.consult(
            "acquirer_country(gringotts, gb). acquirer_country(medici, it).",
            crate::logic::Provenance::Dataset,
        )
        .unwrap();
        evaluate_plan(&text, &kb, &ToolRegistry::builtin(), &Rubric::default())
    }

    fn kinds(action: &[&str]) -> Vec<ViolationKind> {
        report(action).unwrap().violations.iter().map(|v| v.kind).collect()
    }

    #[test]
    fn canonical_scores() {
        let kb = KnowledgeBase::new();
        for (name, text, expected) in CANONICAL_PLANS {
            let r = evaluate_plan(text, &kb, &ToolRegistry::builtin(), &Rubric::default()).unwrap();
            assert_eq!(r.score, expected, "{name}: {:?}", r.violations);
        }
    }

    #[test]
    fn uninstantiated_filter_is_goal_one() {
        let r = report(&["query_data(payments, F, [], R)"]).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].kind, ViolationKind::UninstantiatedInput);
        assert_eq!(r.violations[0].location.goal, Some(1));
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn bound_before_use_is_clean() {
        assert!(kinds(&[
            "F = [year, 2023]",
            "query_data(payments, F, [], R)",
            "aggregate(R, [merchant], [sum, eur_amount], A)"
        ])
        .is_empty());
        assert!(kinds(&["Y is 2000 + 23, query_data(payments, [year, Y], [], R)"]).is_empty());
        assert!(kinds(&["acquirer_country(A, gb), merchant_monthly_stats(A, 2023, S)"]).is_empty());
    }

    #[test]
    fn relation_misuse_cases() {
        use ViolationKind::RelationMisuse as M;
        assert_eq!(kinds(&["query_data(payments, [], [], R)", "sort(R, S)"]), vec![M]);
        assert_eq!(kinds(&["query_data(payments, [], [], R)", "findall(X, member(X, R), L)"]), vec![M]);
        assert_eq!(kinds(&["findall(R, query_data(payments, [], [], R), L)"]), vec![M]);
        assert_eq!(
            kinds(&["query_data(payments, [], [], R)", "aggregate_all(count, member(_, R), N)"]),
            vec![M]
        );
        // Taking the relation apart first is the intended use.
        assert!(kinds(&["query_data(payments, [], [eur_amount], [_|Rows])", "msort(Rows, S)"]).is_empty());
        assert!(kinds(&["query_data(payments, [], [], R)", "R = [_|Rows]", "sort(Rows, S)"]).is_empty());
        assert!(kinds(&["findall(C, (member(T, [payments, fees]), query_data(T, [], [], R), count(R, [_, [C]])), L)"]).is_empty());
    }

    #[test]
    fn branches_and_negation() {
        use ViolationKind::UninstantiatedInput as U;
        // Grounded in one branch only.
        assert_eq!(kinds(&["( F = [year, 2023] ; true )", "query_data(payments, F, [], R)"]), vec![U]);
        assert!(kinds(&["( F = [year, 2023] ; F = [] )", "query_data(payments, F, [], R)"]).is_empty());
        // Negation binds nothing.
        assert_eq!(kinds(&["\\+ \\+ F = []", "query_data(payments, F, [], R)"]), vec![U]);
        // A violation inside an untaken-looking branch still counts.
        assert_eq!(kinds(&["( true ; query_data(payments, G, [], R) )"]), vec![U]);
        assert_eq!(kinds(&["X is Y + 1"]), vec![U]);
    }

    #[test]
    fn llm_assert_once_per_predicate() {
        use ViolationKind::LlmAssert as L;
        let r = report(&["local(gb).", "local(fr).", "helper(X) :- local(X).", "?- helper(C)."]).unwrap();
        assert_eq!(r.violations.iter().map(|v| v.kind).collect::<Vec<_>>(), vec![L, L]);
        assert_eq!(r.score, 0.6);
    }

    #[test]
    fn helper_call_patterns() {
        use ViolationKind::{LlmAssert as L, UninstantiatedInput as U};
        // The helper passes its argument straight to a tool.
        assert_eq!(
            kinds(&["by_year(Y, R) :- query_data(payments, [year, Y], [], R).", "?- by_year(2023, R)."]),
            vec![L]
        );
        assert_eq!(
            kinds(&["by_year(Y, R) :- query_data(payments, [year, Y], [], R).", "?- by_year(Y, R)."]),
            vec![L, U]
        );
    }

    #[test]
    fn unknown_predicates_are_errors() {
        assert!(report(&["no_such_thing(X)"]).is_ok(), "bare unknown term is a fact");
        assert!(matches!(
            report(&["?- no_such_thing(X)."]),
            Err(PlanError::Analyze(AnalyzeError::UnknownPredicate { .. }))
        ));
        assert!(matches!(
            report(&["h(X) :- missing(X).", "?- true."]),
            Err(PlanError::Analyze(AnalyzeError::UnknownPredicate { .. }))
        ));
    }

    #[test]
    fn deterministic_reports() {
        let a = report(&["query_data(payments, F, [], R)", "sort(R, S)"]).unwrap();
        let b = report(&["query_data(payments, F, [], R)", "sort(R, S)"]).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
