//! First-order evaluation over sampled trajectory structures: pinned
//! verdicts on the sine model and classical-equivalence suites (double
//! negation, quantifier duality) on random formulas over a small structure.

use flowlab_core::logic::{
    check_functionality, evaluate, evaluate_report, parse_formula, random_closed_formula,
    sin_structure, Assignment, Formula, Structure,
};
use flowlab_core::space::StateVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{Experiment, RunContext};
use crate::report::Check;
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub match_tol: f64,
    pub random_formulas: usize,
    pub max_depth: usize,
    /// Domain sizes of the small structure the random suites run on.
    pub toy_times: usize,
    pub toy_states: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            match_tol: 5e-4,
            random_formulas: 100,
            max_depth: 3,
            toy_times: 10,
            toy_states: 10,
        }
    }
}

/// Small structure for bulk random evaluation: times 0..n-1, scalar states
/// 0..m-1, trajectory t mod m, predicates P(s) = s > m/2 and
/// Q(s) = s is even.
pub(crate) fn toy_structure(times: usize, states: usize) -> Result<Structure, CliError> {
    let m = states as f64;
    let mut structure = Structure::new(
        (0..times).map(|i| i as f64).collect(),
        (0..states).map(|i| StateVector::scalar(i as f64)).collect(),
        move |t| StateVector::scalar((t as usize % states) as f64),
        0.25,
    )?;
    structure.add_predicate("P", move |s: &StateVector| s.get(0) > m / 2.0);
    structure.add_predicate("Q", |s: &StateVector| (s.get(0) as i64) % 2 == 0);
    Ok(structure)
}

/// Rewrites every quantifier through its dual: forall x. b becomes
/// !exists x. !b and dually, recursing through the whole formula. A
/// classical tautology the sampled semantics must respect.
pub(crate) fn dualize(formula: &Formula) -> Formula {
    match formula {
        Formula::Forall { var, sort, body } => Formula::not(Formula::exists(
            var.clone(),
            *sort,
            Formula::not(dualize(body)),
        )),
        Formula::Exists { var, sort, body } => Formula::not(Formula::forall(
            var.clone(),
            *sort,
            Formula::not(dualize(body)),
        )),
        Formula::Not(inner) => Formula::not(dualize(inner)),
        Formula::And(a, b) => Formula::and(dualize(a), dualize(b)),
        Formula::Or(a, b) => Formula::or(dualize(a), dualize(b)),
        Formula::Implies(a, b) => Formula::implies(dualize(a), dualize(b)),
        leaf => leaf.clone(),
    }
}

pub struct Logic;

impl Experiment for Logic {
    fn name(&self) -> &'static str {
        "logic"
    }

    fn summary(&self) -> &'static str {
        "sampled-semantics evaluation and classical-equivalence suites"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let sine = sin_structure(p.match_tol)?;
        let empty = Assignment::new();

        let always_lands = parse_formula("forall t:Time . exists s:State . X(t,s)")?;
        let always_positive =
            parse_formula("forall t:Time . forall s:State . (X(t,s) -> P(s))")?;
        let budget = flowlab_core::logic::DEFAULT_NODE_BUDGET;
        let lands_report = evaluate_report(&sine, &always_lands, &empty, budget)?;
        let positive_report = evaluate_report(&sine, &always_positive, &empty, budget)?;

        #[derive(serde::Serialize)]
        struct Verdict {
            formula: String,
            value: bool,
            nodes_visited: u64,
            bindings: Vec<(String, String)>,
        }
        let verdicts: Vec<Verdict> = [
            ("forall t:Time . exists s:State . X(t,s)", &lands_report),
            (
                "forall t:Time . forall s:State . (X(t,s) -> P(s))",
                &positive_report,
            ),
        ]
        .into_iter()
        .map(|(text, report)| Verdict {
            formula: text.to_string(),
            value: report.value,
            nodes_visited: report.nodes_visited,
            bindings: report
                .bindings
                .iter()
                .map(|(name, elem)| (name.clone(), elem.to_string()))
                .collect(),
        })
        .collect();
        ctx.write_json("verdicts.json", &verdicts)?;

        // Classical equivalences on random closed formulas over the small
        // structure.
        let toy = toy_structure(p.toy_times, p.toy_states)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut double_negation_ok = 0usize;
        let mut duality_ok = 0usize;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..p.random_formulas {
            let formula = random_closed_formula(&mut rng, p.max_depth);
            let value = evaluate(&toy, &formula, &empty)?;
            let negated = evaluate(&toy, &Formula::not(Formula::not(formula.clone())), &empty)?;
            let dual = evaluate(&toy, &dualize(&formula), &empty)?;
            if value == negated {
                double_negation_ok += 1;
            }
            if value == dual {
                duality_ok += 1;
            }
            rows.push(vec![
                i as f64,
                if value == negated { 1.0 } else { 0.0 },
                if value == dual { 1.0 } else { 0.0 },
            ]);
        }
        ctx.write_csv(
            "equivalences.csv",
            &["formula", "double_negation_agrees", "duality_agrees"],
            &rows,
        )?;

        Ok(vec![
            Check::holds("always_lands_on_grid", lands_report.value),
            Check::holds("not_always_positive", !positive_report.value),
            Check::holds("trajectory_relation_functional", check_functionality(&sine)),
            Check::holds(
                "double_negation_suite",
                double_negation_ok == p.random_formulas,
            ),
            Check::holds("quantifier_duality_suite", duality_ok == p.random_formulas),
        ])
    }
}
