//! The provability-logic workbench: pinned axiom verdicts, certified
//! countermodels, fixed-point certificates, the consistency hierarchy, and
//! a dual-oracle agreement suite against exhaustive small-frame
//! enumeration.

use flowlab_core::provability::{
    extension_hierarchy, fixed_point_lambda, gl_decide, lob_check, random_modal_formula,
    ModalFormula, Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{Experiment, RunContext};
use crate::report::Check;
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub random_formulas: usize,
    pub max_depth: usize,
    pub variables: Vec<String>,
    pub lob_instances: usize,
    pub hierarchy_depth: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            random_formulas: 200,
            max_depth: 3,
            variables: vec!["p".to_string(), "q".to_string()],
            lob_instances: 50,
            hierarchy_depth: 3,
        }
    }
}

/// All strict partial orders on n nodes, as per-node successor bitmasks.
/// Irreflexivity excludes the self bit; transitivity requires each
/// successor's successors to be included.
fn strict_orders(n: usize) -> Vec<Vec<u8>> {
    fn extend(n: usize, succ: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if succ.len() == n {
            let transitive = (0..n).all(|a| {
                (0..n).all(|b| succ[a] & (1 << b) == 0 || succ[a] | succ[b] == succ[a])
            });
            if transitive {
                out.push(succ.clone());
            }
            return;
        }
        let own = succ.len();
        for mask in 0u16..(1u16 << n) {
            let mask = mask as u8;
            if mask & (1 << own) != 0 {
                continue;
            }
            succ.push(mask);
            extend(n, succ, out);
            succ.pop();
        }
    }
    let mut out = Vec::new();
    extend(n, &mut Vec::new(), &mut out);
    out
}

fn eval_direct(
    formula: &ModalFormula,
    vars: &[String],
    succ: &[u8],
    valuation: u32,
    world: usize,
) -> bool {
    match formula {
        ModalFormula::Bot => false,
        ModalFormula::Var(name) => {
            let i = vars.iter().position(|v| v == name).expect("var collected");
            valuation & (1 << (world * vars.len() + i)) != 0
        }
        ModalFormula::Implies(a, b) => {
            !eval_direct(a, vars, succ, valuation, world)
                || eval_direct(b, vars, succ, valuation, world)
        }
        ModalFormula::Box(body) => (0..succ.len())
            .filter(|w| succ[world] & (1 << w) != 0)
            .all(|w| eval_direct(body, vars, succ, valuation, w)),
    }
}

/// Exhaustive validity over all transitive irreflexive frames with at most
/// `max_worlds` worlds and all valuations. Sound and complete only up to
/// that frame size; the agreement suite keeps formulas small enough that
/// invalid ones have countermodels in range.
pub(crate) fn brute_force_valid(formula: &ModalFormula, max_worlds: usize) -> bool {
    let vars = formula.variables();
    assert!(
        max_worlds * vars.len() <= 32,
        "valuation bitmask limited to 32 bits"
    );
    for n in 1..=max_worlds {
        for succ in strict_orders(n) {
            for valuation in 0u32..(1u32 << (n * vars.len())) {
                for world in 0..n {
                    if !eval_direct(formula, &vars, &succ, valuation, world) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Named formulas whose verdicts are pinned: the distribution axiom, the
/// transitivity axiom, the recursion axiom, and three non-theorems.
pub(crate) fn pinned_formulas() -> Vec<(&'static str, ModalFormula, bool)> {
    let p = ModalFormula::var("p");
    let q = ModalFormula::var("q");
    let box_p = ModalFormula::boxed(p.clone());
    vec![
        (
            "distribution",
            ModalFormula::implies(
                ModalFormula::boxed(ModalFormula::implies(p.clone(), q.clone())),
                ModalFormula::implies(box_p.clone(), ModalFormula::boxed(q.clone())),
            ),
            true,
        ),
        (
            "transitivity",
            ModalFormula::implies(box_p.clone(), ModalFormula::boxed(box_p.clone())),
            true,
        ),
        (
            "recursion",
            ModalFormula::implies(
                ModalFormula::boxed(ModalFormula::implies(box_p.clone(), p.clone())),
                box_p.clone(),
            ),
            true,
        ),
        (
            "consistency",
            ModalFormula::not(ModalFormula::boxed(ModalFormula::Bot)),
            false,
        ),
        ("reflection", ModalFormula::implies(box_p.clone(), p.clone()), false),
        ("converse_reflection", ModalFormula::implies(p, box_p), false),
    ]
}

pub struct Gl;

impl Experiment for Gl {
    fn name(&self) -> &'static str {
        "gl"
    }

    fn summary(&self) -> &'static str {
        "decision procedure, certificates, and brute-force cross-checks"
    }

    fn run(
        &self,
        params: &serde_json::Value,
        ctx: &mut RunContext,
    ) -> Result<Vec<Check>, CliError> {
        let p: Params = super::params_for(self.name(), params)?;
        let mut checks = Vec::new();

        let mut pinned_ok = true;
        for (name, formula, expect_valid) in pinned_formulas() {
            let verdict = gl_decide(&formula)?;
            pinned_ok &= verdict.is_valid() == expect_valid;
            if name == "consistency" {
                if let Verdict::Invalid { countermodel, world } = &verdict {
                    let dead_end = countermodel
                        .edges()
                        .iter()
                        .all(|&(from, _)| from != *world);
                    checks.push(Check::holds("consistency_countermodel_dead_end", dead_end));
                    checks.push(Check::holds(
                        "consistency_countermodel_falsifies",
                        !countermodel.check(&formula, *world),
                    ));
                    ctx.write_json("countermodel.json", &verdict)?;
                }
            }
        }
        checks.push(Check::holds("pinned_verdicts", pinned_ok));

        // Recursion-scheme instances on random formulas.
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let var_refs: Vec<&str> = p.variables.iter().map(|v| v.as_str()).collect();
        let mut lob_ok = true;
        for _ in 0..p.lob_instances {
            let phi = random_modal_formula(&mut rng, p.max_depth, &var_refs);
            lob_ok &= lob_check(&phi)?;
        }
        checks.push(Check::holds("lob_instances", lob_ok));

        let (_, certificates) = fixed_point_lambda()?;
        ctx.write_json("certificates.json", &certificates)?;
        checks.push(Check::holds(
            "fixed_point_certificates",
            certificates.iter().all(|c| c.valid),
        ));

        let hierarchy = extension_hierarchy(p.hierarchy_depth)?;
        ctx.write_json("hierarchy.json", &hierarchy)?;
        checks.push(Check::holds(
            "hierarchy_certified",
            hierarchy.steps.iter().all(|s| s.next_level_has_axiom),
        ));

        // Dual oracle: the decision procedure against exhaustive
        // enumeration of frames with at most 4 worlds.
        let mut agreement_rows: Vec<Vec<f64>> = Vec::new();
        let mut agree = 0usize;
        let mut valid_seen = 0usize;
        let mut invalid_seen = 0usize;
        for i in 0..p.random_formulas {
            let formula = random_modal_formula(&mut rng, p.max_depth, &var_refs);
            let decided = gl_decide(&formula)?.is_valid();
            let brute = brute_force_valid(&formula, 4);
            if decided == brute {
                agree += 1;
            }
            if decided {
                valid_seen += 1;
            } else {
                invalid_seen += 1;
            }
            agreement_rows.push(vec![
                i as f64,
                if decided { 1.0 } else { 0.0 },
                if brute { 1.0 } else { 0.0 },
            ]);
        }
        ctx.write_csv(
            "agreement.csv",
            &["formula", "decided_valid", "brute_force_valid"],
            &agreement_rows,
        )?;
        checks.push(Check::holds(
            "dual_oracle_agreement",
            agree == p.random_formulas,
        ));
        checks.push(Check::holds(
            "suite_exercises_both_verdicts",
            valid_seen > 0 && invalid_seen > 0,
        ));
        Ok(checks)
    }
}
