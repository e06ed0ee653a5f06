//! Line-by-line Hilbert proofs for GL and their checker.

use rand::Rng;

use super::{random_modal_formula, ModalFormula, ProvabilityError};

/// How a proof line is justified. Line references are 1-based and must
/// point strictly backwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Propositional tautology with box subformulas read as opaque atoms.
    Tautology,
    /// Instance of box(a -> b) -> (box a -> box b).
    AxiomK,
    /// Instance of box(box a -> a) -> box a.
    AxiomGl,
    ModusPonens { implication: usize, antecedent: usize },
    Necessitation { premise: usize },
}

#[derive(Clone, Debug)]
pub struct ProofLine {
    pub formula: ModalFormula,
    pub justification: Justification,
}

#[derive(Clone, Debug, Default)]
pub struct ProofObject {
    pub lines: Vec<ProofLine>,
}

impl ProofObject {
    pub fn conclusion(&self) -> Option<&ModalFormula> {
        self.lines.last().map(|line| &line.formula)
    }
}

pub const MAX_TAUTOLOGY_ATOMS: usize = 20;

/// Variables and maximal box subformulas, the atoms of the propositional
/// skeleton.
fn tautology_atoms(formula: &ModalFormula, out: &mut Vec<ModalFormula>) {
    match formula {
        ModalFormula::Bot => {}
        ModalFormula::Var(_) | ModalFormula::Box(_) => {
            if !out.iter().any(|a| a == formula) {
                out.push(formula.clone());
            }
        }
        ModalFormula::Implies(a, b) => {
            tautology_atoms(a, out);
            tautology_atoms(b, out);
        }
    }
}

fn eval_skeleton(formula: &ModalFormula, atoms: &[ModalFormula], bits: u32) -> bool {
    match formula {
        ModalFormula::Bot => false,
        ModalFormula::Var(_) | ModalFormula::Box(_) => {
            let index = atoms
                .iter()
                .position(|a| a == formula)
                .expect("atom collected");
            bits >> index & 1 == 1
        }
        ModalFormula::Implies(a, b) => {
            !eval_skeleton(a, atoms, bits) || eval_skeleton(b, atoms, bits)
        }
    }
}

/// True when the formula holds under every assignment to its variables
/// and maximal box subformulas.
pub fn is_propositional_tautology(formula: &ModalFormula) -> Result<bool, ProvabilityError> {
    let mut atoms = Vec::new();
    tautology_atoms(formula, &mut atoms);
    if atoms.len() > MAX_TAUTOLOGY_ATOMS {
        return Err(ProvabilityError::TautologyBudget {
            count: atoms.len(),
            max: MAX_TAUTOLOGY_ATOMS,
        });
    }
    Ok((0..1u32 << atoms.len()).all(|bits| eval_skeleton(formula, &atoms, bits)))
}

fn matches_axiom_k(formula: &ModalFormula) -> bool {
    let ModalFormula::Implies(premise, conclusion) = formula else {
        return false;
    };
    let ModalFormula::Box(implication) = &**premise else {
        return false;
    };
    let ModalFormula::Implies(a, b) = &**implication else {
        return false;
    };
    let ModalFormula::Implies(boxed_a, boxed_b) = &**conclusion else {
        return false;
    };
    let (ModalFormula::Box(a2), ModalFormula::Box(b2)) = (&**boxed_a, &**boxed_b) else {
        return false;
    };
    a == a2 && b == b2
}

fn matches_axiom_gl(formula: &ModalFormula) -> bool {
    let ModalFormula::Implies(premise, conclusion) = formula else {
        return false;
    };
    let ModalFormula::Box(inner) = &**premise else {
        return false;
    };
    let ModalFormula::Implies(boxed_a, a2) = &**inner else {
        return false;
    };
    let ModalFormula::Box(a) = &**boxed_a else {
        return false;
    };
    let ModalFormula::Box(a3) = &**conclusion else {
        return false;
    };
    a == a2 && a == a3
}

/// Checks every line in order and reports the first failure by 1-based
/// line number.
pub fn check_proof(proof: &ProofObject) -> Result<(), ProvabilityError> {
    let invalid = |line: usize, reason: String| ProvabilityError::InvalidLine { line, reason };
    for (index, line) in proof.lines.iter().enumerate() {
        let number = index + 1;
        let cite = |reference: usize| -> Result<&ModalFormula, ProvabilityError> {
            if reference == 0 || reference > index {
                Err(invalid(
                    number,
                    format!("reference to line {reference} is not strictly earlier"),
                ))
            } else {
                Ok(&proof.lines[reference - 1].formula)
            }
        };
        match &line.justification {
            Justification::Tautology => {
                let ok = is_propositional_tautology(&line.formula).map_err(|e| match e {
                    ProvabilityError::TautologyBudget { count, max } => invalid(
                        number,
                        format!("tautology check over {count} atoms exceeds the budget of {max}"),
                    ),
                    other => other,
                })?;
                if !ok {
                    return Err(invalid(
                        number,
                        format!("{} is not a propositional tautology", line.formula),
                    ));
                }
            }
            Justification::AxiomK => {
                if !matches_axiom_k(&line.formula) {
                    return Err(invalid(
                        number,
                        format!(
                            "{} does not match box(a -> b) -> (box a -> box b)",
                            line.formula
                        ),
                    ));
                }
            }
            Justification::AxiomGl => {
                if !matches_axiom_gl(&line.formula) {
                    return Err(invalid(
                        number,
                        format!("{} does not match box(box a -> a) -> box a", line.formula),
                    ));
                }
            }
            Justification::ModusPonens {
                implication,
                antecedent,
            } => {
                let implication = cite(*implication)?;
                let antecedent = cite(*antecedent)?;
                let ModalFormula::Implies(from, to) = implication else {
                    return Err(invalid(
                        number,
                        format!("cited implication {implication} is not an implication"),
                    ));
                };
                if **from != *antecedent {
                    return Err(invalid(
                        number,
                        format!(
                            "antecedent {antecedent} does not match the premise of {implication}"
                        ),
                    ));
                }
                if **to != line.formula {
                    return Err(invalid(
                        number,
                        format!("{} is not the conclusion of {implication}", line.formula),
                    ));
                }
            }
            Justification::Necessitation { premise } => {
                let premise = cite(*premise)?;
                if line.formula != ModalFormula::boxed(premise.clone()) {
                    return Err(invalid(
                        number,
                        format!("{} is not box of the cited line", line.formula),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Substitution schemes for seeding random proofs, all propositional
/// tautologies.
fn tautology_schema<R: Rng>(rng: &mut R, a: ModalFormula, b: ModalFormula) -> ModalFormula {
    match rng.gen_range(0..6) {
        0 => ModalFormula::implies(a.clone(), a),
        1 => ModalFormula::implies(a.clone(), ModalFormula::implies(b, a)),
        2 => ModalFormula::implies(ModalFormula::Bot, a),
        3 => ModalFormula::implies(ModalFormula::not(ModalFormula::not(a.clone())), a),
        4 => ModalFormula::implies(a.clone(), ModalFormula::not(ModalFormula::not(a))),
        5 => ModalFormula::implies(
            ModalFormula::and(a.clone(), b.clone()),
            ModalFormula::or(b, a),
        ),
        _ => unreachable!(),
    }
}

/// Random well-formed proof: tautology and axiom instances closed under
/// necessitation and modus ponens. Every generated proof passes
/// `check_proof`.
pub fn random_proof<R: Rng>(rng: &mut R, steps: usize, variables: &[&str]) -> ProofObject {
    let mut proof = ProofObject::default();
    let small = |rng: &mut R| random_modal_formula(rng, 1, variables);
    while proof.lines.len() < steps {
        let roll = if proof.lines.is_empty() {
            0
        } else {
            rng.gen_range(0..5)
        };
        match roll {
            0 => {
                let (a, b) = (small(rng), small(rng));
                proof.lines.push(ProofLine {
                    formula: tautology_schema(rng, a, b),
                    justification: Justification::Tautology,
                });
            }
            1 => {
                let (a, b) = (small(rng), small(rng));
                proof.lines.push(ProofLine {
                    formula: ModalFormula::implies(
                        ModalFormula::boxed(ModalFormula::implies(a.clone(), b.clone())),
                        ModalFormula::implies(ModalFormula::boxed(a), ModalFormula::boxed(b)),
                    ),
                    justification: Justification::AxiomK,
                });
            }
            2 => {
                let a = small(rng);
                proof.lines.push(ProofLine {
                    formula: ModalFormula::implies(
                        ModalFormula::boxed(ModalFormula::implies(
                            ModalFormula::boxed(a.clone()),
                            a.clone(),
                        )),
                        ModalFormula::boxed(a),
                    ),
                    justification: Justification::AxiomGl,
                });
            }
            3 => {
                let premise = rng.gen_range(1..=proof.lines.len());
                proof.lines.push(ProofLine {
                    formula: ModalFormula::boxed(proof.lines[premise - 1].formula.clone()),
                    justification: Justification::Necessitation { premise },
                });
            }
            4 => {
                // Modus ponens on the first usable implication pair, if any.
                let pair = proof.lines.iter().enumerate().find_map(|(i, line)| {
                    let ModalFormula::Implies(from, to) = &line.formula else {
                        return None;
                    };
                    proof
                        .lines
                        .iter()
                        .position(|other| other.formula == **from)
                        .map(|j| (i + 1, j + 1, (**to).clone()))
                });
                if let Some((implication, antecedent, conclusion)) = pair {
                    proof.lines.push(ProofLine {
                        formula: conclusion,
                        justification: Justification::ModusPonens {
                            implication,
                            antecedent,
                        },
                    });
                }
            }
            _ => unreachable!(),
        }
    }
    proof
}
