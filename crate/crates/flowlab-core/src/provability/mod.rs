//! Propositional provability logic GL: formulas over bottom, variables,
//! implication, and the provability box; a decision procedure that returns
//! machine-checked Kripke countermodels for invalid formulas; Löb's
//! theorem; the provability fixed point; conjunction closure; and the
//! consistency-extension hierarchy. Queries are pure and independent.

mod generate;
mod parser;
mod proof;

pub use generate::random_modal_formula;
pub use parser::parse_modal_formula;
pub use proof::{check_proof, random_proof, Justification, ProofLine, ProofObject};

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub const MAX_ATOMS: usize = 16;
pub const MAX_BOXES: usize = 20;
const SEARCH_BUDGET: u64 = 50_000_000;

#[derive(Debug, Error)]
pub enum ProvabilityError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("formula has {count} variables, budget is {max}")]
    TooManyAtoms { count: usize, max: usize },
    #[error("formula has {count} box subformulas, budget is {max}")]
    TooManyBoxes { count: usize, max: usize },
    #[error("decision search exceeded {budget} assignment visits")]
    SearchBudget { budget: u64 },
    #[error("tautology check over {count} atoms exceeds the budget of {max}")]
    TautologyBudget { count: usize, max: usize },
    #[error("invalid Kripke model: {reason}")]
    InvalidModel { reason: String },
    #[error("internal error: produced countermodel fails to falsify the formula")]
    CertificationFailed,
    #[error("conjunct {index} is not valid")]
    InvalidConjunct { index: usize },
    #[error("hierarchy depth {depth} exceeds the bound {max}")]
    DepthTooLarge { depth: usize, max: usize },
    #[error("proof line {line}: {reason}")]
    InvalidLine { line: usize, reason: String },
}

/// Formula of provability logic. The primitives are bottom, variables,
/// implication, and the box; negation, conjunction, disjunction,
/// equivalence, and top are derived.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModalFormula {
    Bot,
    Var(String),
    Implies(Box<ModalFormula>, Box<ModalFormula>),
    Box(Box<ModalFormula>),
}

impl ModalFormula {
    pub fn var(name: impl Into<String>) -> Self {
        ModalFormula::Var(name.into())
    }

    pub fn implies(a: ModalFormula, b: ModalFormula) -> Self {
        ModalFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn boxed(a: ModalFormula) -> Self {
        ModalFormula::Box(Box::new(a))
    }

    pub fn top() -> Self {
        Self::implies(ModalFormula::Bot, ModalFormula::Bot)
    }

    pub fn not(a: ModalFormula) -> Self {
        Self::implies(a, ModalFormula::Bot)
    }

    pub fn and(a: ModalFormula, b: ModalFormula) -> Self {
        // a & b := !(a -> !b)
        Self::not(Self::implies(a, Self::not(b)))
    }

    pub fn or(a: ModalFormula, b: ModalFormula) -> Self {
        // a | b := !a -> b
        Self::implies(Self::not(a), b)
    }

    pub fn iff(a: ModalFormula, b: ModalFormula) -> Self {
        Self::and(
            Self::implies(a.clone(), b.clone()),
            Self::implies(b, a),
        )
    }

    /// Conjunction of a list; the empty conjunction is top.
    pub fn conjoin(formulas: &[ModalFormula]) -> Self {
        match formulas.split_first() {
            None => Self::top(),
            Some((first, rest)) => rest
                .iter()
                .cloned()
                .fold(first.clone(), |acc, f| Self::and(acc, f)),
        }
    }

    /// Variable names in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut vars = Vec::new();
        self.walk(&mut |f| {
            if let ModalFormula::Var(name) = f {
                if !vars.iter().any(|v| v == name) {
                    vars.push(name.clone());
                }
            }
        });
        vars
    }

    fn walk(&self, visit: &mut impl FnMut(&ModalFormula)) {
        visit(self);
        match self {
            ModalFormula::Implies(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            ModalFormula::Box(a) => a.walk(visit),
            _ => {}
        }
    }
}

/// Prints using the sugar the parser accepts, so printing then parsing
/// reproduces the identical tree.
impl fmt::Display for ModalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModalFormula::Bot => write!(f, "false"),
            ModalFormula::Var(name) => write!(f, "{name}"),
            ModalFormula::Box(inner) => write!(f, "box {}", wrap_unary(inner)),
            ModalFormula::Implies(a, b) => {
                if **a == ModalFormula::Bot && **b == ModalFormula::Bot {
                    return write!(f, "true");
                }
                if **b == ModalFormula::Bot {
                    return write!(f, "!{}", wrap_unary(a));
                }
                write!(f, "({a} -> {b})")
            }
        }
    }
}

/// Operands of ! and box must not be bare implications.
fn wrap_unary(inner: &ModalFormula) -> String {
    match inner {
        ModalFormula::Implies(a, b)
            if !(**a == ModalFormula::Bot && **b == ModalFormula::Bot)
                && **b != ModalFormula::Bot =>
        {
            format!("({inner})")
        }
        _ => inner.to_string(),
    }
}

/// Finite transitive irreflexive Kripke frame with a valuation, the
/// completeness target for GL. Construction checks both frame conditions
/// exhaustively.
#[derive(Clone, Debug, Serialize)]
pub struct KripkeModel {
    world_count: usize,
    /// Strict accessibility pairs (from, to).
    edges: Vec<(usize, usize)>,
    /// Per-world sets of true variables.
    valuation: Vec<Vec<String>>,
}

impl KripkeModel {
    pub fn new(
        world_count: usize,
        mut edges: Vec<(usize, usize)>,
        valuation: Vec<Vec<String>>,
    ) -> Result<Self, ProvabilityError> {
        if valuation.len() != world_count {
            return Err(ProvabilityError::InvalidModel {
                reason: format!(
                    "valuation covers {} worlds, model has {world_count}",
                    valuation.len()
                ),
            });
        }
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= world_count || *b >= world_count) {
            return Err(ProvabilityError::InvalidModel {
                reason: format!("edge ({a}, {b}) leaves the world range"),
            });
        }
        edges.sort_unstable();
        edges.dedup();
        if let Some(&(a, _)) = edges.iter().find(|(a, b)| a == b) {
            return Err(ProvabilityError::InvalidModel {
                reason: format!("edge ({a}, {a}) violates irreflexivity"),
            });
        }
        let has = |x: usize, y: usize, edges: &[(usize, usize)]| {
            edges.binary_search(&(x, y)).is_ok()
        };
        for &(a, b) in &edges {
            for &(c, d) in &edges {
                if b == c && !has(a, d, &edges) {
                    return Err(ProvabilityError::InvalidModel {
                        reason: format!(
                            "transitivity fails: ({a}, {b}) and ({c}, {d}) without ({a}, {d})"
                        ),
                    });
                }
            }
        }
        Ok(Self {
            world_count,
            edges,
            valuation,
        })
    }

    pub fn world_count(&self) -> usize {
        self.world_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn true_variables(&self, world: usize) -> &[String] {
        &self.valuation[world]
    }

    fn successors(&self, world: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(a, _)| *a == world)
            .map(|(_, b)| *b)
    }

    /// Standard Kripke truth at a world; variables absent from the
    /// valuation are false.
    pub fn check(&self, formula: &ModalFormula, world: usize) -> bool {
        match formula {
            ModalFormula::Bot => false,
            ModalFormula::Var(name) => self.valuation[world].iter().any(|v| v == name),
            ModalFormula::Implies(a, b) => !self.check(a, world) || self.check(b, world),
            ModalFormula::Box(inner) => self.successors(world).all(|w| self.check(inner, w)),
        }
    }
}

/// Verdict of the decision procedure. Invalid verdicts carry a
/// countermodel that has already been re-checked by direct evaluation:
/// the formula is false at its designated world.
#[derive(Debug, Serialize)]
pub enum Verdict {
    Valid,
    Invalid {
        countermodel: KripkeModel,
        /// World of the countermodel at which the formula is false.
        world: usize,
    },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Subformula skeleton: variables and the bodies of box subformulas, each
/// indexed for bitmask assignments.
struct Skeleton {
    atoms: Vec<String>,
    box_bodies: Vec<ModalFormula>,
}

impl Skeleton {
    fn build(formula: &ModalFormula) -> Result<Self, ProvabilityError> {
        let atoms = formula.variables();
        if atoms.len() > MAX_ATOMS {
            return Err(ProvabilityError::TooManyAtoms {
                count: atoms.len(),
                max: MAX_ATOMS,
            });
        }
        let mut box_bodies: Vec<ModalFormula> = Vec::new();
        formula.walk(&mut |f| {
            if let ModalFormula::Box(inner) = f {
                if !box_bodies.iter().any(|b| b == &**inner) {
                    box_bodies.push((**inner).clone());
                }
            }
        });
        if box_bodies.len() > MAX_BOXES {
            return Err(ProvabilityError::TooManyBoxes {
                count: box_bodies.len(),
                max: MAX_BOXES,
            });
        }
        Ok(Self { atoms, box_bodies })
    }

    fn atom_index(&self, name: &str) -> usize {
        self.atoms.iter().position(|a| a == name).expect("atom indexed")
    }

    fn box_index(&self, body: &ModalFormula) -> usize {
        self.box_bodies
            .iter()
            .position(|b| b == body)
            .expect("box indexed")
    }

    /// Propositional truth under an assignment to atoms and box
    /// subformulas.
    fn eval(&self, formula: &ModalFormula, atom_bits: u32, box_bits: u32) -> bool {
        match formula {
            ModalFormula::Bot => false,
            ModalFormula::Var(name) => atom_bits >> self.atom_index(name) & 1 == 1,
            ModalFormula::Implies(a, b) => {
                !self.eval(a, atom_bits, box_bits) || self.eval(b, atom_bits, box_bits)
            }
            ModalFormula::Box(inner) => box_bits >> self.box_index(inner) & 1 == 1,
        }
    }
}

/// One settled world of the refutation search: the assignment chosen for a
/// subproblem, from which the countermodel is assembled.
#[derive(Clone, Copy)]
struct WorldAssignment {
    atom_bits: u32,
    box_bits: u32,
}

/// Refutation search for GL. A subproblem (mask, refuted) asks for a world
/// that makes every box in `mask` true together with the bodies of all of
/// them except `refuted`, whose body must be false. Such a world witnesses
/// the failure of box(refuted) at any parent whose true boxes are
/// mask \ {refuted}. Recursive witnesses strictly enlarge the mask, so the
/// search terminates; memoization keys subproblems by (mask, refuted).
struct Search<'a> {
    skeleton: &'a Skeleton,
    memo: HashMap<(u32, usize), Option<WorldAssignment>>,
    visited: u64,
}

impl<'a> Search<'a> {
    fn new(skeleton: &'a Skeleton) -> Self {
        Self {
            skeleton,
            memo: HashMap::new(),
            visited: 0,
        }
    }

    fn spend(&mut self) -> Result<(), ProvabilityError> {
        self.visited += 1;
        if self.visited > SEARCH_BUDGET {
            Err(ProvabilityError::SearchBudget {
                budget: SEARCH_BUDGET,
            })
        } else {
            Ok(())
        }
    }

    /// Every assignment with the given box bits must justify its false
    /// boxes by witness worlds.
    fn coherent(&mut self, box_bits: u32) -> Result<bool, ProvabilityError> {
        let boxes = self.skeleton.box_bodies.len();
        for j in 0..boxes {
            if box_bits >> j & 1 == 0 && !self.witness(box_bits | 1 << j, j)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn witness(&mut self, mask: u32, refuted: usize) -> Result<bool, ProvabilityError> {
        if let Some(result) = self.memo.get(&(mask, refuted)) {
            return Ok(result.is_some());
        }
        // Masks strictly grow along recursion, so this cannot re-enter
        // an unfinished subproblem.
        let found = self.search_world(mask, refuted)?;
        self.memo.insert((mask, refuted), found);
        Ok(found.is_some())
    }

    fn search_world(
        &mut self,
        mask: u32,
        refuted: usize,
    ) -> Result<Option<WorldAssignment>, ProvabilityError> {
        let atoms = self.skeleton.atoms.len();
        let boxes = self.skeleton.box_bodies.len();
        let free: Vec<usize> = (0..boxes).filter(|j| mask >> j & 1 == 0).collect();
        for extra in 0..(1u32 << free.len()) {
            let mut box_bits = mask;
            for (k, &j) in free.iter().enumerate() {
                if extra >> k & 1 == 1 {
                    box_bits |= 1 << j;
                }
            }
            'atoms: for atom_bits in 0..(1u32 << atoms) {
                self.spend()?;
                if self
                    .skeleton
                    .eval(&self.skeleton.box_bodies[refuted], atom_bits, box_bits)
                {
                    continue;
                }
                for j in 0..boxes {
                    if j != refuted
                        && mask >> j & 1 == 1
                        && !self
                            .skeleton
                            .eval(&self.skeleton.box_bodies[j], atom_bits, box_bits)
                    {
                        continue 'atoms;
                    }
                }
                if self.coherent(box_bits)? {
                    return Ok(Some(WorldAssignment {
                        atom_bits,
                        box_bits,
                    }));
                }
            }
        }
        Ok(None)
    }

    fn search_root(
        &mut self,
        negated_target: &ModalFormula,
    ) -> Result<Option<WorldAssignment>, ProvabilityError> {
        let atoms = self.skeleton.atoms.len();
        let boxes = self.skeleton.box_bodies.len();
        for box_bits in 0..(1u32 << boxes) {
            for atom_bits in 0..(1u32 << atoms) {
                self.spend()?;
                if !self.skeleton.eval(negated_target, atom_bits, box_bits) {
                    continue;
                }
                if self.coherent(box_bits)? {
                    return Ok(Some(WorldAssignment {
                        atom_bits,
                        box_bits,
                    }));
                }
            }
        }
        Ok(None)
    }
}

/// Assembles the countermodel from the root assignment and the memoized
/// witnesses: each world's unjustified-false boxes point at the worlds
/// solving the corresponding subproblems, and the accessibility relation
/// is the transitive closure of those edges.
fn assemble_countermodel(
    skeleton: &Skeleton,
    search: &Search<'_>,
    root: WorldAssignment,
) -> (KripkeModel, usize) {
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Key {
        Root,
        Witness(u32, usize),
    }
    let mut ids: HashMap<Key, usize> = HashMap::new();
    let mut assignments: Vec<WorldAssignment> = Vec::new();
    let mut direct: Vec<(usize, usize)> = Vec::new();
    let mut queue: Vec<(Key, WorldAssignment)> = vec![(Key::Root, root)];
    while let Some((key, assignment)) = queue.pop() {
        if ids.contains_key(&key) {
            continue;
        }
        let id = assignments.len();
        ids.insert(key, id);
        assignments.push(assignment);
        for j in 0..skeleton.box_bodies.len() {
            if assignment.box_bits >> j & 1 == 0 {
                let child_key = Key::Witness(assignment.box_bits | 1 << j, j);
                let child = search.memo[&(assignment.box_bits | 1 << j, j)]
                    .expect("coherent worlds have witnesses for every false box");
                queue.push((child_key, child));
            }
        }
    }
    // Rebuild edges now that every id is known.
    for (id, assignment) in assignments.iter().enumerate() {
        for j in 0..skeleton.box_bodies.len() {
            if assignment.box_bits >> j & 1 == 0 {
                let child = ids[&Key::Witness(assignment.box_bits | 1 << j, j)];
                direct.push((id, child));
            }
        }
    }
    // Transitive closure; edges always point from smaller to larger masks,
    // so the closure stays irreflexive.
    let n = assignments.len();
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in &direct {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut edges = Vec::new();
    for (i, row) in reach.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r {
                edges.push((i, j));
            }
        }
    }
    let valuation = assignments
        .iter()
        .map(|a| {
            skeleton
                .atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| a.atom_bits >> i & 1 == 1)
                .map(|(_, name)| name.clone())
                .collect()
        })
        .collect();
    let model = KripkeModel::new(n, edges, valuation)
        .expect("constructed relation is transitive and irreflexive");
    (model, ids[&Key::Root])
}

/// Decides GL-validity. Invalid verdicts carry a countermodel re-checked
/// by direct Kripke evaluation; a failed re-check is reported as an
/// internal error rather than a wrong answer.
pub fn gl_decide(formula: &ModalFormula) -> Result<Verdict, ProvabilityError> {
    let skeleton = Skeleton::build(formula)?;
    let negated = ModalFormula::not(formula.clone());
    let mut search = Search::new(&skeleton);
    match search.search_root(&negated)? {
        None => Ok(Verdict::Valid),
        Some(root) => {
            let (countermodel, world) = assemble_countermodel(&skeleton, &search, root);
            if countermodel.check(formula, world) {
                return Err(ProvabilityError::CertificationFailed);
            }
            Ok(Verdict::Invalid {
                countermodel,
                world,
            })
        }
    }
}

/// Löb's theorem at the modal level: box(box phi -> phi) -> box phi is
/// valid for every phi.
pub fn lob_check(phi: &ModalFormula) -> Result<bool, ProvabilityError> {
    let instance = ModalFormula::implies(
        ModalFormula::boxed(ModalFormula::implies(
            ModalFormula::boxed(phi.clone()),
            phi.clone(),
        )),
        ModalFormula::boxed(phi.clone()),
    );
    Ok(gl_decide(&instance)?.is_valid())
}

/// A certified validity: the formula, what it certifies, and the verdict.
#[derive(Debug, Serialize)]
pub struct Certificate {
    pub description: &'static str,
    pub formula_text: String,
    pub valid: bool,
}

/// The provability fixed point at the modal level: Lambda = top satisfies
/// Lambda <-> box Lambda, is itself valid, and is the unique fixed point
/// up to equivalence (the uniqueness probe carries the hypothesis both
/// bare and boxed, which is what the uniqueness theorem requires).
pub fn fixed_point_lambda() -> Result<(ModalFormula, Vec<Certificate>), ProvabilityError> {
    let lambda = ModalFormula::top();
    let p = ModalFormula::var("p");
    let defining = ModalFormula::iff(lambda.clone(), ModalFormula::boxed(lambda.clone()));
    let hypothesis = ModalFormula::iff(p.clone(), ModalFormula::boxed(p.clone()));
    let uniqueness = ModalFormula::implies(
        ModalFormula::and(hypothesis.clone(), ModalFormula::boxed(hypothesis)),
        ModalFormula::iff(p, lambda.clone()),
    );
    let mut certificates = Vec::new();
    for (description, formula) in [
        ("lambda satisfies its defining equivalence", &defining),
        ("lambda is provable", &lambda),
        ("any boxed fixed point of box is equivalent to lambda", &uniqueness),
    ] {
        certificates.push(Certificate {
            description,
            formula_text: formula.to_string(),
            valid: gl_decide(formula)?.is_valid(),
        });
    }
    Ok((lambda, certificates))
}

/// Conjunction introduction: every input must be valid (the first invalid
/// one is reported by index), and the conjunction itself is certified.
pub fn conjunction_closure(
    theorems: &[ModalFormula],
) -> Result<(ModalFormula, Certificate), ProvabilityError> {
    for (index, theorem) in theorems.iter().enumerate() {
        if !gl_decide(theorem)?.is_valid() {
            return Err(ProvabilityError::InvalidConjunct { index });
        }
    }
    let conjunction = ModalFormula::conjoin(theorems);
    let valid = gl_decide(&conjunction)?.is_valid();
    Ok((
        conjunction.clone(),
        Certificate {
            description: "conjunction of certified theorems",
            formula_text: conjunction.to_string(),
            valid,
        },
    ))
}

pub const MAX_HIERARCHY_DEPTH: usize = 8;

/// Theory S_k at the modal level: fresh constants con_0 .. con_{k-1}
/// asserted as axioms.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryLevel {
    pub index: usize,
    pub extra_axiom_names: Vec<String>,
}

impl TheoryLevel {
    pub fn axioms(&self) -> Vec<ModalFormula> {
        self.extra_axiom_names
            .iter()
            .map(ModalFormula::var)
            .collect()
    }
}

/// One step of the extension: level k+1 contains con_k as an axiom, level
/// k cannot derive it (countermodel attached), and level k's axioms stay
/// jointly satisfiable (satisfying model attached).
#[derive(Debug, Serialize)]
pub struct HierarchyStep {
    pub level: usize,
    pub new_axiom: String,
    pub next_level_has_axiom: bool,
    pub underivable_countermodel: KripkeModel,
    pub axioms_satisfiable_model: KripkeModel,
}

#[derive(Debug, Serialize)]
pub struct HierarchyReport {
    pub levels: Vec<TheoryLevel>,
    pub steps: Vec<HierarchyStep>,
}

/// Builds levels 0..=depth and certifies, for each k < depth, that con_k
/// is an axiom of level k+1, that level k does not derive con_k (the
/// implication from its axioms has a countermodel), and that level k's
/// axiom set is satisfiable.
pub fn extension_hierarchy(depth: usize) -> Result<HierarchyReport, ProvabilityError> {
    if depth > MAX_HIERARCHY_DEPTH {
        return Err(ProvabilityError::DepthTooLarge {
            depth,
            max: MAX_HIERARCHY_DEPTH,
        });
    }
    let levels: Vec<TheoryLevel> = (0..=depth)
        .map(|k| TheoryLevel {
            index: k,
            extra_axiom_names: (0..k).map(|i| format!("con_{i}")).collect(),
        })
        .collect();
    let mut steps = Vec::new();
    for k in 0..depth {
        let new_axiom = format!("con_{k}");
        let next_level_has_axiom = levels[k + 1]
            .extra_axiom_names
            .iter()
            .any(|a| *a == new_axiom);
        let axioms = ModalFormula::conjoin(&levels[k].axioms());
        let derivation = ModalFormula::implies(axioms.clone(), ModalFormula::var(&new_axiom));
        let underivable_countermodel = match gl_decide(&derivation)? {
            Verdict::Invalid { countermodel, .. } => countermodel,
            Verdict::Valid => {
                return Err(ProvabilityError::CertificationFailed);
            }
        };
        let axioms_satisfiable_model = match gl_decide(&ModalFormula::not(axioms))? {
            Verdict::Invalid { countermodel, .. } => countermodel,
            Verdict::Valid => {
                return Err(ProvabilityError::CertificationFailed);
            }
        };
        steps.push(HierarchyStep {
            level: k,
            new_axiom,
            next_level_has_axiom,
            underivable_countermodel,
            axioms_satisfiable_model,
        });
    }
    Ok(HierarchyReport { levels, steps })
}
