//! Two-sorted first-order language over sampled trajectories: formulas
//! quantify over a finite time grid and a finite state grid, the atomic
//! relation X(t, s) holds when s matches the trajectory value at t within a
//! tolerance, and evaluation is the classical Tarskian recursion under the
//! sampled semantics. Quantifier loops run in ascending domain order and
//! short-circuit, which keeps results deterministic.

mod generate;
mod parser;

pub use generate::{random_closed_formula, random_formula_in_scope, random_positive_existential};
pub use parser::parse_formula;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::space::{euclidean_distance, StateVector};

#[derive(Debug, Error)]
pub enum LogicError {
    #[error("lex error at {line}:{col}: {msg}")]
    Lex { line: usize, col: usize, msg: String },
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("sort error at {line}:{col}: {msg}")]
    Sort { line: usize, col: usize, msg: String },
    #[error("{reason}")]
    InvalidStructure { reason: &'static str },
    #[error("variable '{name}' is not bound by a quantifier or the assignment")]
    UnboundVariable { name: String },
    #[error("predicate '{name}' is not defined by the structure")]
    UnknownPredicate { name: String },
    #[error("assignment binds '{name}' to a value outside the {sort} domain")]
    ElementNotInDomain { name: String, sort: Sort },
    #[error("evaluation exceeded the node budget of {budget}")]
    BudgetExhausted { budget: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sort {
    Time,
    State,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Time => write!(f, "Time"),
            Sort::State => write!(f, "State"),
        }
    }
}

/// Formula of the two-sorted language. Terms are variables; the trajectory
/// relation X pairs a time with a state, named predicates apply to states,
/// < orders times, and = compares within one sort.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Trajectory { time: String, state: String },
    Predicate { name: String, arg: String },
    Less { left: String, right: String },
    Equal { sort: Sort, left: String, right: String },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall { var: String, sort: Sort, body: Box<Formula> },
    Exists { var: String, sort: Sort, body: Box<Formula> },
}

impl Formula {
    pub fn not(inner: Formula) -> Formula {
        Formula::Not(Box::new(inner))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(var: impl Into<String>, sort: Sort, body: Formula) -> Formula {
        Formula::Forall {
            var: var.into(),
            sort,
            body: Box::new(body),
        }
    }

    pub fn exists(var: impl Into<String>, sort: Sort, body: Formula) -> Formula {
        Formula::Exists {
            var: var.into(),
            sort,
            body: Box::new(body),
        }
    }

    /// Free variables with their sorts, in first-occurrence order.
    pub fn free_variables(&self) -> Vec<(String, Sort)> {
        let mut free = Vec::new();
        let mut scope = Vec::new();
        self.collect_free(&mut scope, &mut free);
        free
    }

    fn collect_free(&self, scope: &mut Vec<String>, free: &mut Vec<(String, Sort)>) {
        let mut record = |name: &str, sort: Sort, scope: &Vec<String>| {
            if !scope.iter().any(|v| v == name) && !free.iter().any(|(v, _)| v == name) {
                free.push((name.to_string(), sort));
            }
        };
        match self {
            Formula::Trajectory { time, state } => {
                record(time, Sort::Time, scope);
                record(state, Sort::State, scope);
            }
            Formula::Predicate { arg, .. } => record(arg, Sort::State, scope),
            Formula::Less { left, right } => {
                record(left, Sort::Time, scope);
                record(right, Sort::Time, scope);
            }
            Formula::Equal { sort, left, right } => {
                record(left, *sort, scope);
                record(right, *sort, scope);
            }
            Formula::Not(inner) => inner.collect_free(scope, free),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_free(scope, free);
                b.collect_free(scope, free);
            }
            Formula::Forall { var, body, .. } | Formula::Exists { var, body, .. } => {
                scope.push(var.clone());
                body.collect_free(scope, free);
                scope.pop();
            }
        }
    }
}

/// Fully parenthesized form that re-parses to the identical AST.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Trajectory { time, state } => write!(f, "X({time},{state})"),
            Formula::Predicate { name, arg } => write!(f, "{name}({arg})"),
            Formula::Less { left, right } => write!(f, "({left} < {right})"),
            Formula::Equal { left, right, .. } => write!(f, "({left} = {right})"),
            Formula::Not(inner) => write!(f, "!{inner}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Forall { var, sort, body } => write!(f, "(forall {var}:{sort} . {body})"),
            Formula::Exists { var, sort, body } => write!(f, "(exists {var}:{sort} . {body})"),
        }
    }
}

type PredicateFn = Box<dyn Fn(&StateVector) -> bool + Send + Sync>;

/// Finite sampled model: a time grid, a state grid, the trajectory values
/// on the time grid, named state predicates, and the matching tolerance
/// for the X relation.
pub struct Structure {
    times: Vec<f64>,
    states: Vec<StateVector>,
    trajectory_values: Vec<StateVector>,
    predicates: BTreeMap<String, PredicateFn>,
    match_tol: f64,
}

impl Structure {
    /// Samples `trajectory` on the time grid. Times must be finite and
    /// strictly increasing; either grid may be empty.
    pub fn new(
        times: Vec<f64>,
        states: Vec<StateVector>,
        trajectory: impl Fn(f64) -> StateVector,
        match_tol: f64,
    ) -> Result<Self, LogicError> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(LogicError::InvalidStructure {
                reason: "time grid must be finite",
            });
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LogicError::InvalidStructure {
                reason: "time grid must be strictly increasing",
            });
        }
        if !(match_tol > 0.0 && match_tol.is_finite()) {
            return Err(LogicError::InvalidStructure {
                reason: "match_tol must be positive and finite",
            });
        }
        let trajectory_values: Vec<StateVector> = times.iter().map(|&t| trajectory(t)).collect();
        if let Some(dim) = trajectory_values.first().map(StateVector::dim) {
            if trajectory_values.iter().any(|v| v.dim() != dim)
                || states.iter().any(|s| s.dim() != dim)
            {
                return Err(LogicError::InvalidStructure {
                    reason: "trajectory and state dimensions must agree",
                });
            }
        } else if let Some(dim) = states.first().map(StateVector::dim) {
            if states.iter().any(|s| s.dim() != dim) {
                return Err(LogicError::InvalidStructure {
                    reason: "state dimensions must agree",
                });
            }
        }
        Ok(Self {
            times,
            states,
            trajectory_values,
            predicates: BTreeMap::new(),
            match_tol,
        })
    }

    pub fn add_predicate(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&StateVector) -> bool + Send + Sync + 'static,
    ) {
        self.predicates.insert(name.into(), Box::new(f));
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn trajectory_values(&self) -> &[StateVector] {
        &self.trajectory_values
    }

    pub fn match_tol(&self) -> f64 {
        self.match_tol
    }
}

/// Value a variable can take: an element of one of the two domains.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    Time(f64),
    State(StateVector),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Time(t) => write!(f, "{t}"),
            Element::State(s) => {
                write!(f, "(")?;
                for (i, c) in s.coords().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Sort-respecting bindings for the free variables of a formula.
#[derive(Default)]
pub struct Assignment {
    bindings: BTreeMap<String, Element>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind_time(mut self, name: impl Into<String>, t: f64) -> Self {
        self.bindings.insert(name.into(), Element::Time(t));
        self
    }

    pub fn bind_state(mut self, name: impl Into<String>, s: StateVector) -> Self {
        self.bindings.insert(name.into(), Element::State(s));
        self
    }
}

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// Outcome of one evaluation: the truth value, the number of formula nodes
/// visited, and explanatory bindings for the outermost quantifier prefix
/// (witnesses of true existentials, counterexamples of false universals).
#[derive(Debug)]
pub struct EvalReport {
    pub value: bool,
    pub nodes_visited: u64,
    pub bindings: Vec<(String, Element)>,
}

enum Binding<'a> {
    TimeIdx(usize),
    StateIdx(usize),
    Free(&'a Element),
}

struct Evaluator<'a> {
    structure: &'a Structure,
    stack: Vec<(&'a str, Binding<'a>)>,
    budget: u64,
    nodes: u64,
}

impl<'a> Evaluator<'a> {
    fn lookup(&self, name: &str) -> Result<&Binding<'a>, LogicError> {
        self.stack
            .iter()
            .rev()
            .find(|(v, _)| *v == name)
            .map(|(_, b)| b)
            .ok_or_else(|| LogicError::UnboundVariable {
                name: name.to_string(),
            })
    }

    fn time_value(&self, name: &str) -> Result<f64, LogicError> {
        match self.lookup(name)? {
            Binding::TimeIdx(i) => Ok(self.structure.times[*i]),
            Binding::Free(Element::Time(t)) => Ok(*t),
            _ => Err(LogicError::ElementNotInDomain {
                name: name.to_string(),
                sort: Sort::Time,
            }),
        }
    }

    fn state_value(&self, name: &str) -> Result<&'a StateVector, LogicError> {
        match self.lookup(name)? {
            Binding::StateIdx(i) => Ok(&self.structure.states[*i]),
            Binding::Free(Element::State(s)) => Ok(s),
            _ => Err(LogicError::ElementNotInDomain {
                name: name.to_string(),
                sort: Sort::State,
            }),
        }
    }

    fn trajectory_at(&self, name: &str) -> Result<&'a StateVector, LogicError> {
        match self.lookup(name)? {
            Binding::TimeIdx(i) => Ok(&self.structure.trajectory_values[*i]),
            Binding::Free(Element::Time(t)) => {
                let i = self
                    .structure
                    .times
                    .iter()
                    .position(|u| u == t)
                    .expect("free time bindings are validated up front");
                Ok(&self.structure.trajectory_values[i])
            }
            _ => Err(LogicError::ElementNotInDomain {
                name: name.to_string(),
                sort: Sort::Time,
            }),
        }
    }

    fn eval(&mut self, formula: &'a Formula) -> Result<bool, LogicError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(LogicError::BudgetExhausted {
                budget: self.budget,
            });
        }
        match formula {
            Formula::Trajectory { time, state } => {
                let traj = self.trajectory_at(time)?;
                let s = self.state_value(state)?;
                Ok(euclidean_distance(s, traj) <= self.structure.match_tol)
            }
            Formula::Predicate { name, arg } => {
                let s = self.state_value(arg)?;
                let p = self.structure.predicates.get(name).ok_or_else(|| {
                    LogicError::UnknownPredicate { name: name.clone() }
                })?;
                Ok(p(s))
            }
            Formula::Less { left, right } => Ok(self.time_value(left)? < self.time_value(right)?),
            Formula::Equal { sort, left, right } => match sort {
                Sort::Time => Ok(self.time_value(left)? == self.time_value(right)?),
                Sort::State => Ok(self.state_value(left)? == self.state_value(right)?),
            },
            Formula::Not(inner) => Ok(!self.eval(inner)?),
            Formula::And(a, b) => Ok(self.eval(a)? && self.eval(b)?),
            Formula::Or(a, b) => Ok(self.eval(a)? || self.eval(b)?),
            Formula::Implies(a, b) => Ok(!self.eval(a)? || self.eval(b)?),
            Formula::Forall { var, sort, body } => {
                let count = self.domain_len(*sort);
                for i in 0..count {
                    self.stack.push((var, Self::binding(*sort, i)));
                    let holds = self.eval(body);
                    self.stack.pop();
                    if !holds? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Exists { var, sort, body } => {
                let count = self.domain_len(*sort);
                for i in 0..count {
                    self.stack.push((var, Self::binding(*sort, i)));
                    let holds = self.eval(body);
                    self.stack.pop();
                    if holds? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    fn domain_len(&self, sort: Sort) -> usize {
        match sort {
            Sort::Time => self.structure.times.len(),
            Sort::State => self.structure.states.len(),
        }
    }

    fn binding(sort: Sort, index: usize) -> Binding<'a> {
        match sort {
            Sort::Time => Binding::TimeIdx(index),
            Sort::State => Binding::StateIdx(index),
        }
    }
}

fn validate_assignment<'a>(
    structure: &Structure,
    formula: &Formula,
    assignment: &'a Assignment,
) -> Result<Vec<(&'a str, Binding<'a>)>, LogicError> {
    let mut stack = Vec::new();
    for (name, sort) in formula.free_variables() {
        let element =
            assignment
                .bindings
                .get(&name)
                .ok_or_else(|| LogicError::UnboundVariable {
                    name: name.clone(),
                })?;
        let ok = match (sort, element) {
            (Sort::Time, Element::Time(t)) => structure.times.iter().any(|u| u == t),
            (Sort::State, Element::State(s)) => structure.states.iter().any(|u| u == s),
            _ => false,
        };
        if !ok {
            return Err(LogicError::ElementNotInDomain { name, sort });
        }
        let (key, value) = assignment.bindings.get_key_value(&name).expect("present");
        stack.push((key.as_str(), Binding::Free(value)));
    }
    Ok(stack)
}

/// Tarskian evaluation under the sampled semantics with the default node
/// budget.
pub fn evaluate(
    structure: &Structure,
    formula: &Formula,
    assignment: &Assignment,
) -> Result<bool, LogicError> {
    Ok(evaluate_report(structure, formula, assignment, DEFAULT_NODE_BUDGET)?.value)
}

/// Evaluation with an explicit node budget, reporting the node count and
/// explanatory bindings for the outermost quantifier prefix.
pub fn evaluate_report(
    structure: &Structure,
    formula: &Formula,
    assignment: &Assignment,
    budget: u64,
) -> Result<EvalReport, LogicError> {
    let stack = validate_assignment(structure, formula, assignment)?;
    let mut evaluator = Evaluator {
        structure,
        stack,
        budget,
        nodes: 0,
    };
    let value = evaluator.eval(formula)?;
    let bindings = explain(&mut evaluator, formula, value)?;
    Ok(EvalReport {
        value,
        nodes_visited: evaluator.nodes,
        bindings,
    })
}

/// Walks the outermost quantifier prefix re-evaluating bodies: for a true
/// existential the first witness, for a false universal the first
/// counterexample. Stops when the next quantifier is not explanatory by a
/// single element.
fn explain<'a>(
    evaluator: &mut Evaluator<'a>,
    formula: &'a Formula,
    value: bool,
) -> Result<Vec<(String, Element)>, LogicError> {
    let mut bindings = Vec::new();
    let mut current = formula;
    let mut current_value = value;
    loop {
        let (var, sort, body, want) = match current {
            Formula::Exists { var, sort, body } if current_value => (var, *sort, body, true),
            Formula::Forall { var, sort, body } if !current_value => (var, *sort, body, false),
            _ => return Ok(bindings),
        };
        let count = evaluator.domain_len(sort);
        let mut found = None;
        for i in 0..count {
            evaluator.stack.push((var, Evaluator::binding(sort, i)));
            let holds = evaluator.eval(body);
            match holds {
                Ok(v) if v == want => {
                    found = Some(i);
                    break;
                }
                Ok(_) => {
                    evaluator.stack.pop();
                }
                Err(e) => {
                    evaluator.stack.pop();
                    return Err(e);
                }
            }
        }
        let index = found.expect("the deciding element exists by the evaluation result");
        let element = match sort {
            Sort::Time => Element::Time(evaluator.structure.times[index]),
            Sort::State => Element::State(evaluator.structure.states[index].clone()),
        };
        bindings.push((var.clone(), element));
        current = body;
        current_value = want;
        // The deciding binding stays on the stack for the next level.
    }
}

/// True iff every trajectory sample matches at most one state-grid element
/// within match_tol, so the X relation is functional on the grid.
pub fn check_functionality(structure: &Structure) -> bool {
    structure.trajectory_values.iter().all(|traj| {
        structure
            .states
            .iter()
            .filter(|s| euclidean_distance(s, traj) <= structure.match_tol)
            .count()
            <= 1
    })
}

/// The sampled sine model: time grid [0, 2pi] step 0.01, scalar state grid
/// [-1, 1] step 0.001, trajectory sin t, predicate P(s) = s > 0.
pub fn sin_structure(match_tol: f64) -> Result<Structure, LogicError> {
    let times: Vec<f64> = (0..=628).map(|i| i as f64 * 0.01).collect();
    let states: Vec<StateVector> = (0..=2000)
        .map(|i| StateVector::scalar((i - 1000) as f64 * 1e-3))
        .collect();
    let mut structure = Structure::new(times, states, |t| StateVector::scalar(t.sin()), match_tol)?;
    structure.add_predicate("P", |s| s.get(0) > 0.0);
    Ok(structure)
}
