//! Seeded random formula generators for the property suites. Generated
//! formulas are well-sorted by construction; bound variables are named
//! t0, t1, ... and s0, s1, ... by sort, so caller-provided scopes should
//! avoid those names.

use rand::Rng;

use super::{Formula, Sort};

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Full,
    /// Only atoms, conjunction, disjunction, and existentials: truth is
    /// monotone under enlarging the state domain.
    Positive,
}

const PREDICATES: [&str; 2] = ["P", "Q"];

fn pick_var<R: Rng>(rng: &mut R, scope: &[(String, Sort)], sort: Sort) -> Option<String> {
    let candidates: Vec<&String> = scope
        .iter()
        .filter(|(_, s)| *s == sort)
        .map(|(name, _)| name)
        .collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.gen_range(0..candidates.len())].clone())
    }
}

fn atom<R: Rng>(rng: &mut R, scope: &[(String, Sort)]) -> Option<Formula> {
    let has_time = scope.iter().any(|(_, s)| *s == Sort::Time);
    let has_state = scope.iter().any(|(_, s)| *s == Sort::State);
    let mut options: Vec<u8> = Vec::new();
    if has_time && has_state {
        options.push(0); // X(t, s)
    }
    if has_state {
        options.extend([1, 2]); // predicate, state equality
    }
    if has_time {
        options.extend([3, 4]); // order, time equality
    }
    if options.is_empty() {
        return None;
    }
    let choice = options[rng.gen_range(0..options.len())];
    Some(match choice {
        0 => Formula::Trajectory {
            time: pick_var(rng, scope, Sort::Time).unwrap(),
            state: pick_var(rng, scope, Sort::State).unwrap(),
        },
        1 => Formula::Predicate {
            name: PREDICATES[rng.gen_range(0..PREDICATES.len())].to_string(),
            arg: pick_var(rng, scope, Sort::State).unwrap(),
        },
        2 => Formula::Equal {
            sort: Sort::State,
            left: pick_var(rng, scope, Sort::State).unwrap(),
            right: pick_var(rng, scope, Sort::State).unwrap(),
        },
        3 => Formula::Less {
            left: pick_var(rng, scope, Sort::Time).unwrap(),
            right: pick_var(rng, scope, Sort::Time).unwrap(),
        },
        _ => Formula::Equal {
            sort: Sort::Time,
            left: pick_var(rng, scope, Sort::Time).unwrap(),
            right: pick_var(rng, scope, Sort::Time).unwrap(),
        },
    })
}

fn quantifier<R: Rng>(
    rng: &mut R,
    scope: &mut Vec<(String, Sort)>,
    depth: usize,
    counter: &mut usize,
    mode: Mode,
) -> Formula {
    let sort = if rng.gen_bool(0.5) {
        Sort::Time
    } else {
        Sort::State
    };
    let var = match sort {
        Sort::Time => format!("t{counter}"),
        Sort::State => format!("s{counter}"),
    };
    *counter += 1;
    scope.push((var.clone(), sort));
    let body = generate(rng, scope, depth.saturating_sub(1), counter, mode);
    scope.pop();
    let universal = mode == Mode::Full && rng.gen_bool(0.5);
    if universal {
        Formula::forall(var, sort, body)
    } else {
        Formula::exists(var, sort, body)
    }
}

fn generate<R: Rng>(
    rng: &mut R,
    scope: &mut Vec<(String, Sort)>,
    depth: usize,
    counter: &mut usize,
    mode: Mode,
) -> Formula {
    if scope.is_empty() || (depth > 0 && rng.gen_ratio(1, 3)) {
        return quantifier(rng, scope, depth, counter, mode);
    }
    if depth == 0 {
        return atom(rng, scope).expect("non-empty scope admits an atom");
    }
    let connective = match mode {
        Mode::Full => rng.gen_range(0..4),
        Mode::Positive => rng.gen_range(2..4),
    };
    match connective {
        0 => Formula::not(generate(rng, scope, depth - 1, counter, mode)),
        1 => Formula::implies(
            generate(rng, scope, depth - 1, counter, mode),
            generate(rng, scope, depth - 1, counter, mode),
        ),
        2 => Formula::and(
            generate(rng, scope, depth - 1, counter, mode),
            generate(rng, scope, depth - 1, counter, mode),
        ),
        _ => Formula::or(
            generate(rng, scope, depth - 1, counter, mode),
            generate(rng, scope, depth - 1, counter, mode),
        ),
    }
}

/// Random closed well-sorted formula with nesting depth at most
/// `max_depth` plus the root quantifier.
pub fn random_closed_formula<R: Rng>(rng: &mut R, max_depth: usize) -> Formula {
    let mut counter = 0;
    generate(rng, &mut Vec::new(), max_depth, &mut counter, Mode::Full)
}

/// Random formula whose free variables are drawn from `scope`.
pub fn random_formula_in_scope<R: Rng>(
    rng: &mut R,
    scope: &[(String, Sort)],
    max_depth: usize,
) -> Formula {
    let mut counter = 0;
    let mut scope = scope.to_vec();
    generate(rng, &mut scope, max_depth, &mut counter, Mode::Full)
}

/// Random closed formula built from atoms, conjunction, disjunction, and
/// existential quantifiers only.
pub fn random_positive_existential<R: Rng>(rng: &mut R, max_depth: usize) -> Formula {
    let mut counter = 0;
    generate(rng, &mut Vec::new(), max_depth, &mut counter, Mode::Positive)
}
