//! Seeded random modal formulas for the comparison suites.

use rand::Rng;

use super::ModalFormula;

/// Random modal formula. `max_depth` bounds the nesting of generated
/// connectives; derived connectives expand to a constant number of
/// primitive nodes each, so box nesting in particular never exceeds
/// `max_depth`.
pub fn random_modal_formula<R: Rng>(
    rng: &mut R,
    max_depth: usize,
    variables: &[&str],
) -> ModalFormula {
    let leaf = |rng: &mut R| match rng.gen_range(0..variables.len() + 1) {
        0 => ModalFormula::Bot,
        i => ModalFormula::var(variables[i - 1]),
    };
    if max_depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..16) {
        0..=2 => leaf(rng),
        3..=4 => ModalFormula::not(random_modal_formula(rng, max_depth - 1, variables)),
        5..=6 => ModalFormula::and(
            random_modal_formula(rng, max_depth - 1, variables),
            random_modal_formula(rng, max_depth - 1, variables),
        ),
        7..=8 => ModalFormula::or(
            random_modal_formula(rng, max_depth - 1, variables),
            random_modal_formula(rng, max_depth - 1, variables),
        ),
        9..=11 => ModalFormula::implies(
            random_modal_formula(rng, max_depth - 1, variables),
            random_modal_formula(rng, max_depth - 1, variables),
        ),
        _ => ModalFormula::boxed(random_modal_formula(rng, max_depth - 1, variables)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn box_nesting(formula: &ModalFormula) -> usize {
        match formula {
            ModalFormula::Bot | ModalFormula::Var(_) => 0,
            ModalFormula::Implies(a, b) => box_nesting(a).max(box_nesting(b)),
            ModalFormula::Box(inner) => 1 + box_nesting(inner),
        }
    }

    #[test]
    fn respects_depth_and_vocabulary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let formula = random_modal_formula(&mut rng, 3, &["p", "q"]);
            assert!(box_nesting(&formula) <= 3);
            for var in formula.variables() {
                assert!(var == "p" || var == "q");
            }
        }
    }

    #[test]
    fn is_deterministic_for_a_seed() {
        let mut a = ChaCha8Rng::seed_from_u64(17);
        let mut b = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            assert_eq!(
                random_modal_formula(&mut a, 4, &["p", "q"]),
                random_modal_formula(&mut b, 4, &["p", "q"]),
            );
        }
    }

    #[test]
    fn produces_modal_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let boxed = (0..200)
            .filter(|_| box_nesting(&random_modal_formula(&mut rng, 3, &["p", "q"])) > 0)
            .count();
        assert!(boxed > 50);
    }
}
