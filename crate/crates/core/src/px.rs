//! Partition crossover.
//!
//! Variables on which two parents agree are dropped from the interaction
//! graph; the connected components of what remains are exchanged as units.
//! Every clause's differing variables fall into a single component, so the
//! satisfied-clause count splits additively over components and the sum of
//! parental fitness is conserved by any exchange.

use crate::error::{Error, Result};
use crate::instance::{clause_sat_count, Assignment, Instance};
use crate::vig::Vig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PxComponent {
    pub variables: Vec<usize>,
    /// Satisfied clauses, under parent `a`, among the clauses whose
    /// differing variables lie in this component.
    pub fitness_a: usize,
    pub fitness_b: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PxDecomposition {
    /// Variables on which both parents agree.
    pub shared: Vec<usize>,
    pub components: Vec<PxComponent>,
}

pub fn px_decompose(
    instance: &Instance,
    vig: &Vig,
    a: &Assignment,
    b: &Assignment,
) -> Result<PxDecomposition> {
    instance.check_assignment(a)?;
    instance.check_assignment(b)?;
    let differing = a.differing(b);
    if differing.is_empty() {
        return Err(Error::IdenticalParents);
    }
    let n = instance.num_vars();
    let shared = {
        let mut is_diff = vec![false; n];
        for &v in &differing {
            is_diff[v] = true;
        }
        (0..n).filter(|&v| !is_diff[v]).collect()
    };

    let groups = vig.connected_components_restricted(&differing);
    let mut owner = vec![usize::MAX; n];
    for (gi, group) in groups.iter().enumerate() {
        for &v in group {
            owner[v] = gi;
        }
    }
    let mut components: Vec<PxComponent> = groups
        .into_iter()
        .map(|variables| PxComponent {
            variables,
            fitness_a: 0,
            fitness_b: 0,
        })
        .collect();

    for clause in instance.clauses() {
        let mut home = None;
        for u in clause.variables() {
            if owner[u] != usize::MAX {
                debug_assert!(home.is_none_or(|h| h == owner[u]));
                home = Some(owner[u]);
            }
        }
        if let Some(gi) = home {
            let comp = &mut components[gi];
            comp.fitness_a += (clause_sat_count(clause, a) > 0) as usize;
            comp.fitness_b += (clause_sat_count(clause, b) > 0) as usize;
        }
    }

    Ok(PxDecomposition { shared, components })
}

impl PxDecomposition {
    /// Takes each component from the parent scoring higher on it (ties go
    /// to `a`). Returns the child and its fitness gain over `a`.
    pub fn best_offspring(&self, a: &Assignment, b: &Assignment) -> (Assignment, usize) {
        let mut child = a.clone();
        let mut gain = 0;
        for comp in &self.components {
            if comp.fitness_b > comp.fitness_a {
                gain += comp.fitness_b - comp.fitness_a;
                for &v in &comp.variables {
                    child.set(v, b.get(v));
                }
            }
        }
        (child, gain)
    }
}

/// Swaps the genes listed in `mask` between the parents.
pub fn px_exchange(a: &Assignment, b: &Assignment, mask: &[usize]) -> (Assignment, Assignment) {
    let mut a2 = a.clone();
    let mut b2 = b.clone();
    for &v in mask {
        a2.set(v, b.get(v));
        b2.set(v, a.get(v));
    }
    (a2, b2)
}

/// The best child obtainable by exchanging components between `a` and `b`.
pub fn px_best_offspring(
    instance: &Instance,
    vig: &Vig,
    a: &Assignment,
    b: &Assignment,
) -> Result<Assignment> {
    let decomposition = px_decompose(instance, vig, a, b)?;
    Ok(decomposition.best_offspring(a, b).0)
}
