//! Variable interaction graph: two variables are adjacent iff some clause
//! contains both.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vig {
    adjacency: Vec<Vec<usize>>,
}

impl Vig {
    pub fn build(instance: &Instance) -> Self {
        let n = instance.num_vars();
        let mut adjacency = vec![Vec::new(); n];
        for clause in instance.clauses() {
            let vars = clause.variables();
            for &u in &vars {
                for &v in &vars {
                    if u != v {
                        adjacency[u].push(v);
                    }
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Vig { adjacency }
    }

    pub fn num_vars(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        self.adjacency
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::VariableOutOfRange {
                var: v,
                n: self.num_vars(),
            })
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|list| list.binary_search(&v).is_ok())
    }

    /// Connected components of the subgraph induced on `active`.
    ///
    /// Each component is sorted and the list is ordered by smallest member.
    /// Indices outside `0..n` are ignored; duplicates in `active` are fine.
    pub fn connected_components_restricted(&self, active: &[usize]) -> Vec<Vec<usize>> {
        let n = self.num_vars();
        let mut in_active = vec![false; n];
        for &v in active {
            if v < n {
                in_active[v] = true;
            }
        }
        let mut seeds: Vec<usize> = active.iter().copied().filter(|&v| v < n).collect();
        seeds.sort_unstable();
        seeds.dedup();

        let mut visited = vec![false; n];
        let mut components = Vec::new();
        let mut stack = Vec::new();
        for seed in seeds {
            if visited[seed] {
                continue;
            }
            visited[seed] = true;
            stack.push(seed);
            let mut component = Vec::new();
            while let Some(u) = stack.pop() {
                component.push(u);
                for &w in &self.adjacency[u] {
                    if in_active[w] && !visited[w] {
                        visited[w] = true;
                        stack.push(w);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        // Seeds are visited in ascending order, so the list is already
        // ordered by smallest member.
        components
    }

    /// Writes one `u v` line per edge (1-based, `u < v`).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "c vig {} {}", self.num_vars(), self.num_edges())?;
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list.iter().filter(|&&v| v > u) {
                writeln!(out, "{} {}", u + 1, v + 1)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::e1;
    use crate::instance::{generate_uniform, parse_dimacs};
    use proptest::prelude::*;

    fn one_based(list: &[usize]) -> Vec<usize> {
        list.iter().map(|v| v + 1).collect()
    }

    #[test]
    fn worked_example_adjacency() {
        let vig = Vig::build(&e1());
        let expected: [&[usize]; 6] = [
            &[2, 3],
            &[1, 3, 5],
            &[1, 2, 5],
            &[5, 6],
            &[2, 3, 4, 6],
            &[4, 5],
        ];
        for (v, want) in expected.iter().enumerate() {
            assert_eq!(
                one_based(vig.neighbors(v).unwrap()),
                *want,
                "variable {}",
                v + 1
            );
        }
        assert_eq!(vig.num_edges(), 8);
        assert_eq!(
            vig.neighbors(6),
            Err(Error::VariableOutOfRange { var: 6, n: 6 })
        );
    }

    #[test]
    fn trivial_graphs() {
        let empty = parse_dimacs("p cnf 6 0\n").unwrap();
        let vig = Vig::build(&empty);
        assert_eq!(vig.num_edges(), 0);
        assert!(vig.neighbors(2).unwrap().is_empty());
        assert_eq!(
            vig.connected_components_restricted(&[1, 4]),
            vec![vec![1], vec![4]]
        );

        let triangle = parse_dimacs("p cnf 3 1\n1 2 3 0\n").unwrap();
        let vig = Vig::build(&triangle);
        assert_eq!(vig.num_edges(), 3);
        assert_eq!(vig.neighbors(0).unwrap(), &[1, 2]);
    }

    #[test]
    fn components_of_differing_variables() {
        let vig = Vig::build(&e1());
        // x_a = 110101 and x_b = 010000 differ on variables 1, 4, 6.
        assert_eq!(
            vig.connected_components_restricted(&[5, 0, 3]),
            vec![vec![0], vec![3, 5]]
        );
        assert!(vig.connected_components_restricted(&[]).is_empty());
    }

    #[test]
    fn edge_list_export() {
        let vig = Vig::build(&parse_dimacs("p cnf 3 1\n1 2 3 0\n").unwrap());
        let mut buf = Vec::new();
        vig.write_edge_list(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "c vig 3 3\n1 2\n1 3\n2 3\n"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn symmetric_irreflexive_cooccurrence(n in 3usize..40, cr in 0.4f64..5.0, seed: u64) {
            let inst = generate_uniform(n, cr, seed).unwrap();
            let vig = Vig::build(&inst);
            for u in 0..n {
                prop_assert!(!vig.are_adjacent(u, u));
                for &v in vig.neighbors(u).unwrap() {
                    prop_assert!(vig.are_adjacent(v, u));
                }
            }
            for u in 0..n {
                for v in 0..n {
                    let co = u != v && inst.clauses().iter().any(|c| c.contains(u) && c.contains(v));
                    prop_assert_eq!(vig.are_adjacent(u, v), co);
                }
            }
        }

        #[test]
        fn components_partition_active(n in 3usize..40, seed: u64, mask: u64) {
            let inst = generate_uniform(n, 1.5, seed).unwrap();
            let vig = Vig::build(&inst);
            let active: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let comps = vig.connected_components_restricted(&active);
            let mut union: Vec<usize> = comps.iter().flatten().copied().collect();
            union.sort_unstable();
            prop_assert_eq!(&union, &active);
            let mut owner = vec![usize::MAX; n];
            for (ci, comp) in comps.iter().enumerate() {
                prop_assert!(comp.windows(2).all(|w| w[0] < w[1]));
                for &v in comp {
                    owner[v] = ci;
                }
            }
            prop_assert!(comps.windows(2).all(|w| w[0][0] < w[1][0]));
            for &u in &active {
                for &v in vig.neighbors(u).unwrap() {
                    if owner[v] != usize::MAX {
                        prop_assert_eq!(owner[u], owner[v]);
                    }
                }
            }
        }
    }
}
