//! Enumeration of admissible subgroups of Im(N,2) and their classification up
//! to conjugation by a partition stabilizer.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use super::imn2::{ElemSet, ImN2, ImN2Element};
use super::partition::HodgePartition;
use super::triple::{quartic_case_letter, triple_from_elements, DodsonTriple};
use super::DodsonError;
use crate::perm;

/// Default upper bound on N for enumeration.
pub const DEFAULT_ENUM_BOUND: usize = 4;

#[derive(Debug, Clone)]
pub struct AdmissibleSubgroup {
    pub set: ElemSet,
    pub elements: Vec<ImN2Element>,
    pub triple: DodsonTriple,
}

/// All subgroups of Im(N,2) containing ρ, in lexicographic order of their
/// sorted index lists.
///
/// Breadth-first from ⟨ρ⟩: each subgroup is extended by one element at a
/// time. Elements in the same coset `Hg` or `gH` give the same extension, so
/// only one per coset is tried.
pub fn subgroups_containing_rho(g: &ImN2) -> Vec<ElemSet> {
    let start = g.closure(&[g.rho()]);
    let mut seen: HashSet<ElemSet> = HashSet::from([start.clone()]);
    let mut all = vec![start.clone()];
    let mut frontier: Vec<(ElemSet, Vec<usize>)> = vec![(start, vec![g.rho()])];
    while !frontier.is_empty() {
        let found: Vec<(ElemSet, Vec<usize>)> = frontier
            .par_iter()
            .flat_map_iter(|(h, gens)| {
                let mut covered = h.clone();
                let mut out = Vec::new();
                for x in 0..g.order() {
                    if covered.contains(x) {
                        continue;
                    }
                    for y in h.iter() {
                        covered.insert(g.mul(y, x));
                        covered.insert(g.mul(x, y));
                    }
                    let mut gens2 = gens.clone();
                    gens2.push(x);
                    out.push((g.closure(&gens2), gens2));
                }
                out
            })
            .collect();
        frontier = Vec::new();
        for (k, gens) in found {
            if seen.insert(k.clone()) {
                all.push(k.clone());
                frontier.push((k, gens));
            }
        }
    }
    all.sort_by_cached_key(ElemSet::indices);
    all
}

/// All admissible subgroups (ρ ∈ G, transitive permutation image), each with
/// its triple, in deterministic order.
pub fn enumerate_admissible(n: usize, bound: usize) -> Result<Vec<AdmissibleSubgroup>, DodsonError> {
    if n == 0 || n > bound || n > super::imn2::MAX_TABULATED_N {
        return Err(DodsonError::BoundExceeded { n, bound: bound.min(super::imn2::MAX_TABULATED_N) });
    }
    let g = ImN2::new(n);
    Ok(admissible_in(&g))
}

pub fn admissible_in(g: &ImN2) -> Vec<AdmissibleSubgroup> {
    subgroups_containing_rho(g)
        .into_iter()
        .filter(|s| perm::is_transitive(&g.projection(s), g.n()))
        .map(|set| {
            let elements = g.elements_of(&set);
            let triple = triple_from_elements(&elements);
            AdmissibleSubgroup { set, elements, triple }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SubgroupClass {
    /// Sorted element list of the canonical representative.
    pub representative: Vec<String>,
    pub order: usize,
    pub triple: DodsonTriple,
    /// Number of admissible subgroups in the class.
    pub orbit_size: usize,
    pub tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub partition: String,
    pub stabilizer_order: usize,
    pub admissible_count: usize,
    pub class_count: usize,
    pub classes: Vec<SubgroupClass>,
}

/// Lexicographically smallest sorted index list among the conjugates.
fn canonical(g: &ImN2, stab: &[usize], set: &ElemSet) -> Vec<usize> {
    stab.iter()
        .map(|&s| g.conjugate_set(s, set).indices())
        .min()
        .expect("stabilizer contains the identity")
}

pub fn classify_conjugacy(
    n: usize,
    partition: &HodgePartition,
    bound: usize,
) -> Result<ClassificationReport, DodsonError> {
    if partition.n != n {
        return Err(DodsonError::InvalidPartition(format!(
            "partition has {} pairs, expected {n}",
            partition.n
        )));
    }
    let subs = enumerate_admissible(n, bound)?;
    let g = ImN2::new(n);
    let stab = partition.stabilizer(&g);
    let keys: Vec<Vec<usize>> = subs.par_iter().map(|s| canonical(&g, &stab, &s.set)).collect();
    let mut classes: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for k in keys {
        *classes.entry(k).or_insert(0) += 1;
    }
    let mut out: Vec<SubgroupClass> = classes
        .into_iter()
        .map(|(rep, orbit_size)| {
            let elements: Vec<ImN2Element> = rep.iter().map(|&i| g.element(i).clone()).collect();
            let triple = triple_from_elements(&elements);
            let tag = triple.tag();
            SubgroupClass {
                representative: elements.iter().map(ToString::to_string).collect(),
                order: elements.len(),
                case: quartic_case_letter(&triple).map(String::from),
                tag: tag.to_string(),
                detail: tag.detail,
                triple,
                orbit_size,
            }
        })
        .collect();
    out.sort_by(|a, b| (a.order, &a.representative).cmp(&(b.order, &b.representative)));
    Ok(ClassificationReport {
        n,
        partition: partition.name.clone(),
        stabilizer_order: stab.len(),
        admissible_count: subs.len(),
        class_count: out.len(),
        classes: out,
    })
}

/// Canonical form of an arbitrary subgroup given as an element list, under
/// conjugation by `stab` (no tabulation needed).
pub fn canonical_elements(elems: &[ImN2Element], stab: &[ImN2Element]) -> Vec<ImN2Element> {
    stab.iter()
        .map(|s| {
            let si = s.inv();
            let mut c: Vec<ImN2Element> = elems.iter().map(|e| s.mul(e).mul(&si)).collect();
            c.sort();
            c
        })
        .min()
        .expect("stabilizer contains the identity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dodson::partition::PartitionPreset;

    #[test]
    fn admissible_counts() {
        let counts: Vec<usize> = (1..=3)
            .map(|n| enumerate_admissible(n, DEFAULT_ENUM_BOUND).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 3, 10]);
    }

    #[test]
    fn bound_enforced() {
        assert!(matches!(
            enumerate_admissible(4, 3),
            Err(DodsonError::BoundExceeded { .. })
        ));
    }

    #[test]
    fn class_counts() {
        let count = |n, p| {
            classify_conjugacy(n, &HodgePartition::preset(p, n), DEFAULT_ENUM_BOUND)
                .unwrap()
                .class_count
        };
        assert_eq!(count(2, PartitionPreset::K3), 3);
        assert_eq!(count(2, PartitionPreset::Abl), 3);
        assert_eq!(count(3, PartitionPreset::Cy3), 8);
        assert_eq!(count(3, PartitionPreset::Abl), 6);
    }

    #[test]
    fn k3_cases_are_a_b_c() {
        let r = classify_conjugacy(2, &HodgePartition::preset(PartitionPreset::K3, 2), 4).unwrap();
        let cases: Vec<_> = r.classes.iter().map(|c| c.case.clone().unwrap()).collect();
        let mut sorted = cases.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["A", "B", "C"]);
    }

    #[test]
    fn canonical_elements_agrees_with_table() {
        let g = ImN2::new(3);
        let p = HodgePartition::preset(PartitionPreset::Abl, 3);
        let stab_idx = p.stabilizer(&g);
        let stab = p.stabilizer_elements();
        for s in admissible_in(&g) {
            let a: Vec<ImN2Element> = canonical(&g, &stab_idx, &s.set)
                .into_iter()
                .map(|i| g.element(i).clone())
                .collect();
            assert_eq!(a, canonical_elements(&s.elements, &stab));
        }
    }
}
