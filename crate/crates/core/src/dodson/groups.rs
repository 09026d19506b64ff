//! Finite groups given by Cayley tables, their isomorphism invariants, and a
//! small library of reference groups built from permutation generators.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::imn2::ImN2Element;
use crate::perm::{self, Perm};

#[derive(Debug, Clone)]
pub struct FiniteGroup {
    /// `mul[a][b]` is the index of `a·b`; index 0 is the identity.
    pub mul: Vec<Vec<usize>>,
}

/// Order, abelianization order and element-order histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupInvariants {
    pub order: usize,
    pub abelianization_order: usize,
    pub element_orders: BTreeMap<usize, usize>,
}

impl FiniteGroup {
    /// Builds the table from any element type with a product; `elems[0]` must
    /// be the identity.
    pub fn from_elements<T: Clone + Eq + std::hash::Hash>(elems: &[T], mul: impl Fn(&T, &T) -> T) -> Self {
        let index: HashMap<&T, usize> = elems.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let table = elems
            .iter()
            .map(|a| elems.iter().map(|b| index[&mul(a, b)]).collect())
            .collect();
        FiniteGroup { mul: table }
    }

    pub fn from_imn2(elems: &[ImN2Element]) -> Self {
        let mut sorted = elems.to_vec();
        sorted.sort();
        Self::from_elements(&sorted, |a, b| a.mul(b))
    }

    /// The permutation group generated by `gens` on `n` points.
    pub fn from_perm_generators(n: usize, gens: &[Perm]) -> Self {
        let mut elems = vec![perm::identity(n)];
        let mut seen: BTreeSet<Perm> = elems.iter().cloned().collect();
        let mut k = 0;
        while k < elems.len() {
            for g in gens {
                let h = perm::compose(&elems[k], g);
                if seen.insert(h.clone()) {
                    elems.push(h);
                }
            }
            k += 1;
        }
        Self::from_elements(&elems, |a, b| perm::compose(a, b))
    }

    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn inv(&self, a: usize) -> usize {
        (0..self.order()).find(|&b| self.mul[a][b] == 0).expect("group element has an inverse")
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut k = 1;
        let mut x = a;
        while x != 0 {
            x = self.mul[x][a];
            k += 1;
        }
        k
    }

    pub fn closure(&self, gens: &[usize]) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = [0].into();
        let mut list = vec![0];
        let mut k = 0;
        while k < list.len() {
            for &g in gens {
                let h = self.mul[list[k]][g];
                if set.insert(h) {
                    list.push(h);
                }
            }
            k += 1;
        }
        set
    }

    pub fn derived_subgroup(&self) -> BTreeSet<usize> {
        let n = self.order();
        let inv: Vec<usize> = (0..n).map(|a| self.inv(a)).collect();
        let comms: BTreeSet<usize> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| self.mul[self.mul[inv[a]][inv[b]]][self.mul[a][b]])
            .collect();
        self.closure(&comms.into_iter().collect::<Vec<_>>())
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.mul[a][b] == self.mul[b][a]))
    }

    pub fn invariants(&self) -> GroupInvariants {
        let mut element_orders = BTreeMap::new();
        for a in 0..self.order() {
            *element_orders.entry(self.element_order(a)).or_insert(0) += 1;
        }
        GroupInvariants {
            order: self.order(),
            abelianization_order: self.order() / self.derived_subgroup().len(),
            element_orders,
        }
    }
}

fn cycle(n: usize, pts: &[usize]) -> Perm {
    let mut p = perm::identity(n);
    for (k, &a) in pts.iter().enumerate() {
        p[a] = pts[(k + 1) % pts.len()] as u8;
    }
    p
}

/// Reference groups as `(name, group)`, each built from explicit cycles on
/// disjoint point sets.
pub fn reference_groups() -> Vec<(&'static str, FiniteGroup)> {
    let c = |pts: &[usize]| cycle(6, pts);
    let z2 = c(&[0, 1]);
    vec![
        ("ℤ₂×ℤ₂×ℤ₂", FiniteGroup::from_perm_generators(6, &[z2.clone(), c(&[2, 3]), c(&[4, 5])])),
        ("ℤ₂×ℤ₄", FiniteGroup::from_perm_generators(6, &[z2.clone(), c(&[2, 3, 4, 5])])),
        (
            "ℤ₂×(ℤ₄⋊ℤ₂)",
            FiniteGroup::from_perm_generators(6, &[z2.clone(), c(&[2, 3, 4, 5]), c(&[2, 4])]),
        ),
        (
            "ℤ₂×A₄",
            FiniteGroup::from_perm_generators(
                6,
                &[z2.clone(), c(&[2, 3, 4]), perm::compose(&c(&[2, 3]), &c(&[4, 5]))],
            ),
        ),
        ("ℤ₂×S₄", FiniteGroup::from_perm_generators(6, &[z2, c(&[2, 3, 4, 5]), c(&[2, 3])])),
    ]
}

/// Name of the first reference group with matching invariants.
pub fn identify(g: &FiniteGroup) -> Option<&'static str> {
    let inv = g.invariants();
    reference_groups()
        .into_iter()
        .find(|(_, r)| r.invariants() == inv)
        .map(|(name, _)| name)
}
