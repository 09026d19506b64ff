//! Reflex degree, level-n Hodge numbers and the induced Dodson data of an
//! abstract CM type.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::enumerate::canonical_elements;
use super::groups::{identify, FiniteGroup, GroupInvariants};
use super::imn2::{all_ones, render_bits, Bits, ImN2Element};
use super::partition::HodgePartition;
use super::triple::{quartic_case_letter, triple_from_elements, triple_from_group, DodsonTriple};
use super::DodsonError;

/// A subgroup of Im(N,2) with a CM type Φ written as a sign vector (bit `i`
/// set when Φ picks φ̄ᵢ). `blocks` marks a direct sum of fields; transitivity
/// is then required per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractCMType {
    pub n: usize,
    pub group: Vec<ImN2Element>,
    #[serde(default)]
    pub phi: Bits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
}

impl AbstractCMType {
    pub fn new(group: Vec<ImN2Element>, blocks: Option<Vec<Vec<usize>>>) -> Self {
        let n = group.first().map(ImN2Element::n).unwrap_or(0);
        let mut group = group;
        group.sort();
        group.dedup();
        AbstractCMType { n, group, phi: 0, blocks }
    }

    pub fn triple(&self) -> Result<DodsonTriple, DodsonError> {
        if self.group.iter().any(|g| g.n() != self.n) || self.n == 0 || self.n > 16 {
            return Err(DodsonError::InvalidCMType(format!(
                "group elements must all act on N = {} slots",
                self.n
            )));
        }
        if self.phi > all_ones(self.n) {
            return Err(DodsonError::InvalidCMType("Φ has more slots than N".into()));
        }
        if let Some(bs) = &self.blocks {
            let mut covered: Vec<usize> = bs.iter().flatten().copied().collect();
            covered.sort_unstable();
            if covered != (0..self.n).collect::<Vec<_>>() {
                return Err(DodsonError::InvalidCMType("blocks must partition the slots".into()));
            }
        }
        triple_from_group(&self.group, self.blocks.as_deref())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InducedClass {
    pub tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub partition: Vec<(u32, u32)>,
    pub representative: Vec<String>,
    pub triple: DodsonTriple,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflexReport {
    pub n: usize,
    /// `2n′ = [G : Stab_G(Φ)]`.
    pub reflex_degree: usize,
    pub n_prime: usize,
    /// Orbit of Φ as sign vectors, in pair layout order (unbarred, barred).
    pub orbit: Vec<(String, String)>,
    /// `h^{p,n−p}` of the level-n subspace, keyed `"p,q"`.
    pub hodge_numbers: BTreeMap<String, usize>,
    pub stabilizer_order: usize,
    /// Whether `Stab_G(Φ)` is normal, i.e. the reflex field is Galois.
    pub reflex_is_galois: bool,
    pub induced: InducedClass,
    pub galois_group: GroupInvariants,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub galois_group_name: Option<String>,
    /// `2n′ ≤ 2ⁿ`.
    pub bound_ok: bool,
}

fn orbit_of(group: &[ImN2Element], y: Bits) -> BTreeSet<Bits> {
    let mut orbit = BTreeSet::from([y]);
    let mut stack = vec![y];
    while let Some(z) = stack.pop() {
        for g in group {
            let w = g.apply_signs(z);
            if orbit.insert(w) {
                stack.push(w);
            }
        }
    }
    orbit
}

pub fn reflex_from_dodson(ct: &AbstractCMType, n: usize) -> Result<ReflexReport, DodsonError> {
    ct.triple()?;
    if n != ct.n {
        return Err(DodsonError::InvalidCMType(format!(
            "level n = {n} must equal the number of pairs N = {}",
            ct.n
        )));
    }
    let ones = all_ones(n);
    let phi = ct.phi;
    let p_of = |y: Bits| n - (y ^ phi).count_ones() as usize;
    let orbit = orbit_of(&ct.group, phi);
    let stabilizer_order = ct.group.iter().filter(|g| g.apply_signs(phi) == phi).count();
    let reflex_degree = orbit.len();
    debug_assert_eq!(reflex_degree * stabilizer_order, ct.group.len());

    let mut hodge = BTreeMap::new();
    for &y in &orbit {
        *hodge.entry(format!("{},{}", p_of(y), n - p_of(y))).or_insert(0) += 1;
    }

    // Pair layout: {Φ, Φ̄} first; within a pair the member with larger p is
    // unbarred (ties: smaller sign vector); pairs by descending p, then sign.
    let mut pairs: Vec<Bits> = orbit
        .iter()
        .filter_map(|&y| {
            let z = y ^ ones;
            let unbarred = (p_of(y), std::cmp::Reverse(y)) > (p_of(z), std::cmp::Reverse(z));
            unbarred.then_some(y)
        })
        .collect();
    pairs.sort_by_key(|&u| (std::cmp::Reverse(p_of(u)), u));
    debug_assert_eq!(pairs[0], phi);
    let np = pairs.len();
    let locate = |y: Bits| -> (usize, u8) {
        match pairs.iter().position(|&u| u == y) {
            Some(k) => (k, 0),
            None => (pairs.iter().position(|&u| u == y ^ ones).expect("orbit is ρ-stable"), 1),
        }
    };
    let mut induced: Vec<ImN2Element> = ct
        .group
        .iter()
        .map(|g| {
            let mut bits: Bits = 0;
            let mut perm = vec![0u8; np];
            for (j, &u) in pairs.iter().enumerate() {
                let (k, s) = locate(g.apply_signs(u));
                perm[j] = k as u8;
                if s == 1 {
                    bits |= super::imn2::unit(np, k);
                }
            }
            ImN2Element::new(bits, perm)
        })
        .collect();
    induced.sort();
    induced.dedup();

    let labels: Vec<(u32, u32)> = pairs.iter().map(|&u| (p_of(u) as u32, (n - p_of(u)) as u32)).collect();
    let level_partition = HodgePartition::from_pair_labels("level", &labels);
    let rep = canonical_elements(&induced, &level_partition.stabilizer_elements());
    let triple = triple_from_elements(&rep);
    let tag = triple.tag();

    let fg = FiniteGroup::from_imn2(&induced);
    let stab: Vec<&ImN2Element> = ct.group.iter().filter(|g| g.apply_signs(phi) == phi).collect();
    let stab_set: BTreeSet<&ImN2Element> = stab.iter().copied().collect();
    let normal = ct
        .group
        .iter()
        .all(|g| stab.iter().all(|h| stab_set.contains(&g.mul(h).mul(&g.inv()))));

    Ok(ReflexReport {
        n,
        reflex_degree,
        n_prime: np,
        orbit: pairs
            .iter()
            .map(|&u| (render_bits(u, n), render_bits(u ^ ones, n)))
            .collect(),
        hodge_numbers: hodge,
        stabilizer_order,
        reflex_is_galois: normal,
        induced: InducedClass {
            tag: tag.to_string(),
            detail: tag.detail.clone(),
            case: quartic_case_letter(&triple).map(String::from),
            partition: labels,
            representative: rep.iter().map(ToString::to_string).collect(),
            triple,
        },
        galois_group_name: identify(&fg).map(String::from),
        galois_group: fg.invariants(),
        bound_ok: reflex_degree <= 1usize << n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dodson::imn2::ImN2;

    #[test]
    fn full_im22_is_degree_four() {
        let g = ImN2::new(2).elements().to_vec();
        let r = reflex_from_dodson(&AbstractCMType::new(g, None), 2).unwrap();
        assert_eq!(r.reflex_degree, 4);
        assert_eq!(r.hodge_numbers.get("2,0"), Some(&1));
        assert_eq!(r.hodge_numbers.get("1,1"), Some(&2));
        assert_eq!(r.hodge_numbers.get("0,2"), Some(&1));
        assert!(r.bound_ok);
    }

    #[test]
    fn level_mismatch_rejected() {
        let g = ImN2::new(2).elements().to_vec();
        assert!(reflex_from_dodson(&AbstractCMType::new(g, None), 3).is_err());
    }

    #[test]
    fn non_admissible_rejected() {
        let g = vec![ImN2Element::identity(2), ImN2Element::rho(2)];
        assert!(matches!(
            reflex_from_dodson(&AbstractCMType::new(g, None), 2),
            Err(DodsonError::NotAdmissible { .. })
        ));
    }
}
