//! Dodson triples `(G₀, V, s)` and the correspondence with admissible
//! subgroups of Im(N,2).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::imn2::{act_bits, all_ones, parse_bits, render_bits, unit, Bits, ImN2Element};
use super::DodsonError;
use crate::perm::{self, Perm};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "TripleDoc", try_from = "TripleDoc")]
pub struct DodsonTriple {
    pub n: usize,
    /// Sorted permutation group.
    pub g0: Vec<Perm>,
    /// Sorted bit subgroup.
    pub v: Vec<Bits>,
    /// Cocycle, as the smallest representative of each coset `s(g) + V`.
    pub s: BTreeMap<Perm, Bits>,
}

/// Wire form: 1-based one-line permutations, bit strings, and the cocycle
/// keyed by rendered permutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleDoc {
    pub n: usize,
    pub g0: Vec<Vec<u8>>,
    pub v: Vec<String>,
    pub s: BTreeMap<String, String>,
}

impl From<DodsonTriple> for TripleDoc {
    fn from(t: DodsonTriple) -> Self {
        TripleDoc {
            n: t.n,
            g0: t.g0.iter().map(|p| p.iter().map(|v| v + 1).collect()).collect(),
            v: t.v.iter().map(|&x| render_bits(x, t.n)).collect(),
            s: t
                .s
                .iter()
                .map(|(p, &x)| (perm::render(p), render_bits(x, t.n)))
                .collect(),
        }
    }
}

fn parse_perm_1based(p: &[u8], n: usize) -> Result<Perm, DodsonError> {
    let q: Option<Perm> = p.iter().map(|&v| v.checked_sub(1)).collect();
    match q {
        Some(q) if q.len() == n && perm::is_valid(&q) => Ok(q),
        _ => Err(DodsonError::Malformed(format!("{p:?} is not a permutation of 1..{n}"))),
    }
}

fn parse_bits_n(s: &str, n: usize) -> Result<Bits, DodsonError> {
    match parse_bits(s) {
        Some(x) if s.len() == n => Ok(x),
        _ => Err(DodsonError::Malformed(format!("{s:?} is not a bit vector of length {n}"))),
    }
}

impl TryFrom<TripleDoc> for DodsonTriple {
    type Error = DodsonError;
    fn try_from(d: TripleDoc) -> Result<Self, DodsonError> {
        let n = d.n;
        if n == 0 || n > 16 {
            return Err(DodsonError::Malformed(format!("N = {n} out of range")));
        }
        let mut g0 = d
            .g0
            .iter()
            .map(|p| parse_perm_1based(p, n))
            .collect::<Result<Vec<_>, _>>()?;
        g0.sort();
        g0.dedup();
        let mut v = d.v.iter().map(|s| parse_bits_n(s, n)).collect::<Result<Vec<_>, _>>()?;
        v.sort_unstable();
        v.dedup();
        let mut s = BTreeMap::new();
        for (k, x) in &d.s {
            let digits: Result<Vec<u8>, _> = k
                .trim_matches(|c| c == '[' || c == ']')
                .split(',')
                .map(|t| t.trim().parse::<u8>())
                .collect();
            let digits = digits.map_err(|_| DodsonError::Malformed(format!("bad cocycle key {k:?}")))?;
            s.insert(parse_perm_1based(&digits, n)?, parse_bits_n(x, n)?);
        }
        let t = DodsonTriple { n, g0, v, s };
        Ok(t.normalized())
    }
}

fn coset_rep(x: Bits, v: &[Bits]) -> Bits {
    v.iter().map(|&w| x ^ w).min().unwrap_or(x)
}

fn invalid(condition: &str, detail: impl Into<String>) -> DodsonError {
    DodsonError::InvalidTriple {
        condition: condition.into(),
        detail: detail.into(),
    }
}

fn is_perm_group(g0: &[Perm], n: usize) -> bool {
    let set: BTreeSet<&Perm> = g0.iter().collect();
    set.contains(&perm::identity(n))
        && g0
            .iter()
            .all(|a| g0.iter().all(|b| set.contains(&perm::compose(a, &perm::inverse(b)))))
}

impl DodsonTriple {
    /// Replaces each cocycle value by its smallest coset representative.
    pub fn normalized(mut self) -> Self {
        let v = self.v.clone();
        for x in self.s.values_mut() {
            *x = coset_rep(*x, &v);
        }
        self
    }

    /// Checks every triple condition. With `blocks`, transitivity is only
    /// required on each block (composite fields).
    pub fn validate(&self, blocks: Option<&[Vec<usize>]>) -> Result<(), DodsonError> {
        let n = self.n;
        if !is_perm_group(&self.g0, n) {
            return Err(invalid("dodson:g0-group", "G₀ is not closed under composition and inverses"));
        }
        let transitive = match blocks {
            None => perm::is_transitive(&self.g0, n),
            Some(bs) => bs.iter().all(|b| perm::is_transitive_on(&self.g0, b)),
        };
        if !transitive {
            return Err(invalid("dodson:transitivity", "G₀ does not act transitively on the slots"));
        }
        let vset: BTreeSet<Bits> = self.v.iter().copied().collect();
        if !vset.contains(&0) || !self.v.iter().all(|a| self.v.iter().all(|b| vset.contains(&(a ^ b)))) {
            return Err(invalid("dodson:v-group", "V is not a subgroup of (ℤ₂)^N"));
        }
        if !vset.contains(&all_ones(n)) {
            return Err(invalid("dodson:diagonal", "V does not contain the diagonal ρ"));
        }
        if !self.g0.iter().all(|g| self.v.iter().all(|&x| vset.contains(&act_bits(g, x)))) {
            return Err(invalid("dodson:v-stable", "V is not stable under G₀"));
        }
        let keys: BTreeSet<&Perm> = self.s.keys().collect();
        let g0set: BTreeSet<&Perm> = self.g0.iter().collect();
        if keys != g0set {
            return Err(invalid("dodson:cocycle", "s must be defined exactly on G₀"));
        }
        let rep = |x: Bits| coset_rep(x, &self.v);
        if rep(self.s[&perm::identity(n)]) != 0 {
            return Err(invalid("dodson:cocycle", "s(1) is not in V"));
        }
        for g in &self.g0 {
            for h in &self.g0 {
                let gh = perm::compose(g, h);
                let lhs = rep(self.s[&gh]);
                let rhs = rep(self.s[g] ^ act_bits(g, self.s[h]));
                if lhs != rhs {
                    return Err(invalid(
                        "dodson:cocycle",
                        format!("s(gh) ≠ s(g) + g·s(h) mod V at g = {}, h = {}", perm::render(g), perm::render(h)),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Sorted element list of the subgroup `⋃_g ⋃_{x ∈ s(g)} (x, g)`.
    pub fn elements(&self) -> Vec<ImN2Element> {
        let mut out: Vec<ImN2Element> = self
            .g0
            .iter()
            .flat_map(|g| self.v.iter().map(move |&w| ImN2Element::new(self.s[g] ^ w, g.clone())))
            .collect();
        out.sort();
        out
    }

    pub fn order(&self) -> usize {
        self.g0.len() * self.v.len()
    }

    /// `log₂ |V|`.
    pub fn v_rank(&self) -> usize {
        self.v.len().trailing_zeros() as usize
    }

    pub fn is_trivial_cocycle(&self) -> bool {
        self.s.values().all(|&x| x == 0)
    }

    /// Smallest `i` with `s ≡ d(eᵢ)`, i.e. `s(g) ≡ g·eᵢ + eᵢ` modulo V.
    pub fn coboundary_basis_index(&self) -> Option<usize> {
        (0..self.n).find(|&i| {
            let e = unit(self.n, i);
            self.g0
                .iter()
                .all(|g| coset_rep(act_bits(g, e) ^ e, &self.v) == self.s[g])
        })
    }

    pub fn tag(&self) -> TripleTag {
        let trivial = self.is_trivial_cocycle();
        TripleTag {
            g0: g0_name(&self.g0),
            v: self.v_rank(),
            trivial,
            detail: if trivial {
                None
            } else {
                self.coboundary_basis_index().map(|i| format!("dε{}", i + 1))
            },
        }
    }
}

/// Builds a triple from a subgroup without admissibility checks.
pub fn triple_from_elements(elems: &[ImN2Element]) -> DodsonTriple {
    let n = elems.first().map(ImN2Element::n).unwrap_or(0);
    let mut v: Vec<Bits> = elems.iter().filter(|e| perm::is_identity(&e.perm)).map(|e| e.bits).collect();
    v.sort_unstable();
    v.dedup();
    let mut s: BTreeMap<Perm, Bits> = BTreeMap::new();
    for e in elems {
        let rep = coset_rep(e.bits, &v);
        s.entry(e.perm.clone()).and_modify(|x| *x = (*x).min(rep)).or_insert(rep);
    }
    DodsonTriple {
        n,
        g0: s.keys().cloned().collect(),
        v,
        s,
    }
}

fn not_admissible(condition: &str, detail: &str) -> DodsonError {
    DodsonError::NotAdmissible {
        condition: condition.into(),
        detail: detail.into(),
    }
}

/// The triple of an admissible subgroup; `blocks` relaxes transitivity to
/// each block.
pub fn triple_from_group(
    elems: &[ImN2Element],
    blocks: Option<&[Vec<usize>]>,
) -> Result<DodsonTriple, DodsonError> {
    let Some(first) = elems.first() else {
        return Err(not_admissible("dodson:subgroup", "empty element list"));
    };
    let n = first.n();
    let set: BTreeSet<&ImN2Element> = elems.iter().collect();
    if elems.iter().any(|e| e.n() != n)
        || !set.contains(&ImN2Element::identity(n))
        || !elems.iter().all(|a| elems.iter().all(|b| set.contains(&a.mul(&b.inv()))))
    {
        return Err(not_admissible("dodson:subgroup", "the elements do not form a subgroup of Im(N,2)"));
    }
    let t = triple_from_elements(elems);
    let transitive = match blocks {
        None => perm::is_transitive(&t.g0, n),
        Some(bs) => bs.iter().all(|b| perm::is_transitive_on(&t.g0, b)),
    };
    if !transitive {
        return Err(not_admissible("dodson:transitivity", "the permutation image is not transitive"));
    }
    if !t.v.contains(&all_ones(n)) {
        return Err(not_admissible("dodson:diagonal", "ρ is not in the group"));
    }
    Ok(t)
}

pub fn group_from_triple(
    t: &DodsonTriple,
    blocks: Option<&[Vec<usize>]>,
) -> Result<Vec<ImN2Element>, DodsonError> {
    t.validate(blocks)?;
    Ok(t.elements())
}

/// The class name `(G₀, v, s)` of a triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripleTag {
    pub g0: String,
    pub v: usize,
    pub trivial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl fmt::Display for TripleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.trivial { "triv." } else { "non-triv." };
        write!(f, "({},{},{})", self.g0, self.v, s)
    }
}

/// Structural name of a permutation group from order, commutativity and
/// element orders.
pub fn g0_name(g0: &[Perm]) -> String {
    let order = g0.len();
    let abelian = g0
        .iter()
        .all(|a| g0.iter().all(|b| perm::compose(a, b) == perm::compose(b, a)));
    let max_ord = g0.iter().map(|p| perm::order(p)).max().unwrap_or(1);
    let count = |k: usize| g0.iter().filter(|p| perm::order(p) == k).count();
    match (order, abelian) {
        (1, _) => "1".into(),
        (2, _) => "ℤ₂".into(),
        (3, _) => "ℤ₃".into(),
        (4, _) if max_ord == 4 => "ℤ₄".into(),
        (4, _) => "ℤ₂×ℤ₂".into(),
        (5, _) => "ℤ₅".into(),
        (6, true) => "ℤ₆".into(),
        (6, false) => "S₃".into(),
        (8, false) if count(4) == 2 => "D₄".into(),
        (8, false) => "Q₈".into(),
        (12, false) if count(6) == 0 => "A₄".into(),
        (24, false) if count(4) == 6 && count(3) == 8 => "S₄".into(),
        (o, true) if max_ord == o => format!("ℤ{}", subscript(o)),
        (o, _) => format!("G{o}"),
    }
}

fn subscript(k: usize) -> String {
    const D: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    k.to_string().chars().map(|c| D[c.to_digit(10).unwrap() as usize]).collect()
}

/// Name of an N = 2 triple as one of the three quartic cases.
pub fn quartic_case_letter(t: &DodsonTriple) -> Option<&'static str> {
    if t.n != 2 || t.g0.len() != 2 {
        return None;
    }
    match (t.v.len(), t.is_trivial_cocycle()) {
        (2, true) => Some("A"),
        (2, false) => Some("B"),
        (4, _) => Some("C"),
        _ => None,
    }
}
