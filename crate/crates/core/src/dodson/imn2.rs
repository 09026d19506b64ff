//! The pair-preserving group Im(N,2) = (ℤ₂)^N ⋊ S_N and its subgroups.
//!
//! An element `(x, π)` acts on signed slots by `(i, s) ↦ (π(i), s + x_{π(i)})`,
//! so `(x₁,π₁)(x₂,π₂) = (x₁ + π₁·x₂, π₁π₂)` with `(π·x)_j = x_{π⁻¹(j)}`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::perm::{self, Perm};

/// Bit vector over ℤ₂ of length ≤ 16; slot 0 is the most significant bit so
/// the integer order is the lexicographic order of `(x₁, …, x_N)`.
pub type Bits = u16;

pub fn bit(x: Bits, n: usize, i: usize) -> u8 {
    ((x >> (n - 1 - i)) & 1) as u8
}

pub fn unit(n: usize, i: usize) -> Bits {
    1 << (n - 1 - i)
}

pub fn all_ones(n: usize) -> Bits {
    ((1u32 << n) - 1) as Bits
}

/// `(π·x)_j = x_{π⁻¹(j)}`: the bit at slot `i` moves to slot `π(i)`.
pub fn act_bits(p: &[u8], x: Bits) -> Bits {
    let n = p.len();
    (0..n)
        .filter(|&i| bit(x, n, i) == 1)
        .fold(0, |acc, i| acc | unit(n, p[i] as usize))
}

pub fn render_bits(x: Bits, n: usize) -> String {
    (0..n).map(|i| char::from(b'0' + bit(x, n, i))).collect()
}

pub fn parse_bits(s: &str) -> Option<Bits> {
    let n = s.len();
    if n == 0 || n > 16 {
        return None;
    }
    s.chars().enumerate().try_fold(0, |acc, (i, c)| match c {
        '0' => Some(acc),
        '1' => Some(acc | unit(n, i)),
        _ => None,
    })
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ImN2Element {
    pub bits: Bits,
    pub perm: Perm,
}

impl ImN2Element {
    pub fn new(bits: Bits, perm: Perm) -> Self {
        ImN2Element { bits, perm }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn identity(n: usize) -> Self {
        ImN2Element::new(0, perm::identity(n))
    }

    pub fn rho(n: usize) -> Self {
        ImN2Element::new(all_ones(n), perm::identity(n))
    }

    pub fn mul(&self, o: &Self) -> Self {
        ImN2Element::new(self.bits ^ act_bits(&self.perm, o.bits), perm::compose(&self.perm, &o.perm))
    }

    pub fn inv(&self) -> Self {
        let pi = perm::inverse(&self.perm);
        ImN2Element::new(act_bits(&pi, self.bits), pi)
    }

    /// Image of the signed slot `(i, s)`.
    pub fn apply_slot(&self, i: usize, s: u8) -> (usize, u8) {
        let j = self.perm[i] as usize;
        (j, s ^ bit(self.bits, self.n(), j))
    }

    /// Image of a CM type written as a sign vector (`y_i` = sign of the chosen
    /// slot over pair `i`): `y ↦ π·y + x`.
    pub fn apply_signs(&self, y: Bits) -> Bits {
        act_bits(&self.perm, y) ^ self.bits
    }
}

impl Ord for ImN2Element {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.bits, &self.perm).cmp(&(o.bits, &o.perm))
    }
}

impl PartialOrd for ImN2Element {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for ImN2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", render_bits(self.bits, self.n()), perm::render(&self.perm))
    }
}

impl fmt::Display for ImN2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for ImN2Element {
    type Err = String;

    /// Parses `(x₁…x_N,[π(1),…,π(N)])` with 1-based permutation entries.
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("malformed Im(N,2) element {s:?}");
        let inner = s.trim().strip_prefix('(').and_then(|t| t.strip_suffix(')')).ok_or_else(bad)?;
        let (b, p) = inner.split_once(',').ok_or_else(bad)?;
        let bits = parse_bits(b.trim()).ok_or_else(bad)?;
        let p = p.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
        let perm: Perm = p
            .split(',')
            .map(|t| t.trim().parse::<u8>().ok().and_then(|v| v.checked_sub(1)))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        if perm.len() != b.trim().len() || !perm::is_valid(&perm) {
            return Err(bad());
        }
        Ok(ImN2Element::new(bits, perm))
    }
}

impl Serialize for ImN2Element {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ImN2Element {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A subset of Im(N,2), as a bitset over the element indices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ElemSet(Vec<u64>);

impl ElemSet {
    pub fn empty(size: usize) -> Self {
        ElemSet(vec![0; size.div_ceil(64)])
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let had = self.contains(i);
        self.0[i / 64] |= 1 << (i % 64);
        !had
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| k * 64 + b)
        })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// The full group Im(N,2) with its elements in the fixed total order and a
/// precomputed multiplication table.
#[derive(Debug, Clone)]
pub struct ImN2 {
    n: usize,
    elements: Vec<ImN2Element>,
    mul: Vec<Vec<u16>>,
    inv: Vec<u16>,
    rho: usize,
}

/// Largest N for which Im(N,2) is tabulated (|Im(4,2)| = 384).
pub const MAX_TABULATED_N: usize = 4;

impl ImN2 {
    pub fn new(n: usize) -> Self {
        assert!((1..=MAX_TABULATED_N).contains(&n), "Im(N,2) is tabulated for 1 ≤ N ≤ {MAX_TABULATED_N}");
        let mut elements: Vec<ImN2Element> = Vec::with_capacity((1 << n) * (1..=n).product::<usize>());
        for bits in 0..(1u32 << n) {
            for p in perm::all_perms(n) {
                elements.push(ImN2Element::new(bits as Bits, p));
            }
        }
        elements.sort();
        let index = |e: &ImN2Element| elements.binary_search(e).expect("closed") as u16;
        let mul: Vec<Vec<u16>> = elements
            .iter()
            .map(|a| elements.iter().map(|b| index(&a.mul(b))).collect())
            .collect();
        let inv = elements.iter().map(|a| index(&a.inv())).collect();
        let rho = index(&ImN2Element::rho(n)) as usize;
        ImN2 {
            n,
            elements,
            mul,
            inv,
            rho,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, i: usize) -> &ImN2Element {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[ImN2Element] {
        &self.elements
    }

    pub fn index(&self, e: &ImN2Element) -> Option<usize> {
        self.elements.binary_search(e).ok()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b] as usize
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    pub fn conj(&self, s: usize, g: usize) -> usize {
        self.mul(self.mul(s, g), self.inv(s))
    }

    /// The subgroup generated by `gens`.
    pub fn closure(&self, gens: &[usize]) -> ElemSet {
        let mut set = ElemSet::empty(self.order());
        set.insert(0);
        let mut list = vec![0usize];
        let mut k = 0;
        while k < list.len() {
            let a = list[k];
            for &g in gens {
                let b = self.mul(a, g);
                if set.insert(b) {
                    list.push(b);
                }
            }
            k += 1;
        }
        set
    }

    pub fn is_subgroup(&self, set: &ElemSet) -> bool {
        set.contains(0)
            && set
                .iter()
                .all(|a| set.iter().all(|b| set.contains(self.mul(a, self.inv(b)))))
    }

    pub fn conjugate_set(&self, s: usize, set: &ElemSet) -> ElemSet {
        let mut out = ElemSet::empty(self.order());
        for g in set.iter() {
            out.insert(self.conj(s, g));
        }
        out
    }

    pub fn set_from_elements(&self, elems: &[ImN2Element]) -> Option<ElemSet> {
        let mut set = ElemSet::empty(self.order());
        for e in elems {
            if e.n() != self.n {
                return None;
            }
            set.insert(self.index(e)?);
        }
        Some(set)
    }

    pub fn elements_of(&self, set: &ElemSet) -> Vec<ImN2Element> {
        set.iter().map(|i| self.elements[i].clone()).collect()
    }

    /// Permutation part of every element of `set`, deduplicated and sorted.
    pub fn projection(&self, set: &ElemSet) -> Vec<Perm> {
        let mut perms: Vec<Perm> = set.iter().map(|i| self.elements[i].perm.clone()).collect();
        perms.sort();
        perms.dedup();
        perms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        assert_eq!(ImN2::new(1).order(), 2);
        assert_eq!(ImN2::new(2).order(), 8);
        assert_eq!(ImN2::new(3).order(), 48);
    }

    #[test]
    fn associativity_exhaustive_n2() {
        let g = ImN2::new(2);
        for a in 0..8 {
            for b in 0..8 {
                for c in 0..8 {
                    assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn rho_central_and_identity_first() {
        for n in 1..=3 {
            let g = ImN2::new(n);
            assert_eq!(*g.element(0), ImN2Element::identity(n));
            for a in 0..g.order() {
                assert_eq!(g.mul(a, g.rho()), g.mul(g.rho(), a));
                assert_eq!(g.mul(a, g.inv(a)), 0);
            }
        }
    }

    #[test]
    fn slot_action_is_a_homomorphism() {
        let g = ImN2::new(3);
        for a in g.elements() {
            for b in g.elements() {
                let ab = a.mul(b);
                for i in 0..3 {
                    for s in 0..2 {
                        let (j, t) = b.apply_slot(i, s);
                        assert_eq!(a.apply_slot(j, t), ab.apply_slot(i, s));
                    }
                }
                for y in 0..8 {
                    assert_eq!(a.apply_signs(b.apply_signs(y)), ab.apply_signs(y));
                }
            }
        }
    }

    #[test]
    fn bits_render_and_parse() {
        assert_eq!(render_bits(0b100, 3), "100");
        assert_eq!(bit(0b100, 3, 0), 1);
        assert_eq!(parse_bits("011"), Some(0b011));
        assert_eq!(act_bits(&[1, 2, 0], unit(3, 0)), unit(3, 1));
        assert_eq!(parse_bits("01x"), None);
    }

    #[test]
    fn element_string_round_trip() {
        for e in ImN2::new(3).elements() {
            assert_eq!(e.to_string().parse::<ImN2Element>().unwrap(), *e);
        }
        assert_eq!("(10,[2,1])".parse::<ImN2Element>().unwrap(), ImN2Element::new(0b10, vec![1, 0]));
        assert!("(10,[1,1])".parse::<ImN2Element>().is_err());
        assert!("(101,[2,1])".parse::<ImN2Element>().is_err());
    }
}
