//! Combinatorial CM Hodge structures: slots (eigenlines of the CM algebra)
//! with Hodge labels, permuted by a finite Galois group. Tensor products,
//! level subspaces, the K3 × T² analysis, factor verdicts for products and the
//! Weil/Griffiths weight-1 repackagings.
//!
//! A slot label is `None` when the corresponding conjugate of the top form is
//! not of pure Hodge type. A structure is CM when every slot is pure and of
//! multiplicity one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cmfield::{galois_group, CMFieldData, CmCase};
use crate::dodson::imn2::{unit, Bits, ImN2Element};
use crate::dodson::partition::HodgePartition;
use crate::dodson::triple::{quartic_case_letter, triple_from_group};
use crate::tower::{FieldElement, TowerHandle};

pub type Label = Option<(u32, u32)>;
pub type SlotPerm = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HodgeError {
    #[error("invalid structure: {0}")]
    Invalid(String),
    #[error("incompatible identifications: {0}")]
    IncompatibleIdentifications(String),
    #[error("no slot carries the top Hodge type ({0},0)")]
    NoTopForm(u32),
    #[error("{count} slots carry the top Hodge type ({weight},0)")]
    MultipleTopForms { count: usize, weight: u32 },
    #[error("expected weight {expected}, got {got}")]
    WrongWeight { expected: u32, got: u32 },
    #[error("not of weak CM-type: {witness}")]
    NotWeakCM { witness: String },
}

impl HodgeError {
    pub fn condition(&self) -> String {
        match self {
            HodgeError::Invalid(_) => "malformed-input",
            HodgeError::IncompatibleIdentifications(_) => "incompatible-identifications",
            HodgeError::NoTopForm(_) => "no-top-form",
            HodgeError::MultipleTopForms { .. } => "multiple-top-forms",
            HodgeError::WrongWeight { .. } => "wrong-weight",
            HodgeError::NotWeakCM { .. } => "not-weak-cm",
        }
        .into()
    }
}

fn compose(a: &[usize], b: &[usize]) -> SlotPerm {
    b.iter().map(|&x| a[x]).collect()
}

fn identity(n: usize) -> SlotPerm {
    (0..n).collect()
}

fn is_perm(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n && p.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
}

/// All elements of the group generated by `gens`, sorted (so the identity
/// comes first).
pub fn generate(n: usize, gens: &[SlotPerm]) -> Vec<SlotPerm> {
    let mut seen: BTreeSet<SlotPerm> = BTreeSet::from([identity(n)]);
    let mut stack = vec![identity(n)];
    while let Some(g) = stack.pop() {
        for h in gens {
            let k = compose(h, &g);
            if seen.insert(k.clone()) {
                stack.push(k);
            }
        }
    }
    seen.into_iter().collect()
}

fn swap(l: Label) -> Label {
    l.map(|(p, q)| (q, p))
}

fn render_label(l: Label) -> String {
    match l {
        Some((p, q)) => format!("{p},{q}"),
        None => "mixed".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CMHodgeStructure {
    pub weight: u32,
    pub labels: Vec<Label>,
    pub multiplicity: Vec<usize>,
    /// Every group element as a permutation of the slots, sorted.
    pub group: Vec<SlotPerm>,
    /// Complex conjugation.
    pub conj: SlotPerm,
}

impl CMHodgeStructure {
    pub fn new(
        weight: u32,
        labels: Vec<Label>,
        multiplicity: Option<Vec<usize>>,
        generators: &[SlotPerm],
        conj: SlotPerm,
    ) -> Result<Self, HodgeError> {
        let n = labels.len();
        let bad = |m: &str| Err(HodgeError::Invalid(m.into()));
        if n == 0 {
            return bad("no slots");
        }
        let multiplicity = multiplicity.unwrap_or_else(|| vec![1; n]);
        if multiplicity.len() != n || multiplicity.contains(&0) {
            return bad("multiplicities must be positive, one per slot");
        }
        if !generators.iter().all(|g| is_perm(g, n)) || !is_perm(&conj, n) {
            return bad("generators and conjugation must permute the slots");
        }
        if (0..n).any(|x| conj[x] == x || conj[conj[x]] != x) {
            return bad("conjugation must be a fixed-point-free involution");
        }
        for (x, l) in labels.iter().enumerate() {
            if let Some((p, q)) = l {
                if p + q != weight {
                    return Err(HodgeError::Invalid(format!("slot {} has p + q ≠ {weight}", x + 1)));
                }
            }
            if labels[conj[x]] != swap(*l) || multiplicity[conj[x]] != multiplicity[x] {
                return Err(HodgeError::Invalid(format!("slot {} is not conjugate-symmetric", x + 1)));
            }
        }
        let mut gens = generators.to_vec();
        gens.push(conj.clone());
        let group = generate(n, &gens);
        if group.iter().any(|g| compose(g, &conj) != compose(&conj, g)) {
            return bad("conjugation must be central");
        }
        Ok(CMHodgeStructure {
            weight,
            labels,
            multiplicity,
            group,
            conj,
        })
    }

    pub fn slots(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.multiplicity.iter().sum()
    }

    pub fn is_cm(&self) -> bool {
        self.labels.iter().all(Option::is_some) && self.multiplicity.iter().all(|&m| m == 1)
    }

    pub fn hodge_numbers(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for (l, m) in self.labels.iter().zip(&self.multiplicity) {
            *h.entry(render_label(*l)).or_insert(0) += m;
        }
        h
    }

    /// Slot carrying the top form `(m,0)`.
    pub fn top_slot(&self) -> Result<usize, HodgeError> {
        let tops: Vec<usize> = (0..self.slots())
            .filter(|&x| self.labels[x] == Some((self.weight, 0)))
            .collect();
        match tops.as_slice() {
            [] => Err(HodgeError::NoTopForm(self.weight)),
            [x] => Ok(*x),
            _ => Err(HodgeError::MultipleTopForms {
                count: tops.len(),
                weight: self.weight,
            }),
        }
    }

    fn orbit(&self, x: usize) -> BTreeSet<usize> {
        self.group.iter().map(|g| g[x]).collect()
    }

    /// Restriction to a group-stable set of slots, renumbered in order.
    fn restrict(&self, keep: &BTreeSet<usize>) -> CMHodgeStructure {
        let index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let restrict = |g: &SlotPerm| -> SlotPerm { keep.iter().map(|x| index[&g[*x]]).collect() };
        let group: BTreeSet<SlotPerm> = self.group.iter().map(restrict).collect();
        CMHodgeStructure {
            weight: self.weight,
            labels: keep.iter().map(|&x| self.labels[x]).collect(),
            multiplicity: keep.iter().map(|&x| self.multiplicity[x]).collect(),
            group: group.into_iter().collect(),
            conj: restrict(&self.conj),
        }
    }

    /// Conjugation pairs as `(unbarred, barred)`: the member with the larger
    /// `p` is unbarred, ties broken by slot index.
    fn pairs(&self) -> Option<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for x in 0..self.slots() {
            let y = self.conj[x];
            let (px, py) = (self.labels[x]?.0, self.labels[y]?.0);
            if (px, std::cmp::Reverse(x)) > (py, std::cmp::Reverse(y)) {
                out.push((x, y));
            }
        }
        out.sort_by_key(|&(x, _)| (std::cmp::Reverse(self.labels[x].map(|l| l.0)), x));
        Some(out)
    }

    /// The group as a subgroup of Im(N,2) in the pair layout.
    pub fn as_imn2(&self) -> Option<Vec<ImN2Element>> {
        let pairs = self.pairs()?;
        let np = pairs.len();
        if np == 0 || np > 16 {
            return None;
        }
        let locate = |x: usize| -> (usize, bool) {
            pairs
                .iter()
                .enumerate()
                .find_map(|(k, &(u, b))| {
                    if u == x {
                        Some((k, false))
                    } else if b == x {
                        Some((k, true))
                    } else {
                        None
                    }
                })
                .expect("every slot is paired")
        };
        let mut out: Vec<ImN2Element> = self
            .group
            .iter()
            .map(|g| {
                let mut bits: Bits = 0;
                let mut perm = vec![0u8; np];
                for (j, &(u, _)) in pairs.iter().enumerate() {
                    let (k, barred) = locate(g[u]);
                    perm[j] = k as u8;
                    if barred {
                        bits |= unit(np, k);
                    }
                }
                ImN2Element::new(bits, perm)
            })
            .collect();
        out.sort();
        out.dedup();
        Some(out)
    }

    /// Built from a subgroup of Im(N,2) and a labelling of the pairs; slot
    /// `2i + s` is pair `i`, sign `s`.
    pub fn from_imn2(group: &[ImN2Element], partition: &HodgePartition) -> Result<Self, HodgeError> {
        let n = partition.n;
        if group.iter().any(|g| g.n() != n) {
            return Err(HodgeError::Invalid("group and partition have different N".into()));
        }
        let weight = partition.labels.first().map(|l| l[0].0 + l[0].1).unwrap_or(0);
        let labels = (0..2 * n).map(|x| Some(partition.label(x / 2, (x % 2) as u8))).collect();
        let perm_of = |g: &ImN2Element| -> SlotPerm {
            (0..2 * n)
                .map(|x| {
                    let (j, t) = g.apply_slot(x / 2, (x % 2) as u8);
                    2 * j + t as usize
                })
                .collect()
        };
        let gens: Vec<SlotPerm> = group.iter().map(perm_of).collect();
        Self::new(weight, labels, None, &gens, perm_of(&ImN2Element::rho(n)))
    }

    /// The embeddings of a quadratic or quartic CM field as slots, labelled
    /// by `kind`.
    pub fn from_cm_field(field: &CMFieldData, kind: FieldHodgeKind) -> Result<Self, HodgeError> {
        let (s, _) = field_slots(field);
        let n = s.slots;
        let c = s.conj.clone();
        let labels: Vec<Label> = match kind {
            FieldHodgeKind::K3 => (0..n)
                .map(|x| {
                    Some(if x == 0 {
                        (2, 0)
                    } else if x == c[0] {
                        (0, 2)
                    } else {
                        (1, 1)
                    })
                })
                .collect(),
            FieldHodgeKind::Curve => {
                if field.case != CmCase::Deg2 {
                    return Err(HodgeError::Invalid("an elliptic curve needs a quadratic field".into()));
                }
                vec![Some((1, 0)), Some((0, 1))]
            }
        };
        let weight = labels[0].map(|(p, q)| p + q).unwrap_or(0);
        Self::new(weight, labels, None, &s.perms, c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldHodgeKind {
    /// Transcendental part of a K3 surface: `φ′` is (2,0).
    K3,
    /// An elliptic curve: `φ′` is (1,0).
    Curve,
}

struct FieldSlots {
    slots: usize,
    /// One permutation per Galois element, in Galois-group order.
    perms: Vec<SlotPerm>,
    conj: SlotPerm,
}

fn field_slots(field: &CMFieldData) -> (FieldSlots, crate::cmfield::GaloisGroupData) {
    let gg = galois_group(field);
    let perms = gg.embedding_action.clone();
    let conj = perms[gg.conj].clone();
    (
        FieldSlots {
            slots: gg.embedding_reps.len(),
            perms,
            conj,
        },
        gg,
    )
}

/// How the Galois groups of two tensor factors are tied together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identification {
    /// Linearly disjoint fields: the full direct product.
    Independent,
    /// The joint group is generated by these pairs of factor elements.
    Generators(Vec<(SlotPerm, SlotPerm)>),
}

/// A tensor product that remembers its factors. Slot `(x₁, x₂)` has index
/// `x₁·n₂ + x₂`; `pairs[k]` gives the factor elements of `structure.group[k]`.
#[derive(Debug, Clone, Serialize)]
pub struct TensorProduct {
    pub structure: CMHodgeStructure,
    pub factors: [CMHodgeStructure; 2],
    pub pairs: Vec<(SlotPerm, SlotPerm)>,
}

fn product_perm(a: &[usize], b: &[usize]) -> SlotPerm {
    let n2 = b.len();
    (0..a.len() * n2).map(|x| a[x / n2] * n2 + b[x % n2]).collect()
}

pub fn tensor_cm(
    h1: &CMHodgeStructure,
    h2: &CMHodgeStructure,
    ident: &Identification,
) -> Result<TensorProduct, HodgeError> {
    let (n1, n2) = (h1.slots(), h2.slots());
    let joint: Vec<(SlotPerm, SlotPerm)> = match ident {
        Identification::Independent => h1
            .group
            .iter()
            .flat_map(|a| h2.group.iter().map(move |b| (a.clone(), b.clone())))
            .collect(),
        Identification::Generators(gens) => {
            let g1: BTreeSet<&SlotPerm> = h1.group.iter().collect();
            let g2: BTreeSet<&SlotPerm> = h2.group.iter().collect();
            if gens.iter().any(|(a, b)| !g1.contains(a) || !g2.contains(b)) {
                return Err(HodgeError::IncompatibleIdentifications(
                    "generator pairs must come from the factor groups".into(),
                ));
            }
            let mut seen: BTreeSet<(SlotPerm, SlotPerm)> = BTreeSet::from([(identity(n1), identity(n2))]);
            let mut stack: Vec<(SlotPerm, SlotPerm)> = seen.iter().cloned().collect();
            let mut all_gens = gens.clone();
            all_gens.push((h1.conj.clone(), h2.conj.clone()));
            while let Some((a, b)) = stack.pop() {
                for (x, y) in &all_gens {
                    let k = (compose(x, &a), compose(y, &b));
                    if seen.insert(k.clone()) {
                        stack.push(k);
                    }
                }
            }
            let p1: BTreeSet<&SlotPerm> = seen.iter().map(|(a, _)| a).collect();
            let p2: BTreeSet<&SlotPerm> = seen.iter().map(|(_, b)| b).collect();
            if p1.len() != h1.group.len() || p2.len() != h2.group.len() {
                return Err(HodgeError::IncompatibleIdentifications(
                    "the joint group must project onto both factor groups".into(),
                ));
            }
            seen.into_iter().collect()
        }
    };
    let labels = (0..n1 * n2)
        .map(|x| {
            let (a, b) = (h1.labels[x / n2], h2.labels[x % n2]);
            a.zip(b).map(|((p1, q1), (p2, q2))| (p1 + p2, q1 + q2))
        })
        .collect();
    let multiplicity = (0..n1 * n2)
        .map(|x| h1.multiplicity[x / n2] * h2.multiplicity[x % n2])
        .collect();
    let mut indexed: Vec<(SlotPerm, (SlotPerm, SlotPerm))> =
        joint.into_iter().map(|(a, b)| (product_perm(&a, &b), (a, b))).collect();
    indexed.sort();
    let structure = CMHodgeStructure {
        weight: h1.weight + h2.weight,
        labels,
        multiplicity,
        group: indexed.iter().map(|(g, _)| g.clone()).collect(),
        conj: product_perm(&h1.conj, &h2.conj),
    };
    Ok(TensorProduct {
        structure,
        factors: [h1.clone(), h2.clone()],
        pairs: indexed.into_iter().map(|(_, p)| p).collect(),
    })
}

/// Summary of a level subspace.
#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub dim: usize,
    pub slots: usize,
    pub hodge_numbers: BTreeMap<String, usize>,
    pub group_order: usize,
    pub is_cm: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dodson_tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
}

/// The substructure spanned by the group orbit of the top-form slot.
pub fn level_subspace(h: &CMHodgeStructure) -> Result<CMHodgeStructure, HodgeError> {
    let top = h.top_slot()?;
    let orbit = h.orbit(top);
    Ok(h.restrict(&orbit))
}

pub fn level_report(level: &CMHodgeStructure) -> LevelReport {
    let triple = level.as_imn2().and_then(|g| triple_from_group(&g, None).ok());
    LevelReport {
        dim: level.dim(),
        slots: level.slots(),
        hodge_numbers: level.hodge_numbers(),
        group_order: level.group.len(),
        is_cm: level.is_cm(),
        dodson_tag: triple.as_ref().map(|t| t.tag().to_string()),
        case: triple.as_ref().and_then(quartic_case_letter).map(String::from),
    }
}

/// Per-factor weak CM verdicts for a product.
#[derive(Debug, Clone, Serialize)]
pub struct FactorVerdicts {
    pub product_weak_cm: bool,
    pub factors: [bool; 2],
    /// Whether "product weak CM ⇒ both factors weak CM" holds here.
    pub consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

pub fn factor_weak_cm(tp: &TensorProduct) -> Result<FactorVerdicts, HodgeError> {
    let [f1, f2] = &tp.factors;
    let (t1, t2) = (f1.top_slot()?, f2.top_slot()?);
    let mut witness = None;
    for (a, b) in &tp.pairs {
        let (x1, x2) = (a[t1], b[t2]);
        if f1.labels[x1].is_none() || f2.labels[x2].is_none() {
            let which = if f1.labels[x1].is_none() { 1 } else { 2 };
            witness = Some(format!(
                "σ sends the top form to slot ({}, {}), whose factor-{which} component is not of pure type",
                x1 + 1,
                x2 + 1
            ));
            break;
        }
    }
    let factor_ok = |f: &CMHodgeStructure| -> Result<bool, HodgeError> { Ok(level_subspace(f)?.is_cm()) };
    let factors = [factor_ok(f1)?, factor_ok(f2)?];
    let product_weak_cm = level_subspace(&tp.structure)?.is_cm();
    Ok(FactorVerdicts {
        product_weak_cm,
        factors,
        consistent: !product_weak_cm || factors == [true, true],
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Situation {
    /// `ℚ(τ_E)` meets the closure of `ℚ(Π)` in `ℚ`.
    Disjoint,
    /// `τ_E` lies in the closure of `ℚ(Π)`.
    Contained,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductReport {
    pub ts_dim: usize,
    pub level_dim: usize,
    /// `2n′`.
    pub endo_field_degree: usize,
    pub situation: Situation,
    pub tau_e_orbit_size: usize,
    /// Number of level slots of each type: `(3,0)`, `(*1)`, `(*2)` and their
    /// conjugates.
    pub coset_types: BTreeMap<String, usize>,
    /// `h^{2,1}` of the level subspace equals `n′ − 1`.
    pub h21_matches: bool,
    pub level: LevelReport,
    pub strong_cm_verdict: bool,
    pub factor_verdicts: [bool; 2],
}

pub fn k3t2_analyze(
    ts: &CMHodgeStructure,
    e: &CMHodgeStructure,
    ident: &Identification,
) -> Result<ProductReport, HodgeError> {
    if ts.weight != 2 {
        return Err(HodgeError::WrongWeight { expected: 2, got: ts.weight });
    }
    if e.weight != 1 {
        return Err(HodgeError::WrongWeight { expected: 1, got: e.weight });
    }
    if e.slots() != 2 {
        return Err(HodgeError::Invalid("the elliptic curve needs exactly two slots".into()));
    }
    let top_s = ts.top_slot()?;
    let top_e = e.top_slot()?;
    let tp = tensor_cm(ts, e, ident)?;
    let n2 = e.slots();
    let top = top_s * n2 + top_e;
    let orbit = tp.structure.orbit(top);
    let (bar_s, bar_e) = (ts.conj[top_s], e.conj[top_e]);

    let mut coset_types: BTreeMap<String, usize> = BTreeMap::new();
    for &x in &orbit {
        let (x1, x2) = (x / n2, x % n2);
        let kind = match (ts.labels[x1], x1, x2) {
            (_, a, b) if a == top_s && b == top_e => "(3,0)",
            (_, a, b) if a == bar_s && b == bar_e => "(0,3)",
            (_, a, b) if a == top_s && b == bar_e => "(*1)",
            (_, a, b) if a == bar_s && b == top_e => "ρ(*1)",
            (Some((1, 1)), _, b) if b == top_e => "(*2)",
            (Some((1, 1)), _, _) => "ρ(*2)",
            _ => {
                return Err(HodgeError::NotWeakCM {
                    witness: format!(
                        "coset sending Ω_S Ω_E to slot ({}, {}) gives a form of type {}",
                        x1 + 1,
                        x2 + 1,
                        render_label(tp.structure.labels[x])
                    ),
                })
            }
        };
        *coset_types.entry(kind.into()).or_insert(0) += 1;
    }

    let level = tp.structure.restrict(&orbit);
    let level_dim = level.dim();
    let n_prime = orbit.len() / 2;
    let h21 = level.hodge_numbers().get("2,1").copied().unwrap_or(0);
    let tau_e_orbit: BTreeSet<usize> = tp.pairs.iter().map(|(_, b)| b[top_e]).collect();
    let s_orbit: BTreeSet<usize> = tp.pairs.iter().map(|(a, _)| a[top_s]).collect();
    let order = tp.pairs.len();
    let situation = if order == ts.group.len() * e.group.len() {
        Situation::Disjoint
    } else if order == ts.group.len() {
        Situation::Contained
    } else {
        return Err(HodgeError::IncompatibleIdentifications(format!(
            "joint group of order {order} is neither the direct product nor a graph over T_S"
        )));
    };
    let strong = s_orbit.iter().all(|&x| ts.labels[x].is_some())
        && tau_e_orbit.iter().all(|&x| e.labels[x].is_some())
        && tau_e_orbit.len() == 2;
    let verdicts = factor_weak_cm(&tp)?;
    Ok(ProductReport {
        ts_dim: ts.dim(),
        level_dim,
        endo_field_degree: orbit.len(),
        situation,
        tau_e_orbit_size: tau_e_orbit.len(),
        coset_types,
        h21_matches: h21 + 1 == n_prime,
        level: level_report(&level),
        strong_cm_verdict: strong,
        factor_verdicts: verdicts.factors,
    })
}

/// Identification for `E` with CM by `ℚ(√p_E)` when `√p_E`'s image `x` in the
/// closure of `ℚ(Π)` is declared: `g` acts on `E` as conjugation exactly when
/// it moves `x`. Requires `x² ∈ p_E·(ℚ^×)²`.
pub fn identification_from_element(
    ts_field: &CMFieldData,
    e_field: &CMFieldData,
    x: &FieldElement,
) -> Result<Identification, HodgeError> {
    let p_e = match e_field.tower.case() {
        crate::tower::TowerCase::Quadratic { p } => p.0.clone(),
        _ => return Err(HodgeError::Invalid("E needs a quadratic field".into())),
    };
    let sq = x.mul(x).as_rational();
    let ok = sq.is_some_and(|s| crate::rational::rational_sqrt(&(s / &p_e)).is_some());
    if !ok {
        return Err(HodgeError::IncompatibleIdentifications(format!(
            "{x} is not a square root of p_E = {} up to rational squares",
            crate::rational::format_rational(&p_e)
        )));
    }
    let (s, gg) = field_slots(ts_field);
    let swap_e: SlotPerm = vec![1, 0];
    let pairs = gg
        .elements
        .iter()
        .zip(&s.perms)
        .map(|(g, p)| (p.clone(), if g.apply(x) == *x { identity(2) } else { swap_e.clone() }))
        .collect();
    Ok(Identification::Generators(pairs))
}

/// Imaginary quadratic subfields of the closure, as named generators.
pub fn imaginary_quadratic_generators(field: &CMFieldData) -> Vec<(&'static str, FieldElement)> {
    let names: &[&str] = match field.case {
        CmCase::Deg2 => &["√p"],
        CmCase::A => &["√p₁", "√p₂"],
        CmCase::B | CmCase::C => &[],
    };
    names.iter().map(|n| (*n, field.tower.named(n).unwrap())).collect()
}

/// Checks a declared "independent" situation against the field data: the
/// fields must not share `ℚ(√p_E)`.
pub fn check_disjoint(ts_field: &CMFieldData, e_field: &CMFieldData) -> Result<(), HodgeError> {
    for (name, x) in imaginary_quadratic_generators(ts_field) {
        if identification_from_element(ts_field, e_field, &x).is_ok() {
            return Err(HodgeError::IncompatibleIdentifications(format!(
                "ℚ(τ_E) = ℚ({name}) lies in the closure of ℚ(Π), so the fields are not disjoint"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RepackagedPair {
    pub weil: CMHodgeStructure,
    pub griffiths: CMHodgeStructure,
    pub original_cm: bool,
    pub weil_cm: bool,
    pub griffiths_cm: bool,
    /// The slot-diagonal algebra (of degree `dim`) acts by Hodge
    /// endomorphisms of both repackagings.
    pub common_algebra_ok: bool,
}

fn relabel(h: &CMHodgeStructure, f: impl Fn((u32, u32)) -> (u32, u32)) -> CMHodgeStructure {
    CMHodgeStructure {
        weight: 1,
        labels: h.labels.iter().map(|l| l.map(&f)).collect(),
        ..h.clone()
    }
}

pub fn weil_griffiths(h: &CMHodgeStructure) -> Result<RepackagedPair, HodgeError> {
    if h.weight != 3 {
        return Err(HodgeError::WrongWeight { expected: 3, got: h.weight });
    }
    let weil = relabel(h, |(p, _)| if p == 2 || p == 0 { (1, 0) } else { (0, 1) });
    let griffiths = relabel(h, |(p, _)| if p >= 2 { (1, 0) } else { (0, 1) });
    let slotwise = |s: &CMHodgeStructure| s.labels.iter().all(Option::is_some);
    let diagonal_full = h.multiplicity.iter().all(|&m| m == 1);
    Ok(RepackagedPair {
        original_cm: h.is_cm(),
        weil_cm: weil.is_cm(),
        griffiths_cm: griffiths.is_cm(),
        common_algebra_ok: diagonal_full && slotwise(&weil) && slotwise(&griffiths),
        weil,
        griffiths,
    })
}

/// Serialized structure: explicit slots, Dodson data, or a CM field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StructureDoc {
    Slots {
        weight: u32,
        /// `"p,q"` or `"mixed"`.
        labels: Vec<String>,
        #[serde(default)]
        multiplicity: Option<Vec<usize>>,
        /// 1-based permutations.
        generators: Vec<Vec<usize>>,
        conj: Vec<usize>,
    },
    Dodson {
        group: Vec<ImN2Element>,
        /// Unbarred label of each pair.
        pair_labels: Vec<(u32, u32)>,
    },
    Field {
        field: crate::tower::TowerCase,
        hodge: FieldHodgeKind,
    },
}

fn parse_label(s: &str) -> Result<Label, HodgeError> {
    if s == "mixed" {
        return Ok(None);
    }
    let bad = || HodgeError::Invalid(format!("bad Hodge label {s:?}"));
    let (p, q) = s.split_once(',').ok_or_else(bad)?;
    Ok(Some((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?)))
}

fn zero_based(p: &[usize]) -> Result<SlotPerm, HodgeError> {
    p.iter()
        .map(|&x| x.checked_sub(1).ok_or_else(|| HodgeError::Invalid("permutations are 1-based".into())))
        .collect()
}

impl StructureDoc {
    pub fn build(&self, squarefree_bound: u64) -> Result<(CMHodgeStructure, Option<CMFieldData>), HodgeError> {
        match self {
            StructureDoc::Slots {
                weight,
                labels,
                multiplicity,
                generators,
                conj,
            } => {
                let labels = labels.iter().map(|s| parse_label(s)).collect::<Result<_, _>>()?;
                let gens = generators.iter().map(|g| zero_based(g)).collect::<Result<Vec<_>, _>>()?;
                let h = CMHodgeStructure::new(*weight, labels, multiplicity.clone(), &gens, zero_based(conj)?)?;
                Ok((h, None))
            }
            StructureDoc::Dodson { group, pair_labels } => {
                if pair_labels.is_empty() {
                    return Err(HodgeError::Invalid("pair_labels is empty".into()));
                }
                let w = pair_labels[0].0 + pair_labels[0].1;
                if pair_labels.iter().any(|(p, q)| p + q != w) {
                    return Err(HodgeError::Invalid("pair labels have different weights".into()));
                }
                let part = HodgePartition::from_pair_labels("input", pair_labels);
                Ok((CMHodgeStructure::from_imn2(group, &part)?, None))
            }
            StructureDoc::Field { field, hodge } => {
                let f = crate::cmfield::from_tower_case(field, squarefree_bound)
                    .map_err(|e| HodgeError::Invalid(e.to_string()))?;
                Ok((CMHodgeStructure::from_cm_field(&f, *hodge)?, Some(f)))
            }
        }
    }
}
