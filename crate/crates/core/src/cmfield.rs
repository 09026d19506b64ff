//! Classification of degree 2 and 4 CM data, the Galois action on embeddings,
//! and the reflex field of a quartic CM type.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rational::{format_rational, square_class_test, Rational, RationalStr};
use crate::tower::{
    automorphism_group, build_tower_with_bound, FieldElement, GaloisElement, TowerCase,
    TowerError, TowerHandle, TowerSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmCase {
    Deg2,
    A,
    B,
    C,
}

impl CmCase {
    pub fn from_tower(case: &TowerCase) -> CmCase {
        match case {
            TowerCase::Quadratic { .. } => CmCase::Deg2,
            TowerCase::BiQuadratic { .. } => CmCase::A,
            TowerCase::CyclicQuartic { .. } => CmCase::B,
            TowerCase::NonGaloisQuarticClosure { .. } => CmCase::C,
        }
    }
}

/// Raw field parameters. A quartic `(d, p, q)` is sorted into case B or C by
/// the square class of `d′`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FieldParams {
    Quartic {
        d: RationalStr,
        p: RationalStr,
        q: RationalStr,
    },
    Biquadratic {
        p1: RationalStr,
        p2: RationalStr,
    },
    Quadratic {
        p: RationalStr,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CmFieldError {
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("reflex field is only defined here for cases B and C, got {0:?}")]
    WrongCase(CmCase),
}

#[derive(Debug, Clone)]
pub struct CMFieldData {
    /// `2n′ = [K′ : ℚ]`.
    pub degree: usize,
    pub case: CmCase,
    pub tower: Arc<TowerSpec>,
    pub distinguished_embedding: String,
}

pub fn classify(params: &FieldParams, squarefree_bound: u64) -> Result<CMFieldData, CmFieldError> {
    let case = match params {
        FieldParams::Quadratic { p } => TowerCase::Quadratic { p: p.clone() },
        FieldParams::Biquadratic { p1, p2 } => TowerCase::BiQuadratic {
            p1: p1.clone(),
            p2: p2.clone(),
        },
        FieldParams::Quartic { d, p, q } => {
            let dp = &p.0 * &p.0 - &q.0 * &q.0 * &d.0;
            let (d, p, q) = (d.clone(), p.clone(), q.clone());
            if dp.is_positive() && !d.0.is_zero() && square_class_test(&dp, &d.0) {
                TowerCase::CyclicQuartic { d, p, q }
            } else {
                TowerCase::NonGaloisQuarticClosure { d, p, q }
            }
        }
    };
    from_tower_case(&case, squarefree_bound)
}

pub fn from_tower_case(case: &TowerCase, squarefree_bound: u64) -> Result<CMFieldData, CmFieldError> {
    let tower = build_tower_with_bound(case, squarefree_bound)?;
    let case = CmCase::from_tower(tower.case());
    Ok(CMFieldData {
        degree: if case == CmCase::Deg2 { 2 } else { 4 },
        case,
        tower,
        distinguished_embedding: "φ′".into(),
    })
}

impl CMFieldData {
    /// A primitive element of `K′` inside the closure.
    pub fn primitive_element(&self) -> FieldElement {
        let t = &self.tower;
        match self.case {
            CmCase::Deg2 => t.named("√p").unwrap(),
            CmCase::A => t.named("√p₁").unwrap().add(&t.named("√p₂").unwrap()),
            CmCase::B | CmCase::C => t.named("ξ₊").unwrap(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaloisGroupData {
    pub elements: Vec<GaloisElement>,
    /// Index of complex conjugation in `elements`.
    pub conj: usize,
    /// Indices of the elements fixing `K′` pointwise.
    pub fixer_of_k: Vec<usize>,
    /// Coset representatives, one per embedding, in the canonical order.
    pub embedding_reps: Vec<usize>,
    pub embedding_labels: Vec<String>,
    /// `embedding_action[g][i] = j` when `g ∘ φᵢ = φⱼ`.
    pub embedding_action: Vec<Vec<usize>>,
}

impl GaloisGroupData {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn index_of(&self, g: &GaloisElement) -> Option<usize> {
        self.elements.iter().position(|h| h == g)
    }

    /// Multiplication table: `table[a][b]` is the index of `a ∘ b`.
    pub fn mul_table(&self) -> Vec<Vec<usize>> {
        self.elements
            .iter()
            .map(|a| {
                self.elements
                    .iter()
                    .map(|b| self.index_of(&a.compose(b)).expect("group is closed"))
                    .collect()
            })
            .collect()
    }

    pub fn is_transitive_on_embeddings(&self) -> bool {
        let n = self.embedding_reps.len();
        let mut seen: Vec<bool> = vec![false; n];
        for perm in &self.embedding_action {
            seen[perm[0]] = true;
        }
        seen.into_iter().all(|b| b)
    }
}

fn find_by_word(elements: &[GaloisElement], word: &[&GaloisElement]) -> usize {
    let t = elements[0].tower();
    let mut g = t.identity();
    for h in word.iter().rev() {
        g = h.compose(&g);
    }
    elements.iter().position(|e| *e == g).expect("word lies in the group")
}

pub fn galois_group(field: &CMFieldData) -> GaloisGroupData {
    let t = &field.tower;
    let elements = automorphism_group(t);
    let conj = elements
        .iter()
        .position(|g| *g == t.conjugation())
        .expect("conjugation lies in the group");
    let prim = field.primitive_element();
    let fixer_of_k: Vec<usize> = (0..elements.len())
        .filter(|&i| elements[i].apply(&prim) == prim)
        .collect();

    let gens: Vec<GaloisElement> = (0..t.generator_names().len()).map(|i| t.generator(i)).collect();
    let (reps, labels): (Vec<usize>, Vec<&str>) = match field.case {
        CmCase::Deg2 => (vec![0, find_by_word(&elements, &[&gens[0]])], vec!["φ′", "ρφ′"]),
        CmCase::A => (
            vec![
                0,
                find_by_word(&elements, &[&gens[0]]),
                find_by_word(&elements, &[&gens[1]]),
                find_by_word(&elements, &[&gens[0], &gens[1]]),
            ],
            vec!["φ′", "σ₁φ′", "σ₂φ′", "σ₁σ₂φ′"],
        ),
        CmCase::B | CmCase::C => {
            let s = &gens[0];
            (
                vec![
                    0,
                    find_by_word(&elements, &[s]),
                    find_by_word(&elements, &[s, s]),
                    find_by_word(&elements, &[s, s, s]),
                ],
                vec!["φ′", "σ₀φ′", "σ₀²φ′", "σ₀³φ′"],
            )
        }
    };
    let images: Vec<FieldElement> = reps.iter().map(|&r| elements[r].apply(&prim)).collect();
    let embedding_action = elements
        .iter()
        .map(|g| {
            images
                .iter()
                .map(|x| {
                    let y = g.apply(x);
                    images.iter().position(|z| *z == y).expect("embeddings are permuted")
                })
                .collect()
        })
        .collect();
    GaloisGroupData {
        elements,
        conj,
        fixer_of_k,
        embedding_reps: reps,
        embedding_labels: labels.into_iter().map(String::from).collect(),
        embedding_action,
    }
}

#[derive(Debug, Clone)]
pub struct ReflexFieldData {
    pub basis: Vec<FieldElement>,
    pub basis_labels: Vec<String>,
    pub degree: usize,
    pub closed_under_multiplication: bool,
    /// `(ξ₊+ξ₋)²` written as `a + b√d′`.
    pub generator_square: (Rational, Rational),
    pub totally_negative: bool,
    /// Labels of the elements `γ` with `γS = S`, where `S` is the lift of the
    /// CM type `{φ′, σ₀φ′}` to the closure.
    pub stabilizer: Vec<String>,
    pub fixed_by_stabilizer: bool,
    /// Labels of the elements fixing `K′` pointwise.
    pub fixer_of_k: Vec<String>,
    /// Whether the reflex span coincides with the span of `K′`.
    pub equals_k: bool,
}

fn span_rank(v: &[FieldElement]) -> usize {
    Matrix::from_rows(v.iter().map(|x| x.coeffs().to_vec()).collect()).rank()
}

fn in_span(basis: &[FieldElement], x: &FieldElement) -> bool {
    let mut rows: Vec<FieldElement> = basis.to_vec();
    let r = span_rank(&rows);
    rows.push(x.clone());
    span_rank(&rows) == r
}

/// `a + b√e` is totally negative (both real conjugates negative).
pub fn totally_negative(a: &Rational, b: &Rational, e: &Rational) -> bool {
    a.is_negative() && a * a > b * b * e
}

pub fn reflex_bc(field: &CMFieldData) -> Result<ReflexFieldData, CmFieldError> {
    if !matches!(field.case, CmCase::B | CmCase::C) {
        return Err(CmFieldError::WrongCase(field.case));
    }
    let t = &field.tower;
    let sqrt_d = t.named("√d").unwrap();
    let sqrt_dp = t.sqrt_d_prime().unwrap();
    let xp = t.named("ξ₊").unwrap();
    let xm = t.named("ξ₋").unwrap();
    let basis = vec![
        FieldElement::one(t),
        sqrt_dp.clone(),
        xp.add(&xm),
        sqrt_d.mul(&xp.sub(&xm)),
    ];
    let closed = span_rank(&basis) == 4
        && basis
            .iter()
            .all(|a| basis.iter().all(|b| in_span(&basis, &a.mul(b))));

    // Write (ξ₊+ξ₋)² in {1, √d′}.
    let sq = basis[2].mul(&basis[2]);
    let coords = Matrix::from_rows(vec![basis[0].coeffs().to_vec(), basis[1].coeffs().to_vec()])
        .solve_left(sq.coeffs())
        .expect("(ξ₊+ξ₋)² lies in ℚ(√d′)");
    let (a, b) = (coords[0].clone(), coords[1].clone());
    let dp = t.d_prime().unwrap().clone();
    let totally_neg = totally_negative(&a, &b, &dp);

    let group = galois_group(field);
    let prim = field.primitive_element();
    let phi_images = [
        group.elements[group.embedding_reps[0]].apply(&prim),
        group.elements[group.embedding_reps[1]].apply(&prim),
    ];
    let lift: Vec<usize> = (0..group.order())
        .filter(|&g| phi_images.contains(&group.elements[g].apply(&prim)))
        .collect();
    let table = group.mul_table();
    let stab: Vec<usize> = (0..group.order())
        .filter(|&c| {
            let mut moved: Vec<usize> = lift.iter().map(|&s| table[c][s]).collect();
            moved.sort_unstable();
            moved == lift
        })
        .collect();
    let fixed = stab
        .iter()
        .all(|&g| basis.iter().all(|x| group.elements[g].apply(x) == *x));
    let k_span: Vec<FieldElement> = (0..4).map(|k| prim.pow(k)).collect();
    let mut joint = basis.clone();
    joint.extend(k_span);
    let equals_k = span_rank(&joint) == 4;
    let label = |i: &usize| group.elements[*i].label().to_string();
    Ok(ReflexFieldData {
        basis,
        basis_labels: ["1", "√d′", "ξ₊+ξ₋", "√d(ξ₊−ξ₋)"].iter().map(|s| s.to_string()).collect(),
        degree: 4,
        closed_under_multiplication: closed,
        generator_square: (a, b),
        totally_negative: totally_neg,
        stabilizer: stab.iter().map(label).collect(),
        fixed_by_stabilizer: fixed,
        fixer_of_k: group.fixer_of_k.iter().map(label).collect(),
        equals_k,
    })
}

/// Serializable summary of a classified field.
#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case: CmCase,
    pub tower: TowerCase,
    pub degree: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_prime: Option<RationalStr>,
    pub closure_degree: usize,
    pub group_order: usize,
    pub basis: Vec<String>,
    pub orientation: Vec<String>,
    /// Generator → (basis monomial → image).
    pub generator_action: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn case_report(field: &CMFieldData) -> CaseReport {
    let t = &field.tower;
    let generator_action = t
        .generator_names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let table = t
                .generator(i)
                .image_table()
                .into_iter()
                .map(|(b, img)| (b, img.to_string()))
                .collect();
            (name.to_string(), table)
        })
        .collect();
    CaseReport {
        case: field.case,
        tower: t.case().clone(),
        degree: field.degree,
        d_prime: t.d_prime().cloned().map(RationalStr),
        closure_degree: t.dim(),
        group_order: automorphism_group(t).len(),
        basis: t.basis().to_vec(),
        orientation: t.orientation().to_vec(),
        generator_action,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaloisReport {
    pub case: CmCase,
    pub order: usize,
    pub elements: Vec<String>,
    pub conjugation: String,
    pub embeddings: Vec<String>,
    /// Element label → images of the embeddings, by index.
    pub embedding_action: BTreeMap<String, Vec<usize>>,
    pub fixer_of_k: Vec<String>,
    pub transitive: bool,
}

pub fn galois_report(field: &CMFieldData) -> GaloisReport {
    let g = galois_group(field);
    GaloisReport {
        case: field.case,
        order: g.order(),
        elements: g.elements.iter().map(|e| e.label().to_string()).collect(),
        conjugation: g.elements[g.conj].label().to_string(),
        embeddings: g.embedding_labels.clone(),
        embedding_action: g
            .elements
            .iter()
            .zip(&g.embedding_action)
            .map(|(e, a)| (e.label().to_string(), a.clone()))
            .collect(),
        fixer_of_k: g.fixer_of_k.iter().map(|&i| g.elements[i].label().to_string()).collect(),
        transitive: g.is_transitive_on_embeddings(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflexReport {
    pub case: CmCase,
    pub degree: usize,
    pub basis: BTreeMap<String, FieldElement>,
    pub closed_under_multiplication: bool,
    pub generator_square: String,
    pub totally_negative: bool,
    pub stabilizer: Vec<String>,
    pub fixed_by_stabilizer: bool,
    pub fixer_of_k: Vec<String>,
    pub equals_k: bool,
}

pub fn reflex_report(field: &CMFieldData) -> Result<ReflexReport, CmFieldError> {
    let r = reflex_bc(field)?;
    Ok(ReflexReport {
        case: field.case,
        degree: r.degree,
        basis: r.basis_labels.iter().cloned().zip(r.basis.iter().cloned()).collect(),
        closed_under_multiplication: r.closed_under_multiplication,
        generator_square: format!(
            "{} + ({})·√d′",
            format_rational(&r.generator_square.0),
            format_rational(&r.generator_square.1)
        ),
        totally_negative: r.totally_negative,
        stabilizer: r.stabilizer,
        fixed_by_stabilizer: r.fixed_by_stabilizer,
        fixer_of_k: r.fixer_of_k,
        equals_k: r.equals_k,
    })
}
