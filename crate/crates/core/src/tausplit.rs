//! Period matrices of weak CM complex tori and their certified splitting into
//! CM elliptic curves (degree 2 and case A) or abelian surfaces (cases B, C).
//!
//! A period matrix is `(I | τ)` in a rational basis `u¹…u²ⁿ` of `H¹`. A split
//! certificate records a row renaming `Q`, a coordinate change `P⁻¹` and a
//! rational base change `S` with
//!
//! ```text
//! P⁻¹ · (I | Qτ) · S = standard form
//! ```
//!
//! checked entrywise in exact tower arithmetic.

use std::collections::BTreeMap;
use std::sync::Arc;

use itertools::Itertools;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cmfield::{from_tower_case, galois_group, CMFieldData, CmCase, CmFieldError, GaloisGroupData};
use crate::linalg::Matrix;
use crate::rational::{format_rational, Rational, RationalStr};
use crate::tower::{FieldElement, GaloisElement, TowerCase, TowerHandle, TowerSpec};

pub type TowerMatrix = Matrix<FieldElement>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("malformed period matrix: {0}")]
    Shape(String),
    #[error(transparent)]
    Field(#[from] CmFieldError),
    #[error("det(τ − τ̄) = 0")]
    SingularTauBar,
    #[error("all entries of τ lie in the proper subfield {subfield} of degree {degree}")]
    ProperSubfield { subfield: String, degree: usize },
    #[error("δ and ε span a space of rank {joint_rank} < n = {n}")]
    NotFullSpan { joint_rank: usize, n: usize },
    #[error("the conjugate of the top form under {embedding} is mixed: h = ({p},{q}) with p + q ≠ {n}")]
    MixedConjugate { embedding: String, p: usize, q: usize, n: usize },
    #[error("no weak CM torus of odd dimension n = {n} exists in cases B and C")]
    OddDimension { n: usize },
    #[error("p = {p} must satisfy 0 < p < n = {n}")]
    DegenerateP { p: usize, n: usize },
    #[error("expected case {expected:?}, got {got:?}")]
    WrongCase { expected: Vec<CmCase>, got: CmCase },
    #[error("internal check {condition} failed: {detail}")]
    Internal { condition: String, detail: String },
}

impl SplitError {
    pub fn condition(&self) -> String {
        match self {
            SplitError::Shape(_) => "malformed-input".into(),
            SplitError::Field(_) => "field-parameters".into(),
            SplitError::SingularTauBar => "singular-tau-bar".into(),
            SplitError::ProperSubfield { .. } => "proper-subfield".into(),
            SplitError::NotFullSpan { .. } => "not-full-span".into(),
            SplitError::MixedConjugate { .. } => "mixed-conjugate".into(),
            SplitError::OddDimension { .. } => "odd-dimension-exclusion".into(),
            SplitError::DegenerateP { .. } => "degenerate-p".into(),
            SplitError::WrongCase { .. } => "wrong-case".into(),
            SplitError::Internal { condition, .. } => condition.clone(),
        }
    }

    fn internal(condition: &str, detail: impl Into<String>) -> Self {
        SplitError::Internal {
            condition: condition.into(),
            detail: detail.into(),
        }
    }
}

/// Monomials multiplying `B₁…B₄` in `τ`.
pub fn block_monomials(case: CmCase) -> &'static [&'static str] {
    match case {
        CmCase::Deg2 => &["1", "√p"],
        CmCase::A => &["1", "√p₁", "√p₂", "√p₁√p₂"],
        CmCase::B | CmCase::C => &["1", "√d", "ξ₊", "√d·ξ₊"],
    }
}

#[derive(Debug, Clone)]
pub struct PeriodMatrix {
    pub n: usize,
    pub field: CMFieldData,
    /// `B₁, B₂` (degree 2) or `B₁…B₄`.
    pub blocks: Vec<Matrix<Rational>>,
}

pub type RationalRows = Vec<Vec<RationalStr>>;

/// Serialized period matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodMatrixDoc {
    pub field: TowerCase,
    pub n: usize,
    pub b1: RationalRows,
    pub b2: RationalRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b3: Option<RationalRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b4: Option<RationalRows>,
}

fn rows_to_matrix(name: &str, n: usize, rows: &RationalRows) -> Result<Matrix<Rational>, SplitError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(SplitError::Shape(format!("{name} must be {n}×{n}")));
    }
    Ok(Matrix::from_rows(rows.iter().map(|r| r.iter().map(|q| q.0.clone()).collect()).collect()))
}

fn matrix_to_rows(m: &Matrix<Rational>) -> RationalRows {
    m.to_rows().into_iter().map(|r| r.into_iter().map(RationalStr).collect()).collect()
}

impl PeriodMatrix {
    pub fn new(field: CMFieldData, blocks: Vec<Matrix<Rational>>) -> Result<Self, SplitError> {
        let want = block_monomials(field.case).len();
        if blocks.len() != want {
            return Err(SplitError::Shape(format!("case {:?} needs {want} blocks", field.case)));
        }
        let n = blocks[0].rows();
        if n == 0 || blocks.iter().any(|b| b.rows() != n || b.cols() != n) {
            return Err(SplitError::Shape("blocks must be square of a common size n ≥ 1".into()));
        }
        Ok(PeriodMatrix { n, field, blocks })
    }

    pub fn from_doc(doc: &PeriodMatrixDoc, squarefree_bound: u64) -> Result<Self, SplitError> {
        let field = from_tower_case(&doc.field, squarefree_bound)?;
        let n = doc.n;
        if n == 0 {
            return Err(SplitError::Shape("n must be positive".into()));
        }
        let mut blocks = vec![rows_to_matrix("b1", n, &doc.b1)?, rows_to_matrix("b2", n, &doc.b2)?];
        match (field.case, &doc.b3, &doc.b4) {
            (CmCase::Deg2, None, None) => {}
            (CmCase::Deg2, _, _) => return Err(SplitError::Shape("b3, b4 are not used in degree 2".into())),
            (_, Some(b3), Some(b4)) => {
                blocks.push(rows_to_matrix("b3", n, b3)?);
                blocks.push(rows_to_matrix("b4", n, b4)?);
            }
            _ => return Err(SplitError::Shape("quartic cases need b1..b4".into())),
        }
        Self::new(field, blocks)
    }

    pub fn to_doc(&self) -> PeriodMatrixDoc {
        let b = |k: usize| self.blocks.get(k).map(matrix_to_rows);
        PeriodMatrixDoc {
            field: self.field.tower.case().clone(),
            n: self.n,
            b1: b(0).unwrap(),
            b2: b(1).unwrap(),
            b3: b(2),
            b4: b(3),
        }
    }

    pub fn tower(&self) -> &Arc<TowerSpec> {
        &self.field.tower
    }

    pub fn case(&self) -> CmCase {
        self.field.case
    }

    /// The assembled `τ` in the closure.
    pub fn tau(&self) -> TowerMatrix {
        let t = self.tower();
        let monos: Vec<FieldElement> = block_monomials(self.case())
            .iter()
            .map(|m| t.named(m).expect("monomial in basis"))
            .collect();
        Matrix::from_fn(self.n, self.n, |i, j| {
            let mut x = FieldElement::zero(t);
            for (b, m) in self.blocks.iter().zip(&monos) {
                x = x.add(&m.scale(b.get(i, j)));
            }
            x
        })
    }

    /// Reads `B₁…B₄` off a `K′`-valued matrix; `None` if some entry leaves
    /// the span of the block monomials.
    pub fn from_tau(field: CMFieldData, tau: &TowerMatrix) -> Option<Self> {
        let t = field.tower.clone();
        let monos = block_monomials(field.case);
        let idx: Vec<usize> = monos.iter().map(|m| t.basis_index(m).expect("monomial in basis")).collect();
        let n = tau.rows();
        for x in tau.entries() {
            for (k, c) in x.coeffs().iter().enumerate() {
                if !idx.contains(&k) && !c.is_zero() {
                    return None;
                }
            }
        }
        let blocks = idx
            .iter()
            .map(|&k| Matrix::from_fn(n, n, |i, j| tau.get(i, j).coeffs()[k].clone()))
            .collect();
        PeriodMatrix::new(field, blocks).ok()
    }
}

pub fn lift(m: &Matrix<Rational>, t: &Arc<TowerSpec>) -> TowerMatrix {
    m.map(|q| t.rational(q.clone()))
}

pub fn galois_map(g: &GaloisElement, m: &TowerMatrix) -> TowerMatrix {
    m.map(|x| g.apply(x))
}

fn power(g: &GaloisElement, k: usize) -> GaloisElement {
    let mut h = g.tower().identity();
    for _ in 0..k {
        h = g.compose(&h);
    }
    h
}

/// `(I | τ)`.
fn period_rows(tau: &TowerMatrix) -> TowerMatrix {
    let one = FieldElement::one(tau.get(0, 0).tower());
    Matrix::identity(tau.rows(), &one).hstack(tau)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EmbeddingType {
    pub embedding: String,
    pub p: usize,
    pub q: usize,
    pub pure: bool,
}

/// Hodge types of the conjugates of the top form, one per embedding of `K′`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LevelNReport {
    /// `h^{p,q}` of the level-n subspace keyed `"p,q"`.
    pub hodge_numbers: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_split: Option<usize>,
    pub embeddings: Vec<EmbeddingType>,
}

/// For each embedding `σ`: the conjugate `σ(Ω)` has `p = n − rank(τ − στ)`
/// holomorphic and `q = n − rank(τ̄ − στ)` antiholomorphic directions.
pub fn level_n_report(tau: &TowerMatrix, group: &GaloisGroupData) -> LevelNReport {
    let n = tau.rows();
    let tau_bar = galois_map(&group.elements[group.conj], tau);
    let embeddings: Vec<EmbeddingType> = group
        .embedding_reps
        .iter()
        .zip(&group.embedding_labels)
        .map(|(&g, label)| {
            let st = galois_map(&group.elements[g], tau);
            let p = n - tau.sub(&st).rank();
            let q = n - tau_bar.sub(&st).rank();
            EmbeddingType {
                embedding: label.clone(),
                p,
                q,
                pure: p + q == n,
            }
        })
        .collect();
    let mut hodge_numbers = BTreeMap::new();
    for e in embeddings.iter().filter(|e| e.pure) {
        *hodge_numbers.entry(format!("{},{}", e.p, e.q)).or_insert(0) += 1;
    }
    LevelNReport {
        hodge_numbers,
        p_split: None,
        embeddings,
    }
}

/// `δ`, `ε` and the outcome of the weak CM checks.
#[derive(Debug, Clone)]
pub struct DeltaEps {
    pub delta: TowerMatrix,
    pub eps: TowerMatrix,
    pub rank_delta: usize,
    pub rank_eps: usize,
    pub joint_rank: usize,
    pub identities_hold: bool,
    pub level: LevelNReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub case: CmCase,
    pub n: usize,
    pub rank_delta: usize,
    pub rank_eps: usize,
    pub joint_rank: usize,
    pub identities_hold: bool,
    pub level: LevelNReport,
}

impl DeltaEps {
    pub fn report(&self, tau: &PeriodMatrix) -> ValidityReport {
        ValidityReport {
            case: tau.case(),
            n: tau.n,
            rank_delta: self.rank_delta,
            rank_eps: self.rank_eps,
            joint_rank: self.joint_rank,
            identities_hold: self.identities_hold,
            level: self.level.clone(),
        }
    }
}

/// Named generators of a proper subfield, tried in order.
fn subfield_candidates(case: CmCase) -> &'static [&'static str] {
    match case {
        CmCase::Deg2 => &[],
        CmCase::A => &["√p₁", "√p₂", "√p₁√p₂"],
        CmCase::B | CmCase::C => &["√d"],
    }
}

fn detect_subfield(
    tau: &TowerMatrix,
    field: &CMFieldData,
    group: &GaloisGroupData,
) -> Option<SplitError> {
    let fix: Vec<&GaloisElement> = group
        .elements
        .iter()
        .filter(|g| tau.entries().all(|x| g.apply(x) == *x))
        .collect();
    if fix.len() <= group.fixer_of_k.len() {
        return None;
    }
    let degree = group.order() / fix.len();
    let t = &field.tower;
    let subfield = if degree == 1 {
        "ℚ".to_string()
    } else {
        subfield_candidates(field.case)
            .iter()
            .find(|m| {
                let x = t.named(m).unwrap();
                fix.iter().all(|g| g.apply(&x) == x)
            })
            .map(|m| format!("ℚ({m})"))
            .unwrap_or_else(|| format!("fixed field of a subgroup of order {}", fix.len()))
    };
    Some(SplitError::ProperSubfield { subfield, degree })
}

/// `(δ, ε)` for the case: `σ₁` and `σ₁σ₂` in case A, `σ₀` and `σ₀²` in cases
/// B and C; in degree 2, `δ = τ − τ̄` and `ε = 0`.
fn delta_eps(tau: &TowerMatrix, field: &CMFieldData) -> (TowerMatrix, TowerMatrix) {
    let t = &field.tower;
    match field.case {
        CmCase::Deg2 => {
            let d = tau.sub(&galois_map(&t.conjugation(), tau));
            let z = d.scale(&FieldElement::zero(t));
            (d, z)
        }
        CmCase::A => {
            let s1 = t.generator(0);
            let s12 = s1.compose(&t.generator(1));
            let s1t = galois_map(&s1, tau);
            (tau.sub(&s1t), galois_map(&s12, tau).sub(&s1t))
        }
        CmCase::B | CmCase::C => {
            let s0 = t.generator(0);
            let s0t = galois_map(&s0, tau);
            (tau.sub(&s0t), galois_map(&power(&s0, 2), tau).sub(&s0t))
        }
    }
}

pub fn validate_weak_cm(pm: &PeriodMatrix) -> Result<DeltaEps, SplitError> {
    let n = pm.n;
    let case = pm.case();
    if matches!(case, CmCase::B | CmCase::C) && n % 2 == 1 {
        return Err(SplitError::OddDimension { n });
    }
    let field = &pm.field;
    let t = pm.tower();
    let group = galois_group(field);
    let tau = pm.tau();
    let tau_bar = galois_map(&t.conjugation(), &tau);
    let diff = tau.sub(&tau_bar);
    if diff.det().is_zero() {
        return Err(SplitError::SingularTauBar);
    }
    if let Some(e) = detect_subfield(&tau, field, &group) {
        return Err(e);
    }
    let (delta, eps) = delta_eps(&tau, field);
    let mut identities_hold = case == CmCase::Deg2 || delta.sub(&eps) == diff;
    if matches!(case, CmCase::B | CmCase::C) {
        identities_hold &= eps == galois_map(&t.generator(0), &delta).neg();
    }
    if !identities_hold {
        return Err(SplitError::internal("structural-identity", "δ − ε ≠ τ − τ̄ or ε ≠ −σ₀(δ)"));
    }
    let rank_delta = delta.rank();
    let rank_eps = eps.rank();
    let joint_rank = delta.vstack(&eps).rank();
    if joint_rank < n {
        return Err(SplitError::NotFullSpan { joint_rank, n });
    }
    let mut level = level_n_report(&tau, &group);
    if let Some(e) = level.embeddings.iter().find(|e| !e.pure) {
        return Err(SplitError::MixedConjugate {
            embedding: e.embedding.clone(),
            p: e.p,
            q: e.q,
            n,
        });
    }
    if case == CmCase::A {
        level.p_split = Some(rank_eps);
    }
    Ok(DeltaEps {
        delta,
        eps,
        rank_delta,
        rank_eps,
        joint_rank,
        identities_hold,
        level,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    EllipticCurve,
    AbelianSurface,
}

/// An isogeny factor, with multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub kind: FactorKind,
    pub dimension: usize,
    pub cm_field: String,
    pub multiplicity: usize,
}

/// The intermediate solutions recorded alongside `P⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoordinateData {
    None,
    CaseA { c1: TowerMatrix, c2: TowerMatrix },
    CaseBC { m: TowerMatrix },
}

#[derive(Debug, Clone)]
pub struct SplitCertificate {
    pub case: CmCase,
    pub n: usize,
    /// Row `i` of the renamed `τ` is row `renaming[i]` of the input.
    pub renaming: Vec<usize>,
    pub p_inv: TowerMatrix,
    pub p: TowerMatrix,
    pub s: Matrix<Rational>,
    pub coordinates: CoordinateData,
    pub p_split: Option<usize>,
    pub factors: Vec<Factor>,
    pub standard_form: TowerMatrix,
    pub level: LevelNReport,
}

/// Coefficient basis of the rows of the standard form, with names.
fn row_bases(tower: &Arc<TowerSpec>, case: CmCase) -> Vec<(Vec<FieldElement>, Vec<&'static str>)> {
    let t = tower;
    let one = FieldElement::one(t);
    match case {
        CmCase::Deg2 => vec![(vec![one, t.named("√p").unwrap()], vec!["1", "√p"])],
        CmCase::A => vec![
            (vec![one.clone(), t.named("√p₁").unwrap()], vec!["1", "√p₁"]),
            (vec![one, t.named("√p₂").unwrap()], vec!["1", "√p₂"]),
        ],
        CmCase::B | CmCase::C => {
            let xp = t.named("ξ₊").unwrap();
            let xm = t.named("ξ₋").unwrap();
            vec![(
                vec![
                    one,
                    t.sqrt_d_prime().unwrap(),
                    xp.add(&xm),
                    t.named("√d").unwrap().mul(&xp.sub(&xm)),
                ],
                vec!["1", "√d′", "ξ₊+ξ₋", "√d(ξ₊−ξ₋)"],
            )]
        }
    }
}

/// Rational coordinates of `x` in `basis`, if it lies in the span.
fn coords_in(basis: &[FieldElement], x: &FieldElement) -> Option<Vec<Rational>> {
    Matrix::from_rows(basis.iter().map(|b| b.coeffs().to_vec()).collect()).solve_left(x.coeffs())
}

/// The standard form for `n` and (case A) the split index `p`.
pub fn standard_form(tower: &Arc<TowerSpec>, case: CmCase, n: usize, p_split: Option<usize>) -> TowerMatrix {
    let t = tower;
    let zero = FieldElement::zero(t);
    let one = FieldElement::one(t);
    let bases = row_bases(t, case);
    match case {
        CmCase::Deg2 | CmCase::A => {
            let head = n - p_split.unwrap_or(0);
            Matrix::from_fn(n, 2 * n, |i, j| {
                let b = &bases[usize::from(i >= head)].0;
                if j == i {
                    one.clone()
                } else if j == n + i {
                    b[1].clone()
                } else {
                    zero.clone()
                }
            })
        }
        CmCase::B | CmCase::C => {
            let r = n / 2;
            let b = &bases[0].0;
            let s03 = power(&t.generator(0), 3);
            let conj: Vec<FieldElement> = b.iter().map(|x| s03.apply(x)).collect();
            Matrix::from_fn(n, 2 * n, |i, j| {
                let (a, src) = if i < r { (i, b) } else { (i - r, &conj) };
                if j % r == a {
                    src[j / r].clone()
                } else {
                    zero.clone()
                }
            })
        }
    }
}

fn factors_for(field: &CMFieldData, n: usize, p_split: Option<usize>) -> Vec<Factor> {
    let curve = |cm: String, k| Factor {
        kind: FactorKind::EllipticCurve,
        dimension: 1,
        cm_field: cm,
        multiplicity: k,
    };
    let param = |name: &str| -> String {
        let v = match field.tower.case() {
            TowerCase::Quadratic { p } => Some(&p.0),
            TowerCase::BiQuadratic { p1, p2 } => Some(if name == "p₁" { &p1.0 } else { &p2.0 }),
            _ => None,
        };
        v.map(format_rational).unwrap_or_default()
    };
    match field.case {
        CmCase::Deg2 => vec![curve(format!("ℚ(√{})", param("p")), n)],
        CmCase::A => {
            let p = p_split.unwrap_or(0);
            vec![
                curve(format!("ℚ(√{})", param("p₁")), n - p),
                curve(format!("ℚ(√{})", param("p₂")), p),
            ]
        }
        CmCase::B | CmCase::C => {
            let (a, b) = crate::cmfield::reflex_bc(field)
                .map(|r| r.generator_square)
                .expect("quartic case has a reflex field");
            let dp = field.tower.d_prime().cloned().unwrap_or_default();
            vec![Factor {
                kind: FactorKind::AbelianSurface,
                dimension: 2,
                cm_field: format!(
                    "reflex field ℚ(√({} + {}·√{}))",
                    format_rational(&a),
                    format_rational(&b),
                    format_rational(&dp)
                ),
                multiplicity: n / 2,
            }]
        }
    }
}

/// Decomposes the rows of `w` (row `i` in the span of `bases[block(i)]`)
/// into rational parts, stacks them and inverts.
fn base_change(
    w: &TowerMatrix,
    bases: &[(Vec<FieldElement>, Vec<&str>)],
    block_of_row: impl Fn(usize) -> usize,
    parts: usize,
) -> Result<Matrix<Rational>, SplitError> {
    let (n, m) = (w.rows(), w.cols());
    // part k of row i goes to row k·n + i of T
    let mut t = Matrix::filled(parts * n, m, Rational::zero());
    for i in 0..n {
        let basis = &bases[block_of_row(i)].0;
        for j in 0..m {
            let c = coords_in(basis, w.get(i, j)).ok_or_else(|| {
                SplitError::internal(
                    "row-field",
                    format!("entry ({},{}) leaves the span {:?}", i + 1, j + 1, bases[block_of_row(i)].1),
                )
            })?;
            for (k, v) in c.into_iter().enumerate() {
                t.set(k * n + i, j, v);
            }
        }
    }
    t.inverse()
        .ok_or_else(|| SplitError::internal("base-change", "rational parts of the rows are dependent"))
}

fn renamed(tau: &TowerMatrix, renaming: &[usize]) -> TowerMatrix {
    tau.select_rows(renaming)
}

fn finish(
    pm: &PeriodMatrix,
    de: &DeltaEps,
    renaming: Vec<usize>,
    p_inv: TowerMatrix,
    coordinates: CoordinateData,
    block_of_row: impl Fn(usize) -> usize,
    parts: usize,
) -> Result<SplitCertificate, SplitError> {
    let t = pm.tower();
    let case = pm.case();
    let p = p_inv
        .inverse()
        .ok_or_else(|| SplitError::internal("coordinate-change", "P⁻¹ is singular"))?;
    let w = p_inv.mul(&period_rows(&renamed(&pm.tau(), &renaming)));
    let bases = row_bases(t, case);
    let s = base_change(&w, &bases, &block_of_row, parts)?;
    let p_split = de.level.p_split;
    let standard_form = standard_form(t, case, pm.n, p_split);
    if w.mul(&lift(&s, t)) != standard_form {
        return Err(SplitError::internal("standard-form", "P⁻¹(I|τ)S differs from the standard form"));
    }
    Ok(SplitCertificate {
        case,
        n: pm.n,
        renaming,
        p_inv,
        p,
        s,
        coordinates,
        p_split,
        factors: factors_for(&pm.field, pm.n, p_split),
        standard_form,
        level: de.level.clone(),
    })
}

fn expect_case(pm: &PeriodMatrix, expected: &[CmCase]) -> Result<(), SplitError> {
    if expected.contains(&pm.case()) {
        Ok(())
    } else {
        Err(SplitError::WrongCase {
            expected: expected.to_vec(),
            got: pm.case(),
        })
    }
}

pub fn split_degree2(pm: &PeriodMatrix) -> Result<SplitCertificate, SplitError> {
    expect_case(pm, &[CmCase::Deg2])?;
    let de = validate_weak_cm(pm)?;
    let one = FieldElement::one(pm.tower());
    let id = Matrix::identity(pm.n, &one);
    finish(pm, &de, (0..pm.n).collect(), id, CoordinateData::None, |_| 0, 2)
}

pub fn split_case_a(pm: &PeriodMatrix) -> Result<SplitCertificate, SplitError> {
    expect_case(pm, &[CmCase::A])?;
    let de = validate_weak_cm(pm)?;
    let n = pm.n;
    let p = de.rank_eps;
    if p == 0 || p == n {
        return Err(SplitError::DegenerateP { p, n });
    }
    let head = n - p;
    let t = pm.tower();
    let renaming = (0..n)
        .combinations(head)
        .find_map(|top| {
            let rest: Vec<usize> = (0..n).filter(|i| !top.contains(i)).collect();
            let stacked = de.delta.select_rows(&top).vstack(&de.eps.select_rows(&rest));
            (stacked.rank() == n).then(|| top.into_iter().chain(rest).collect::<Vec<_>>())
        })
        .ok_or_else(|| SplitError::internal("index-renaming", "no complementary independent rows"))?;
    let delta = de.delta.select_rows(&renaming);
    let eps = de.eps.select_rows(&renaming);
    let head_rows: Vec<usize> = (0..head).collect();
    let tail_rows: Vec<usize> = (head..n).collect();

    // εᵃ + c₁ᵃᵇ ε^{n−p+b} = 0 and c₂ᵇᵈ δᵈ + δ^{n−p+b} = 0
    let solve = |lhs: &TowerMatrix, rhs: &TowerMatrix, what: &str| -> Result<TowerMatrix, SplitError> {
        let rows = (0..lhs.rows())
            .map(|i| {
                let b: Vec<FieldElement> = lhs.row(i).iter().map(|x| x.neg()).collect();
                rhs.solve_left(&b)
                    .ok_or_else(|| SplitError::internal("index-renaming", format!("{what} is not solvable")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_rows(rows))
    };
    let c1 = solve(&eps.select_rows(&head_rows), &eps.select_rows(&tail_rows), "c₁")?;
    let c2 = solve(&delta.select_rows(&tail_rows), &delta.select_rows(&head_rows), "c₂")?;
    let (s1, s2) = (t.generator(0), t.generator(1));
    if galois_map(&s2, &c1) != c1 || galois_map(&s1, &c2) != c2 {
        return Err(SplitError::internal("coefficient-field", "c₁ ∉ ℚ(√p₁) or c₂ ∉ ℚ(√p₂)"));
    }
    let one = FieldElement::one(t);
    let c1s = galois_map(&s1, &c1);
    let p_inv = Matrix::identity(head, &one)
        .hstack(&c1s)
        .vstack(&c2.hstack(&Matrix::identity(p, &one)));
    finish(
        pm,
        &de,
        renaming,
        p_inv,
        CoordinateData::CaseA { c1, c2 },
        |i| usize::from(i >= head),
        2,
    )
}

pub fn split_case_bc(pm: &PeriodMatrix) -> Result<SplitCertificate, SplitError> {
    expect_case(pm, &[CmCase::B, CmCase::C])?;
    let de = validate_weak_cm(pm)?;
    let n = pm.n;
    let r = n / 2;
    let t = pm.tower();
    if de.rank_delta != r {
        return Err(SplitError::internal("delta-rank", format!("rank δ = {} ≠ n/2", de.rank_delta)));
    }
    let renaming = (0..n)
        .combinations(r)
        .find(|bottom| de.delta.select_rows(bottom).rank() == r)
        .map(|bottom| {
            let top: Vec<usize> = (0..n).filter(|i| !bottom.contains(i)).collect();
            top.into_iter().chain(bottom).collect::<Vec<_>>()
        })
        .expect("rank δ = r gives r independent rows");
    let delta = de.delta.select_rows(&renaming);
    let top: Vec<usize> = (0..r).collect();
    let bottom: Vec<usize> = (r..n).collect();
    let (dt, db) = (delta.select_rows(&top), delta.select_rows(&bottom));
    let m = Matrix::from_rows(
        (0..r)
            .map(|i| {
                db.solve_left(dt.row(i))
                    .ok_or_else(|| SplitError::internal("reflex-matrix", "δ_top ∉ span δ_bottom"))
            })
            .collect::<Result<Vec<_>, _>>()?,
    );
    let reflex = &row_bases(t, pm.case())[0].0;
    if m.entries().any(|x| coords_in(reflex, x).is_none()) {
        return Err(SplitError::internal("reflex-matrix", "M is not reflex-valued"));
    }
    let one = FieldElement::one(t);
    let s03 = power(&t.generator(0), 3);
    let id = Matrix::identity(r, &one);
    let p_inv = id
        .hstack(&m.neg())
        .vstack(&id.hstack(&galois_map(&s03, &m).neg()));
    if p_inv.det().is_zero() {
        return Err(SplitError::internal("coordinate-change", "the dw-coordinate change is singular"));
    }
    let w = p_inv.mul(&period_rows(&renamed(&pm.tau(), &renaming)));
    let wt = w.select_rows(&top);
    if w.select_rows(&bottom) != galois_map(&s03, &wt) {
        return Err(SplitError::internal("conjugate-rows", "bottom rows are not σ₀³ of the top rows"));
    }
    // Only the top rows are decomposed; the bottom half of T is redundant.
    let bases = row_bases(t, pm.case());
    let s = base_change(&wt, &bases, |_| 0, 4)?;
    let p = p_inv
        .inverse()
        .ok_or_else(|| SplitError::internal("coordinate-change", "P⁻¹ is singular"))?;
    let standard_form = standard_form(t, pm.case(), n, None);
    if w.mul(&lift(&s, t)) != standard_form {
        return Err(SplitError::internal("standard-form", "P⁻¹(I|τ)S differs from the standard form"));
    }
    Ok(SplitCertificate {
        case: pm.case(),
        n,
        renaming,
        p_inv,
        p,
        s,
        coordinates: CoordinateData::CaseBC { m },
        p_split: None,
        factors: factors_for(&pm.field, n, None),
        standard_form,
        level: de.level.clone(),
    })
}

/// Dispatches on the case of the field.
pub fn split(pm: &PeriodMatrix) -> Result<SplitCertificate, SplitError> {
    match pm.case() {
        CmCase::Deg2 => split_degree2(pm),
        CmCase::A => split_case_a(pm),
        CmCase::B | CmCase::C => split_case_bc(pm),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl Verification {
    fn fail(msg: impl Into<String>) -> Self {
        Verification {
            verified: false,
            diagnostic: Some(msg.into()),
        }
    }
}

/// Independent re-check of a certificate against `τ`.
pub fn verify_certificate(pm: &PeriodMatrix, cert: &SplitCertificate) -> Verification {
    let n = pm.n;
    let t = pm.tower();
    if cert.case != pm.case() || cert.n != n {
        return Verification::fail("case or dimension differs from the period matrix");
    }
    let mut sorted = cert.renaming.clone();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Verification::fail("renaming is not a permutation");
    }
    let square = |m: &TowerMatrix| m.rows() == n && m.cols() == n;
    if !square(&cert.p_inv) || !square(&cert.p) {
        return Verification::fail("P has the wrong shape");
    }
    if cert.s.rows() != 2 * n || cert.s.cols() != 2 * n {
        return Verification::fail("S has the wrong shape");
    }
    if cert.standard_form.rows() != n || cert.standard_form.cols() != 2 * n {
        return Verification::fail("standard form has the wrong shape");
    }
    if cert.p_inv.entries().chain(cert.p.entries()).any(|x| **x.tower() != **t) {
        return Verification::fail("P lives in a different tower");
    }
    if cert.s.det().is_zero() {
        return Verification::fail("det S = 0");
    }
    if cert.p_inv.det().is_zero() || cert.p.det().is_zero() {
        return Verification::fail("P is singular");
    }
    let one = FieldElement::one(t);
    if cert.p.mul(&cert.p_inv) != Matrix::identity(n, &one) {
        return Verification::fail("P · P⁻¹ ≠ I");
    }
    if let Some(msg) = check_row_fields(t, cert) {
        return Verification::fail(msg);
    }
    let expected = standard_form(t, cert.case, n, cert.p_split);
    if cert.standard_form != expected {
        return Verification::fail("standard form does not have the expected shape");
    }
    let factor_dim: usize = cert.factors.iter().map(|f| f.dimension * f.multiplicity).sum();
    if factor_dim != n {
        return Verification::fail(format!("factors have total dimension {factor_dim} ≠ {n}"));
    }
    let lhs = cert
        .p_inv
        .mul(&period_rows(&renamed(&pm.tau(), &cert.renaming)))
        .mul(&lift(&cert.s, t));
    for i in 0..n {
        for j in 0..2 * n {
            if lhs.get(i, j) != cert.standard_form.get(i, j) {
                return Verification::fail(format!(
                    "entry ({},{}): got {}, expected {}",
                    i + 1,
                    j + 1,
                    lhs.get(i, j),
                    cert.standard_form.get(i, j)
                ));
            }
        }
    }
    Verification {
        verified: true,
        diagnostic: None,
    }
}

/// `P⁻¹` must be rational in degree 2; row blocks over `ℚ(√p₁)` and
/// `ℚ(√p₂)` in case A; reflex-valued on top with `σ₀³`-conjugate bottom rows
/// in cases B and C.
fn check_row_fields(t: &Arc<TowerSpec>, cert: &SplitCertificate) -> Option<String> {
    let n = cert.n;
    let pi = &cert.p_inv;
    match cert.case {
        CmCase::Deg2 => pi
            .entries()
            .any(|x| x.as_rational().is_none())
            .then(|| "P is not rational".into()),
        CmCase::A => {
            let head = n - cert.p_split?;
            let (s1, s2) = (t.generator(0), t.generator(1));
            (0..n).find_map(|i| {
                let g = if i < head { &s2 } else { &s1 };
                pi.row(i)
                    .iter()
                    .any(|x| g.apply(x) != *x)
                    .then(|| format!("row {} of P⁻¹ leaves its coefficient field", i + 1))
            })
        }
        CmCase::B | CmCase::C => {
            let r = n / 2;
            let reflex = &row_bases(t, cert.case)[0].0;
            let s03 = power(&t.generator(0), 3);
            for i in 0..r {
                if pi.row(i).iter().any(|x| coords_in(reflex, x).is_none()) {
                    return Some(format!("row {} of P⁻¹ is not reflex-valued", i + 1));
                }
                let conj: Vec<FieldElement> = pi.row(i).iter().map(|x| s03.apply(x)).collect();
                if pi.row(r + i) != conj.as_slice() {
                    return Some(format!("row {} of P⁻¹ is not the σ₀³-conjugate of row {}", r + i + 1, i + 1));
                }
            }
            None
        }
    }
}

pub type TowerRows = Vec<Vec<Vec<RationalStr>>>;

fn tmat_to_doc(m: &TowerMatrix) -> TowerRows {
    m.to_rows()
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|x| x.coeffs().iter().cloned().map(RationalStr).collect())
                .collect()
        })
        .collect()
}

fn tmat_from_doc(t: &Arc<TowerSpec>, rows: &TowerRows, shape: (usize, usize)) -> Result<TowerMatrix, SplitError> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(SplitError::Shape(format!("expected a {}×{} matrix", shape.0, shape.1)));
    }
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let mut row = Vec::with_capacity(r.len());
        for x in r {
            if x.len() != t.dim() {
                return Err(SplitError::Shape(format!("field elements need {} coefficients", t.dim())));
            }
            row.push(t.element(x.iter().map(|q| q.0.clone()).collect()));
        }
        out.push(row);
    }
    Ok(Matrix::from_rows(out))
}

/// Serialized certificate. Tower elements are coefficient lists in the
/// published basis of the closure; `renaming` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub case: CmCase,
    pub n: usize,
    pub basis: Vec<String>,
    pub renaming: Vec<usize>,
    pub p_inv: TowerRows,
    pub p: TowerRows,
    pub s: RationalRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<TowerRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<TowerRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<TowerRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_split: Option<usize>,
    pub factors: Vec<Factor>,
    pub standard_form: TowerRows,
    pub level: LevelNReport,
}

impl SplitCertificate {
    pub fn to_doc(&self) -> CertificateDoc {
        let (c1, c2, m) = match &self.coordinates {
            CoordinateData::None => (None, None, None),
            CoordinateData::CaseA { c1, c2 } => (Some(tmat_to_doc(c1)), Some(tmat_to_doc(c2)), None),
            CoordinateData::CaseBC { m } => (None, None, Some(tmat_to_doc(m))),
        };
        CertificateDoc {
            case: self.case,
            n: self.n,
            basis: self.p_inv.get(0, 0).tower().basis().to_vec(),
            renaming: self.renaming.iter().map(|i| i + 1).collect(),
            p_inv: tmat_to_doc(&self.p_inv),
            p: tmat_to_doc(&self.p),
            s: matrix_to_rows(&self.s),
            c1,
            c2,
            m,
            p_split: self.p_split,
            factors: self.factors.clone(),
            standard_form: tmat_to_doc(&self.standard_form),
            level: self.level.clone(),
        }
    }

    pub fn from_doc(t: &Arc<TowerSpec>, doc: &CertificateDoc) -> Result<Self, SplitError> {
        let n = doc.n;
        if n == 0 || doc.renaming.len() != n || doc.renaming.iter().any(|&i| i == 0 || i > n) {
            return Err(SplitError::Shape("renaming must list 1..n".into()));
        }
        if doc.basis != t.basis() {
            return Err(SplitError::Shape("certificate basis does not match the tower".into()));
        }
        let sq = (n, n);
        let opt = |m: &Option<TowerRows>, shape| m.as_ref().map(|m| tmat_from_doc(t, m, shape)).transpose();
        let coordinates = match (doc.case, doc.p_split) {
            (CmCase::A, Some(p)) if p < n => match (opt(&doc.c1, (n - p, p))?, opt(&doc.c2, (p, n - p))?) {
                (Some(c1), Some(c2)) => CoordinateData::CaseA { c1, c2 },
                _ => return Err(SplitError::Shape("case A certificates carry c1 and c2".into())),
            },
            (CmCase::A, _) => return Err(SplitError::Shape("case A certificates carry p_split < n".into())),
            (CmCase::B | CmCase::C, _) => match opt(&doc.m, (n / 2, n / 2))? {
                Some(m) => CoordinateData::CaseBC { m },
                None => return Err(SplitError::Shape("case B/C certificates carry m".into())),
            },
            (CmCase::Deg2, _) => CoordinateData::None,
        };
        Ok(SplitCertificate {
            case: doc.case,
            n,
            renaming: doc.renaming.iter().map(|i| i - 1).collect(),
            p_inv: tmat_from_doc(t, &doc.p_inv, sq)?,
            p: tmat_from_doc(t, &doc.p, sq)?,
            s: rows_to_matrix_rect(&doc.s, 2 * n)?,
            coordinates,
            p_split: doc.p_split,
            factors: doc.factors.clone(),
            standard_form: tmat_from_doc(t, &doc.standard_form, (n, 2 * n))?,
            level: doc.level.clone(),
        })
    }
}

fn rows_to_matrix_rect(rows: &RationalRows, k: usize) -> Result<Matrix<Rational>, SplitError> {
    rows_to_matrix("s", k, rows)
}

/// Builds a weak CM period matrix from a standard form: `W = std · T` for a
/// random rational `T`, then `τ = W_L⁻¹ W_R`. `next` supplies small random
/// integers. Returns `None` when the draw is degenerate (retry).
pub fn synthesize(
    field: &CMFieldData,
    n: usize,
    p_split: Option<usize>,
    mut next: impl FnMut() -> i64,
) -> Option<PeriodMatrix> {
    let t = &field.tower;
    let std = standard_form(t, field.case, n, p_split);
    let tm = Matrix::from_fn(2 * n, 2 * n, |_, _| Rational::from_integer(next().into()));
    if tm.det().is_zero() {
        return None;
    }
    let w = std.mul(&lift(&tm, t));
    let left = w.submatrix(0, n, 0, n);
    let right = w.submatrix(0, n, n, 2 * n);
    let tau = left.inverse()?.mul(&right);
    PeriodMatrix::from_tau(field.clone(), &tau)
}
