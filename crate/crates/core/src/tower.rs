//! Exact arithmetic in the normal closures of quadratic and quartic CM fields.
//!
//! A tower is presented by structure constants over an explicit monomial basis.
//! Internally every tower is first built as a chain of quadratic extensions
//! `ℚ(α₁)(α₂)…` with `αₖ² ∈ ℚ(α₁,…,αₖ₋₁)`; the published basis is a rational
//! change of basis of the chain monomials, and the multiplication table is
//! read off from chain products.
//!
//! No embedding into ℂ is ever materialised. Sign conventions are recorded as
//! orientation flags: `√p`, `ξ₊` lie in the upper half plane and `√d`, `√d′`
//! are positive reals.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize, Serializer};

use crate::linalg::{Matrix, Scalar};
use crate::rational::{
    format_rational, is_square_free, rational_sqrt, square_class_test, Rational, RationalStr,
    SquareFreeError, DEFAULT_SQUAREFREE_BOUND,
};

/// The four families of closures, with their rational parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum TowerCase {
    Quadratic {
        p: RationalStr,
    },
    BiQuadratic {
        p1: RationalStr,
        p2: RationalStr,
    },
    CyclicQuartic {
        d: RationalStr,
        p: RationalStr,
        q: RationalStr,
    },
    NonGaloisQuarticClosure {
        d: RationalStr,
        p: RationalStr,
        q: RationalStr,
    },
}

impl TowerCase {
    pub fn quadratic(p: Rational) -> Self {
        TowerCase::Quadratic { p: p.into() }
    }
    pub fn biquadratic(p1: Rational, p2: Rational) -> Self {
        TowerCase::BiQuadratic {
            p1: p1.into(),
            p2: p2.into(),
        }
    }
    pub fn cyclic_quartic(d: Rational, p: Rational, q: Rational) -> Self {
        TowerCase::CyclicQuartic {
            d: d.into(),
            p: p.into(),
            q: q.into(),
        }
    }
    pub fn non_galois_closure(d: Rational, p: Rational, q: Rational) -> Self {
        TowerCase::NonGaloisQuarticClosure {
            d: d.into(),
            p: p.into(),
            q: q.into(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TowerCase::Quadratic { .. } => "quadratic",
            TowerCase::BiQuadratic { .. } => "biquadratic",
            TowerCase::CyclicQuartic { .. } => "cyclic_quartic",
            TowerCase::NonGaloisQuarticClosure { .. } => "non_galois_quartic_closure",
        }
    }

    /// `d′ = p² − q²d` for the quartic cases.
    pub fn d_prime(&self) -> Option<Rational> {
        match self {
            TowerCase::CyclicQuartic { d, p, q } | TowerCase::NonGaloisQuarticClosure { d, p, q } => {
                Some(&p.0 * &p.0 - &q.0 * &q.0 * &d.0)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TowerError {
    #[error("d = {0} is not square-free")]
    NotSquareFree(String),
    #[error("d = {0} must be an integer greater than 1")]
    BadDiscriminant(String),
    #[error("{param} = {value} has the wrong sign")]
    WrongSign { param: &'static str, value: String },
    #[error("square class of d′ = {d_prime} is inconsistent with the requested case: {reason}")]
    SquareClassMismatch { d_prime: String, reason: String },
    #[error("p₁/p₂ = {0} is a rational square, so ℚ(√p₁) = ℚ(√p₂)")]
    DegenerateBiquadratic(String),
    #[error(transparent)]
    SquareFree(#[from] SquareFreeError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldOpError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands live in different towers")]
    TowerMismatch,
}

/// Chain of quadratic extensions; `consts[k]` is `αₖ₊₁²` written in the first
/// `2^k` chain monomials.
#[derive(Debug, Clone)]
struct QuadChain {
    consts: Vec<Vec<Rational>>,
}

impl QuadChain {
    fn dim(&self) -> usize {
        1 << self.consts.len()
    }

    fn mul(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        self.mul_level(a, b, self.consts.len())
    }

    fn mul_level(&self, a: &[Rational], b: &[Rational], level: usize) -> Vec<Rational> {
        if level == 0 {
            return vec![&a[0] * &b[0]];
        }
        let h = 1 << (level - 1);
        let (a0, a1) = a.split_at(h);
        let (b0, b1) = b.split_at(h);
        let c = &self.consts[level - 1];
        let a0b0 = self.mul_level(a0, b0, level - 1);
        let a1b1 = self.mul_level(a1, b1, level - 1);
        let a1b1c = self.mul_level(&a1b1, c, level - 1);
        let a0b1 = self.mul_level(a0, b1, level - 1);
        let a1b0 = self.mul_level(a1, b0, level - 1);
        let mut out = Vec::with_capacity(2 * h);
        out.extend(a0b0.iter().zip(&a1b1c).map(|(x, y)| x + y));
        out.extend(a0b1.iter().zip(&a1b0).map(|(x, y)| x + y));
        out
    }
}

fn chain_vec(dim: usize, entries: &[(usize, Rational)]) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); dim];
    for (i, q) in entries {
        v[*i] = q.clone();
    }
    v
}

/// The normal closure of one of the four CM families, with its multiplication
/// table and the named generators of its automorphism group.
#[derive(Debug)]
pub struct TowerSpec {
    case: TowerCase,
    basis: Vec<String>,
    mul_table: Vec<Vec<Vec<Rational>>>,
    /// `mul_table` scaled to integers: `table[i][j] = [(k, c·den)]`.
    int_table: IntTable,
    /// The non-identity automorphisms, when they number `dim − 1` (the tower
    /// is Galois over ℚ); used for inversion through the norm.
    conjugates: Vec<IntMap>,
    orientation: Vec<String>,
    d_prime: Option<Rational>,
    /// `(name, images of the basis)` for each named generator.
    generators: Vec<(String, Vec<Vec<Rational>>)>,
    /// Word in the generators that acts as complex conjugation.
    conjugation_word: Vec<usize>,
}

#[derive(Debug, Clone)]
struct IntTable {
    den: BigInt,
    table: Vec<Vec<Vec<(usize, BigInt)>>>,
}

impl IntTable {
    fn new(mul_table: &[Vec<Vec<Rational>>]) -> Self {
        let den = mul_table
            .iter()
            .flatten()
            .flatten()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let table = mul_table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        v.iter()
                            .enumerate()
                            .filter(|(_, c)| !c.is_zero())
                            .map(|(k, c)| (k, c.numer() * (&den / c.denom())))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        IntTable { den, table }
    }
}

/// A ℚ-linear map on the basis as integer rows over a common denominator.
#[derive(Debug, Clone)]
struct IntMap {
    den: BigInt,
    rows: Vec<Vec<(usize, BigInt)>>,
}

impl IntMap {
    fn new(images: &[Vec<Rational>]) -> Self {
        let den = images.iter().flatten().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let rows = images
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| (k, c.numer() * (&den / c.denom())))
                    .collect()
            })
            .collect();
        IntMap { den, rows }
    }

    fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        let (xs, dx) = common_denominator(x);
        let mut out = vec![BigInt::zero(); x.len()];
        for (c, row) in xs.iter().zip(&self.rows) {
            if c.is_zero() {
                continue;
            }
            for (k, v) in row {
                out[*k] += c * v;
            }
        }
        let den = dx * &self.den;
        out.into_iter().map(|v| Rational::new(v, den.clone())).collect()
    }
}

/// Images of the basis under `g ∘ h`.
fn compose_images(g: &[Vec<Rational>], h: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = g.len();
    h.iter()
        .map(|img| {
            let mut out = vec![Rational::zero(); n];
            for (c, gi) in img.iter().zip(g) {
                if !c.is_zero() {
                    for (o, v) in out.iter_mut().zip(gi) {
                        *o += c * v;
                    }
                }
            }
            out
        })
        .collect()
}

/// Integer numerators over a common denominator.
fn common_denominator(v: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let den = v.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let nums = v.iter().map(|c| c.numer() * (&den / c.denom())).collect();
    (nums, den)
}

impl PartialEq for TowerSpec {
    fn eq(&self, other: &Self) -> bool {
        self.case == other.case
    }
}

impl Serialize for TowerSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.case.serialize(s)
    }
}

/// Validates parameters and builds the tower with the default square-free
/// trial bound.
pub fn build_tower(case: &TowerCase) -> Result<Arc<TowerSpec>, TowerError> {
    build_tower_with_bound(case, DEFAULT_SQUAREFREE_BOUND)
}

pub fn build_tower_with_bound(case: &TowerCase, bound: u64) -> Result<Arc<TowerSpec>, TowerError> {
    let neg = |param: &'static str, v: &Rational| -> Result<(), TowerError> {
        if v.is_negative() {
            Ok(())
        } else {
            Err(TowerError::WrongSign {
                param,
                value: format_rational(v),
            })
        }
    };
    match case {
        TowerCase::Quadratic { p } => {
            neg("p", &p.0)?;
            let chain = QuadChain {
                consts: vec![vec![p.0.clone()]],
            };
            let basis = ["1", "√p"];
            Ok(Arc::new(TowerSpec::assemble(
                case.clone(),
                chain,
                &basis,
                None,
                vec!["√p: Im > 0".into()],
                None,
                |t| vec![("ρ".into(), vec![t.basis_element(1).neg()])],
                vec![0],
            )))
        }
        TowerCase::BiQuadratic { p1, p2 } => {
            neg("p1", &p1.0)?;
            neg("p2", &p2.0)?;
            if rational_sqrt(&(&p1.0 / &p2.0)).is_some() {
                return Err(TowerError::DegenerateBiquadratic(format_rational(&(&p1.0 / &p2.0))));
            }
            let chain = QuadChain {
                consts: vec![vec![p1.0.clone()], chain_vec(2, &[(0, p2.0.clone())])],
            };
            let basis = ["1", "√p₁", "√p₂", "√p₁√p₂"];
            Ok(Arc::new(TowerSpec::assemble(
                case.clone(),
                chain,
                &basis,
                None,
                vec!["√p₁: Im > 0".into(), "√p₂: Im > 0".into()],
                None,
                |t| {
                    let (a, b) = (t.basis_element(1), t.basis_element(2));
                    vec![
                        ("σ₁".into(), vec![a.neg(), b.clone()]),
                        ("σ₂".into(), vec![a, b.neg()]),
                    ]
                },
                vec![0, 1],
            )))
        }
        TowerCase::CyclicQuartic { d, p, q } | TowerCase::NonGaloisQuarticClosure { d, p, q } => {
            let (d, p, q) = (&d.0, &p.0, &q.0);
            if !d.is_integer() || d <= &Rational::one() {
                return Err(TowerError::BadDiscriminant(format_rational(d)));
            }
            if !is_square_free(d.numer(), bound)? {
                return Err(TowerError::NotSquareFree(format_rational(d)));
            }
            neg("p", p)?;
            let dp = p * p - q * q * d;
            if !dp.is_positive() {
                return Err(TowerError::WrongSign {
                    param: "d′",
                    value: format_rational(&dp),
                });
            }
            if rational_sqrt(&dp).is_some() {
                return Err(TowerError::SquareClassMismatch {
                    d_prime: format_rational(&dp),
                    reason: "d′ is a rational square, so the quartic field is biquadratic".into(),
                });
            }
            let cyclic = square_class_test(&dp, d);
            match (case, cyclic) {
                (TowerCase::CyclicQuartic { .. }, true) => Ok(Arc::new(TowerSpec::cyclic(case, d, p, q, dp))),
                (TowerCase::NonGaloisQuarticClosure { .. }, false) => {
                    Ok(Arc::new(TowerSpec::non_galois(case, d, p, q, dp)))
                }
                (TowerCase::CyclicQuartic { .. }, false) => Err(TowerError::SquareClassMismatch {
                    d_prime: format_rational(&dp),
                    reason: "cyclic quartic requires d′ ∈ d·(ℚ^×)²".into(),
                }),
                _ => Err(TowerError::SquareClassMismatch {
                    d_prime: format_rational(&dp),
                    reason: "non-Galois quartic requires d′ ∉ d·(ℚ^×)²".into(),
                }),
            }
        }
    }
}

impl TowerSpec {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        case: TowerCase,
        chain: QuadChain,
        basis: &[&str],
        to_chain: Option<Vec<Vec<Rational>>>,
        orientation: Vec<String>,
        d_prime: Option<Rational>,
        gens: impl FnOnce(&Arc<TowerSpec>) -> Vec<(String, Vec<FieldElement>)>,
        conjugation_word: Vec<usize>,
    ) -> TowerSpec {
        let dim = chain.dim();
        // Rows: published basis element j in chain coordinates.
        let to_chain = to_chain.unwrap_or_else(|| {
            (0..dim)
                .map(|j| chain_vec(dim, &[(j, Rational::one())]))
                .collect()
        });
        let to_chain_m = Matrix::from_rows(to_chain.clone());
        let from_chain = to_chain_m.inverse().expect("basis change must be invertible");
        let to_basis = |v: &[Rational]| -> Vec<Rational> {
            Matrix::from_rows(vec![v.to_vec()]).mul(&from_chain).row(0).to_vec()
        };
        let mul_table: Vec<Vec<Vec<Rational>>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| to_basis(&chain.mul(&to_chain[i], &to_chain[j])))
                    .collect()
            })
            .collect();

        // Generators are given by images of the chain generators α₁, α₂, …;
        // extend multiplicatively to chain monomials, then to the basis.
        let mut spec = TowerSpec {
            case,
            basis: basis.iter().map(|s| s.to_string()).collect(),
            int_table: IntTable::new(&mul_table),
            conjugates: Vec::new(),
            mul_table,
            orientation,
            d_prime,
            generators: Vec::new(),
            conjugation_word,
        };
        let proto = Arc::new(TowerSpec {
            case: spec.case.clone(),
            basis: spec.basis.clone(),
            mul_table: spec.mul_table.clone(),
            int_table: spec.int_table.clone(),
            conjugates: Vec::new(),
            orientation: spec.orientation.clone(),
            d_prime: spec.d_prime.clone(),
            generators: Vec::new(),
            conjugation_word: spec.conjugation_word.clone(),
        });
        for (name, images) in gens(&proto) {
            let monomial_images: Vec<FieldElement> = (0..dim)
                .map(|m| {
                    let mut acc = FieldElement::one(&proto);
                    for (k, img) in images.iter().enumerate() {
                        if m >> k & 1 == 1 {
                            acc = acc.mul(img);
                        }
                    }
                    acc
                })
                .collect();
            let basis_images: Vec<Vec<Rational>> = to_chain
                .iter()
                .map(|row| {
                    let mut acc = FieldElement::zero(&proto);
                    for (m, c) in row.iter().enumerate() {
                        if !c.is_zero() {
                            acc = acc.add(&monomial_images[m].scale(c));
                        }
                    }
                    acc.coeffs
                })
                .collect();
            spec.generators.push((name, basis_images));
        }
        let identity: Vec<Vec<Rational>> = (0..dim).map(|j| chain_vec(dim, &[(j, Rational::one())])).collect();
        let mut group = vec![identity];
        let mut k = 0;
        while k < group.len() && group.len() <= dim {
            for (_, g) in &spec.generators {
                let h = compose_images(g, &group[k]);
                if !group.contains(&h) {
                    group.push(h);
                }
            }
            k += 1;
        }
        if group.len() == dim {
            spec.conjugates = group[1..].iter().map(|g| IntMap::new(g)).collect();
        }
        spec
    }

    fn cyclic(case: &TowerCase, d: &Rational, p: &Rational, q: &Rational, dp: Rational) -> TowerSpec {
        let chain = QuadChain {
            consts: vec![vec![d.clone()], vec![p.clone(), q.clone()]],
        };
        // √d′ = c·√d with c > 0.
        let c = rational_sqrt(&(&dp / d)).expect("cyclic case has d′/d a square");
        let basis = ["1", "√d", "ξ₊", "√d·ξ₊"];
        TowerSpec::assemble(
            case.clone(),
            chain,
            &basis,
            None,
            vec!["√d > 0".into(), "√d′ > 0".into(), "ξ₊: Im > 0".into()],
            Some(dp),
            move |t| {
                let sd = t.basis_element(1);
                let xi = t.basis_element(2);
                let sqrt_dp = sd.scale(&c);
                let xi_minus = sqrt_dp.neg().mul(&xi.inv().expect("ξ₊ ≠ 0"));
                vec![("σ₀".into(), vec![sd.neg(), xi_minus])]
            },
            vec![0, 0],
        )
    }

    fn non_galois(case: &TowerCase, d: &Rational, p: &Rational, q: &Rational, dp: Rational) -> TowerSpec {
        let dim = 8;
        let chain = QuadChain {
            consts: vec![
                vec![d.clone()],
                chain_vec(2, &[(0, dp.clone())]),
                chain_vec(4, &[(0, p.clone()), (1, q.clone())]),
            ],
        };
        // Chain monomials: 1, √d, √d′, √d√d′, ξ₊, √dξ₊, √d′ξ₊, √d√d′ξ₊.
        // ξ₋ = −√d′ξ₊/(p + q√d) = (−p/d′)·√d′ξ₊ + (q/d′)·√d√d′ξ₊.
        let xi_minus = chain_vec(dim, &[(6, -p / &dp), (7, q / &dp)]);
        let sqrt_d_xi_minus = chain_vec(dim, &[(7, -p / &dp), (6, q * d / &dp)]);
        let e = |i: usize| chain_vec(dim, &[(i, Rational::one())]);
        let to_chain = vec![e(0), e(1), e(2), e(3), e(4), xi_minus, e(5), sqrt_d_xi_minus];
        let basis = ["1", "√d", "√d′", "√d√d′", "ξ₊", "ξ₋", "√d·ξ₊", "√d·ξ₋"];
        TowerSpec::assemble(
            case.clone(),
            chain,
            &basis,
            Some(to_chain),
            vec!["√d > 0".into(), "√d′ > 0".into(), "ξ₊: Im > 0".into()],
            Some(dp),
            |t| {
                let sd = t.basis_element(1);
                let sdp = t.basis_element(2);
                let xm = t.basis_element(5);
                vec![
                    ("σ₀".into(), vec![sd.neg(), sdp.neg(), xm.clone()]),
                    ("σ₃".into(), vec![sd.neg(), sdp, xm]),
                ]
            },
            vec![0, 0],
        )
    }

    pub fn case(&self) -> &TowerCase {
        &self.case
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn orientation(&self) -> &[String] {
        &self.orientation
    }

    pub fn d_prime(&self) -> Option<&Rational> {
        self.d_prime.as_ref()
    }

    /// Structure constants: `b_i · b_j = Σ_k table[i][j][k] b_k`.
    pub fn mul_table(&self) -> &[Vec<Vec<Rational>>] {
        &self.mul_table
    }

    pub fn generator_names(&self) -> Vec<&str> {
        self.generators.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn basis_index(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == label)
    }
}

/// Constructors that need the shared handle.
pub trait TowerHandle {
    fn basis_element(&self, i: usize) -> FieldElement;
    fn element(&self, coeffs: Vec<Rational>) -> FieldElement;
    fn rational(&self, q: Rational) -> FieldElement;
    fn named(&self, label: &str) -> Option<FieldElement>;
    fn generator(&self, i: usize) -> GaloisElement;
    fn conjugation(&self) -> GaloisElement;
    fn identity(&self) -> GaloisElement;
    /// `√d′` in the quartic cases.
    fn sqrt_d_prime(&self) -> Option<FieldElement>;
}

impl TowerHandle for Arc<TowerSpec> {
    fn basis_element(&self, i: usize) -> FieldElement {
        let mut v = vec![Rational::zero(); self.dim()];
        v[i] = Rational::one();
        FieldElement::new(self, v)
    }

    fn element(&self, coeffs: Vec<Rational>) -> FieldElement {
        assert_eq!(coeffs.len(), self.dim(), "coefficient vector has wrong length");
        FieldElement::new(self, coeffs)
    }

    fn rational(&self, q: Rational) -> FieldElement {
        FieldElement::one(self).scale(&q)
    }

    fn named(&self, label: &str) -> Option<FieldElement> {
        if let Some(i) = self.basis_index(label) {
            return Some(self.basis_element(i));
        }
        match label {
            "ξ₋" => {
                let g = self.generator(0);
                self.named("ξ₊").map(|x| g.apply(&x))
            }
            "√d′" => self.sqrt_d_prime(),
            _ => None,
        }
    }

    fn generator(&self, i: usize) -> GaloisElement {
        let (name, images) = &self.generators[i];
        GaloisElement::from_images(self, images.clone(), name.clone())
    }

    fn conjugation(&self) -> GaloisElement {
        let mut g = self.identity();
        for &i in &self.conjugation_word {
            g = self.generator(i).compose(&g);
        }
        g.label = "ρ".into();
        g
    }

    fn identity(&self) -> GaloisElement {
        GaloisElement::from_images(self, (0..self.dim()).map(|i| self.basis_element(i).coeffs).collect(), "1".into())
    }

    fn sqrt_d_prime(&self) -> Option<FieldElement> {
        match &self.case {
            TowerCase::CyclicQuartic { d, .. } => {
                let c = rational_sqrt(&(self.d_prime.as_ref()? / &d.0))?;
                Some(self.basis_element(1).scale(&c))
            }
            TowerCase::NonGaloisQuarticClosure { .. } => Some(self.basis_element(2)),
            _ => None,
        }
    }
}

/// An element of a tower, as coordinates in its published basis.
#[derive(Clone)]
pub struct FieldElement {
    tower: Arc<TowerSpec>,
    coeffs: Vec<Rational>,
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_tower(other) && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, b) in self.coeffs.iter().zip(&self.tower.basis) {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if b == "1" {
                write!(f, "{}", format_rational(c))?;
            } else if c.is_one() {
                f.write_str(b)?;
            } else {
                write!(f, "({})·{}", format_rational(c), b)?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<RationalStr> = self.coeffs.iter().cloned().map(RationalStr).collect();
        v.serialize(s)
    }
}

impl FieldElement {
    fn new(tower: &Arc<TowerSpec>, coeffs: Vec<Rational>) -> Self {
        FieldElement {
            tower: tower.clone(),
            coeffs,
        }
    }

    pub fn zero(tower: &Arc<TowerSpec>) -> Self {
        Self::new(tower, vec![Rational::zero(); tower.dim()])
    }

    pub fn one(tower: &Arc<TowerSpec>) -> Self {
        let mut v = vec![Rational::zero(); tower.dim()];
        v[0] = Rational::one();
        Self::new(tower, v)
    }

    pub fn tower(&self) -> &Arc<TowerSpec> {
        &self.tower
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn same_tower(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.tower, &other.tower) || *self.tower == *other.tower
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// `Some(q)` when the element is the rational `q`.
    pub fn as_rational(&self) -> Option<Rational> {
        self.coeffs[1..].iter().all(Zero::is_zero).then(|| self.coeffs[0].clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert!(self.same_tower(o));
        Self::new(&self.tower, self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert!(self.same_tower(o));
        Self::new(&self.tower, self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(&self.tower, self.coeffs.iter().map(|a| -a).collect())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self::new(&self.tower, self.coeffs.iter().map(|a| a * q).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert!(self.same_tower(o));
        let n = self.tower.dim();
        let it = &self.tower.int_table;
        let (a, da) = common_denominator(&self.coeffs);
        let (b, db) = common_denominator(&o.coeffs);
        let mut out = vec![BigInt::zero(); n];
        for (i, a) in a.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in b.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a * b;
                for (k, t) in &it.table[i][j] {
                    out[*k] += &ab * t;
                }
            }
        }
        let den = da * db * &it.den;
        Self::new(&self.tower, out.into_iter().map(|x| Rational::new(x, den.clone())).collect())
    }

    /// Matrix of multiplication by `self`: row i is `self · b_i`.
    pub fn mul_matrix(&self) -> Matrix<Rational> {
        let rows = (0..self.tower.dim())
            .map(|i| self.mul(&self.tower.basis_element(i)).coeffs)
            .collect();
        Matrix::from_rows(rows)
    }

    pub fn inv(&self) -> Result<Self, FieldOpError> {
        if self.is_zero() {
            return Err(FieldOpError::DivisionByZero);
        }
        let t = &self.tower;
        if !t.conjugates.is_empty() {
            let mut prod = FieldElement::one(t);
            for g in &t.conjugates {
                prod = prod.mul(&Self::new(t, g.apply(&self.coeffs)));
            }
            let norm = self.mul(&prod);
            debug_assert!(norm.as_rational().is_some(), "norm must be rational");
            return Ok(prod.scale(&norm.coeffs[0].recip()));
        }
        // y · L = 1 where row i of L is self·b_i.
        let one = FieldElement::one(&self.tower);
        let y = self
            .mul_matrix()
            .solve_left(&one.coeffs)
            .expect("nonzero element of a field is invertible");
        Ok(Self::new(&self.tower, y))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = FieldElement::one(&self.tower);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }
}

impl Scalar for FieldElement {
    fn zero_like(&self) -> Self {
        FieldElement::zero(&self.tower)
    }
    fn one_like(&self) -> Self {
        FieldElement::one(&self.tower)
    }
    fn is_zero_elt(&self) -> bool {
        self.is_zero()
    }
    fn add_elt(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn sub_elt(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn mul_elt(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn neg_elt(&self) -> Self {
        self.neg()
    }
    fn inv_elt(&self) -> Self {
        self.inv().expect("pivot is nonzero")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Mul,
    Inv,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldOpResult {
    Element(FieldElement),
    Bool(bool),
}

/// Checked arithmetic entry point; `g`, when given, is applied to the result.
pub fn field_ops(
    x: &FieldElement,
    y: Option<&FieldElement>,
    op: FieldOp,
    g: Option<&GaloisElement>,
) -> Result<FieldOpResult, FieldOpError> {
    let other = || -> Result<&FieldElement, FieldOpError> {
        let y = y.ok_or(FieldOpError::TowerMismatch)?;
        if x.same_tower(y) {
            Ok(y)
        } else {
            Err(FieldOpError::TowerMismatch)
        }
    };
    if let Some(g) = g {
        if *g.tower != *x.tower {
            return Err(FieldOpError::TowerMismatch);
        }
    }
    let value = match op {
        FieldOp::Add => x.add(other()?),
        FieldOp::Mul => x.mul(other()?),
        FieldOp::Inv => x.inv()?,
        FieldOp::Eq => return Ok(FieldOpResult::Bool(x == other()?)),
    };
    Ok(FieldOpResult::Element(match g {
        Some(g) => g.apply(&value),
        None => value,
    }))
}

/// Degree of `x` over ℚ: the first power that is a rational combination of
/// the lower ones.
pub fn min_poly_degree(x: &FieldElement) -> usize {
    let mut powers = vec![FieldElement::one(&x.tower).coeffs];
    let mut cur = FieldElement::one(&x.tower);
    loop {
        cur = cur.mul(x);
        powers.push(cur.coeffs.clone());
        if Matrix::from_rows(powers.clone()).rank() < powers.len() {
            return powers.len() - 1;
        }
    }
}

/// A ℚ-linear automorphism of a tower, stored as the images of the basis.
#[derive(Clone)]
pub struct GaloisElement {
    tower: Arc<TowerSpec>,
    images: Vec<Vec<Rational>>,
    int: Arc<IntMap>,
    label: String,
}

impl PartialEq for GaloisElement {
    fn eq(&self, other: &Self) -> bool {
        *self.tower == *other.tower && self.images == other.images
    }
}

impl fmt::Debug for GaloisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GaloisElement({})", self.label)
    }
}

impl GaloisElement {
    fn from_images(tower: &Arc<TowerSpec>, images: Vec<Vec<Rational>>, label: String) -> Self {
        GaloisElement {
            tower: tower.clone(),
            int: Arc::new(IntMap::new(&images)),
            images,
            label,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn tower(&self) -> &Arc<TowerSpec> {
        &self.tower
    }

    pub fn apply(&self, x: &FieldElement) -> FieldElement {
        FieldElement::new(&self.tower, self.int.apply(&x.coeffs))
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &GaloisElement) -> GaloisElement {
        GaloisElement::from_images(
            &self.tower,
            compose_images(&self.images, &other.images),
            format!("{}∘{}", self.label, other.label),
        )
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(j, img)| img.iter().enumerate().all(|(k, v)| if j == k { v.is_one() } else { v.is_zero() }))
    }

    /// Action matrix (column j = image of basis element j).
    pub fn matrix(&self) -> Matrix<Rational> {
        Matrix::from_rows(self.images.clone()).transpose()
    }

    /// Exhaustive check that the map is multiplicative on basis pairs and
    /// bijective.
    pub fn is_ring_automorphism(&self) -> bool {
        let n = self.tower.dim();
        for i in 0..n {
            for j in 0..n {
                let bi = self.tower.basis_element(i);
                let bj = self.tower.basis_element(j);
                if self.apply(&bi.mul(&bj)) != self.apply(&bi).mul(&self.apply(&bj)) {
                    return false;
                }
            }
        }
        self.apply(&FieldElement::one(&self.tower)) == FieldElement::one(&self.tower)
            && self.matrix().rank() == n
    }

    /// Image of each basis monomial as `(sign, monomial index)` when the map
    /// permutes signed monomials; `None` otherwise.
    pub fn signed_monomial_action(&self) -> Option<Vec<(i8, usize)>> {
        self.images
            .iter()
            .map(|img| {
                let nz: Vec<usize> = (0..img.len()).filter(|&k| !img[k].is_zero()).collect();
                match nz.as_slice() {
                    [k] if img[*k].is_one() => Some((1, *k)),
                    [k] if (-&img[*k]).is_one() => Some((-1, *k)),
                    _ => None,
                }
            })
            .collect()
    }

    /// Basis images rendered as field elements, for reports.
    pub fn image_table(&self) -> Vec<(String, FieldElement)> {
        self.tower
            .basis
            .iter()
            .zip(&self.images)
            .map(|(b, img)| (b.clone(), FieldElement::new(&self.tower, img.clone())))
            .collect()
    }
}

/// Renders a word of generator indices with repeated letters collapsed into
/// powers, e.g. `σ₀²∘σ₃`.
pub fn render_word(names: &[&str], word: &[usize]) -> String {
    if word.is_empty() {
        return "1".into();
    }
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < word.len() {
        let mut j = i;
        while j < word.len() && word[j] == word[i] {
            j += 1;
        }
        let k = j - i;
        let name = names[word[i]];
        parts.push(if k == 1 { name.to_string() } else { format!("{name}{}", superscript(k)) });
        i = j;
    }
    parts.join("∘")
}

fn superscript(k: usize) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    k.to_string()
        .chars()
        .map(|c| DIGITS[c.to_digit(10).unwrap() as usize])
        .collect()
}

/// All automorphisms of the tower, generated from the named generators by
/// breadth-first composition. Element 0 is the identity; labels are shortest
/// words (ties broken by generator order).
pub fn automorphism_group(tower: &Arc<TowerSpec>) -> Vec<GaloisElement> {
    let names = tower.generator_names();
    let gens: Vec<GaloisElement> = (0..names.len()).map(|i| tower.generator(i)).collect();
    let mut elements = vec![tower.identity()];
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &e in &frontier {
            for (gi, g) in gens.iter().enumerate() {
                let h = g.compose(&elements[e]);
                if !elements.contains(&h) {
                    let mut w = vec![gi];
                    w.extend(&words[e]);
                    words.push(w);
                    elements.push(h);
                    next.push(elements.len() - 1);
                }
            }
        }
        frontier = next;
    }
    elements
        .into_iter()
        .zip(words)
        .map(|(g, w)| g.with_label(render_word(&names, &w)))
        .collect()
}
