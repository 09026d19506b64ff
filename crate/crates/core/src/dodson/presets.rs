//! The thirteen weight-1 configurations for N = 3: six simple CM fields,
//! four sums of a quartic and a quadratic field, and three sums of quadratic
//! fields.

use serde::Serialize;

use super::imn2::{act_bits, all_ones, unit, Bits, ImN2, ImN2Element};
use super::reflex::{reflex_from_dodson, AbstractCMType, ReflexReport};
use super::triple::DodsonTriple;
use super::DodsonError;
use crate::perm::{self, Perm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Simple,
    QuarticPlusQuadratic,
    ThreeQuadratics,
}

#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub id: &'static str,
    pub label: &'static str,
    pub kind: PresetKind,
    pub cm_type: AbstractCMType,
}

fn z3() -> Vec<Perm> {
    vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]
}

fn simple(g0: Vec<Perm>, full_v: bool, coboundary: bool) -> AbstractCMType {
    let n = 3;
    let v: Vec<Bits> = if full_v { (0..8).collect() } else { vec![0, all_ones(n)] };
    let e1 = unit(n, 0);
    let s = g0
        .iter()
        .map(|g| (g.clone(), if coboundary { act_bits(g, e1) ^ e1 } else { 0 }))
        .collect();
    let t = DodsonTriple { n, g0, v, s }.normalized();
    AbstractCMType::new(t.elements(), None)
}

/// `H × ℤ₂`: an N = 2 group on slots 1, 2 and an independent sign on slot 3.
fn with_free_third(h: &[ImN2Element]) -> Vec<ImN2Element> {
    h.iter()
        .flat_map(|e| {
            (0..2u16).map(move |b| {
                let mut p = e.perm.clone();
                p.push(2);
                ImN2Element::new(e.bits << 1 | b, p)
            })
        })
        .collect()
}

/// Fiber product: slot 3 is flipped exactly when the element sends φ₂ to a
/// barred slot, i.e. the quadratic field is identified with a subfield of the
/// quartic one.
fn with_tied_third(h: &[ImN2Element]) -> Vec<ImN2Element> {
    h.iter()
        .map(|e| {
            let (_, sign) = e.apply_slot(1, 0);
            let mut p = e.perm.clone();
            p.push(2);
            ImN2Element::new(e.bits << 1 | sign as u16, p)
        })
        .collect()
}

fn im22_subgroup(elems: &[(&str, [u8; 2])]) -> Vec<ImN2Element> {
    elems
        .iter()
        .map(|(b, p)| ImN2Element::new(super::imn2::parse_bits(b).unwrap(), p.to_vec()))
        .collect()
}

fn bits_only(words: &[Bits]) -> Vec<ImN2Element> {
    words.iter().map(|&b| ImN2Element::new(b, perm::identity(3))).collect()
}

pub fn weight1_presets() -> Vec<Preset> {
    let s3 = perm::all_perms(3);
    let case_a = im22_subgroup(&[("00", [0, 1]), ("11", [0, 1]), ("00", [1, 0]), ("11", [1, 0])]);
    let case_b = im22_subgroup(&[("00", [0, 1]), ("11", [0, 1]), ("10", [1, 0]), ("01", [1, 0])]);
    let case_c = ImN2::new(2).elements().to_vec();
    let pair_blocks = Some(vec![vec![0, 1], vec![2]]);
    let single_blocks = Some(vec![vec![0], vec![1], vec![2]]);
    let p = |id, label, kind, cm_type| Preset { id, label, kind, cm_type };
    use PresetKind::*;
    vec![
        p("z3-1-triv", "(ℤ₃,1,triv.)", Simple, simple(z3(), false, false)),
        p("z3-1-de1", "(ℤ₃,1,dε1)", Simple, simple(z3(), false, true)),
        p("s3-1-triv", "(S₃,1,triv.)", Simple, simple(s3.clone(), false, false)),
        p("s3-1-de1", "(S₃,1,dε1)", Simple, simple(s3.clone(), false, true)),
        p("z3-3-triv", "(ℤ₃,3,triv.)", Simple, simple(z3(), true, false)),
        p("s3-3-triv", "(S₃,3,triv.)", Simple, simple(s3, true, false)),
        p("B", "(B)", QuarticPlusQuadratic, AbstractCMType::new(with_free_third(&case_b), pair_blocks.clone())),
        p("C", "(C)", QuarticPlusQuadratic, AbstractCMType::new(with_free_third(&case_c), pair_blocks.clone())),
        p(
            "A.noniso",
            "(A.noniso)",
            QuarticPlusQuadratic,
            AbstractCMType::new(with_free_third(&case_a), pair_blocks.clone()),
        ),
        p("A.iso", "(A.iso)", QuarticPlusQuadratic, AbstractCMType::new(with_tied_third(&case_a), pair_blocks)),
        p("i", "(i)", ThreeQuadratics, AbstractCMType::new(bits_only(&[0, 0b111]), single_blocks.clone())),
        p(
            "ii",
            "(ii)",
            ThreeQuadratics,
            AbstractCMType::new(bits_only(&[0, 0b110, 0b001, 0b111]), single_blocks.clone()),
        ),
        p("iii", "(iii)", ThreeQuadratics, AbstractCMType::new(bits_only(&(0..8).collect::<Vec<_>>()), single_blocks)),
    ]
}

/// Cross-check between the computed degree and the two ways the degree of
/// the three-quadratics case can be stated (`n′ = 4` and `2n′ = 8`).
#[derive(Debug, Clone, Serialize)]
pub struct DegreeCheck {
    pub stated_n_prime: usize,
    pub stated_reflex_degree: usize,
    pub computed_n_prime: usize,
    pub computed_reflex_degree: usize,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PresetReport {
    pub id: String,
    pub label: String,
    pub kind: PresetKind,
    pub order: usize,
    pub triple: DodsonTriple,
    pub reflex: ReflexReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_check: Option<DegreeCheck>,
}

pub fn preset_report(p: &Preset) -> Result<PresetReport, DodsonError> {
    let triple = p.cm_type.triple()?;
    let reflex = reflex_from_dodson(&p.cm_type, p.cm_type.n)?;
    let degree_check = (p.id == "iii").then(|| DegreeCheck {
        stated_n_prime: 4,
        stated_reflex_degree: 8,
        computed_n_prime: reflex.n_prime,
        computed_reflex_degree: reflex.reflex_degree,
        consistent: reflex.n_prime == 4 && reflex.reflex_degree == 8,
    });
    Ok(PresetReport {
        id: p.id.into(),
        label: p.label.into(),
        kind: p.kind,
        order: p.cm_type.group.len(),
        triple,
        reflex,
        degree_check,
    })
}

pub fn preset_reports() -> Result<Vec<PresetReport>, DodsonError> {
    weight1_presets().iter().map(preset_report).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirteen_valid_presets() {
        let ps = weight1_presets();
        assert_eq!(ps.len(), 13);
        for p in &ps {
            p.cm_type.triple().unwrap_or_else(|e| panic!("{}: {e}", p.id));
            let set: std::collections::BTreeSet<_> = p.cm_type.group.iter().collect();
            for a in &p.cm_type.group {
                for b in &p.cm_type.group {
                    assert!(set.contains(&a.mul(b)), "{} not closed", p.id);
                }
            }
        }
    }

    #[test]
    fn preset_orders() {
        let orders: Vec<usize> = weight1_presets().iter().map(|p| p.cm_type.group.len()).collect();
        assert_eq!(orders, vec![6, 6, 12, 12, 24, 48, 8, 16, 8, 4, 2, 4, 8]);
    }
}
