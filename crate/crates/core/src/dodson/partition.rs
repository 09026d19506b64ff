//! Hodge-type partitions of the signed slots and their stabilizers S̃.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::imn2::{ImN2, ImN2Element};
use super::DodsonError;

/// Hodge label of every signed slot: `labels[i][s]` for slot `i`, sign `s`
/// (`0` = φᵢ, `1` = φ̄ᵢ).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HodgePartition {
    pub n: usize,
    pub name: String,
    pub labels: Vec<[(u32, u32); 2]>,
}

/// One block of an explicit partition; slots are `+i` for φᵢ and `-i` for φ̄ᵢ
/// (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionBlock {
    pub p: u32,
    pub q: u32,
    pub slots: Vec<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionPreset {
    Abl,
    K3,
    Cy3,
}

impl std::str::FromStr for PartitionPreset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "abl" => Ok(PartitionPreset::Abl),
            "k3" => Ok(PartitionPreset::K3),
            "cy3" => Ok(PartitionPreset::Cy3),
            _ => Err(format!("unknown partition preset {s:?} (expected abl, k3 or cy3)")),
        }
    }
}

impl HodgePartition {
    pub fn preset(preset: PartitionPreset, n: usize) -> Self {
        let (name, top, rest): (&str, (u32, u32), (u32, u32)) = match preset {
            PartitionPreset::Abl => ("abl", (1, 0), (1, 0)),
            PartitionPreset::K3 => ("k3", (2, 0), (1, 1)),
            PartitionPreset::Cy3 => ("cy3", (3, 0), (2, 1)),
        };
        let labels = (0..n)
            .map(|i| {
                let (p, q) = if i == 0 { top } else { rest };
                [(p, q), (q, p)]
            })
            .collect();
        HodgePartition {
            n,
            name: name.into(),
            labels,
        }
    }

    /// Labels given per pair, unbarred member first; the barred member gets
    /// the swapped label.
    pub fn from_pair_labels(name: &str, labels: &[(u32, u32)]) -> Self {
        HodgePartition {
            n: labels.len(),
            name: name.into(),
            labels: labels.iter().map(|&(p, q)| [(p, q), (q, p)]).collect(),
        }
    }

    pub fn from_blocks(n: usize, blocks: &[PartitionBlock]) -> Result<Self, DodsonError> {
        let bad = |m: String| DodsonError::InvalidPartition(m);
        let mut labels: Vec<[Option<(u32, u32)>; 2]> = vec![[None, None]; n];
        for b in blocks {
            for &s in &b.slots {
                let i = s.unsigned_abs() as usize;
                if i == 0 || i > n {
                    return Err(bad(format!("slot {s} out of range for N = {n}")));
                }
                let sign = usize::from(s < 0);
                if labels[i - 1][sign].replace((b.p, b.q)).is_some() {
                    return Err(bad(format!("slot {s} appears in two blocks")));
                }
            }
        }
        let mut out = Vec::with_capacity(n);
        for (i, l) in labels.into_iter().enumerate() {
            match l {
                [Some(a), Some(b)] if a == (b.1, b.0) => out.push([a, b]),
                [Some(_), Some(_)] => {
                    return Err(bad(format!("conjugation-symmetry: slots ±{} have non-conjugate labels", i + 1)))
                }
                _ => return Err(bad(format!("slot ±{} is not covered", i + 1))),
            }
        }
        Ok(HodgePartition {
            n,
            name: "explicit".into(),
            labels: out,
        })
    }

    pub fn label(&self, i: usize, s: u8) -> (u32, u32) {
        self.labels[i][s as usize]
    }

    /// Block sizes, i.e. Hodge numbers.
    pub fn hodge_numbers(&self) -> BTreeMap<(u32, u32), usize> {
        let mut m = BTreeMap::new();
        for l in &self.labels {
            for &pq in l {
                *m.entry(pq).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn preserved_by(&self, g: &ImN2Element) -> bool {
        (0..self.n).all(|i| {
            (0..2).all(|s| {
                let (j, t) = g.apply_slot(i, s);
                self.label(j, t) == self.label(i, s)
            })
        })
    }

    /// Indices (in `group`) of the elements preserving every block.
    pub fn stabilizer(&self, group: &ImN2) -> Vec<usize> {
        (0..group.order())
            .filter(|&i| self.preserved_by(group.element(i)))
            .collect()
    }

    /// Stabilizer as element list, for groups too large to tabulate.
    pub fn stabilizer_elements(&self) -> Vec<ImN2Element> {
        let n = self.n;
        let mut out = Vec::new();
        for bits in 0..(1u32 << n) {
            for p in crate::perm::all_perms(n) {
                let g = ImN2Element::new(bits as u16, p);
                if self.preserved_by(&g) {
                    out.push(g);
                }
            }
        }
        out.sort();
        out
    }
}
