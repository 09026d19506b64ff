//! Finite-group machinery for CM Hodge structures: Im(N,2), Dodson triples,
//! admissible-subgroup enumeration, conjugacy classification and reflex data.

pub mod enumerate;
pub mod groups;
pub mod imn2;
pub mod partition;
pub mod presets;
pub mod reflex;
pub mod triple;

pub use enumerate::{classify_conjugacy, enumerate_admissible, ClassificationReport, SubgroupClass};
pub use imn2::{ImN2, ImN2Element};
pub use partition::{HodgePartition, PartitionPreset};
pub use presets::{weight1_presets, Preset, PresetReport};
pub use reflex::{reflex_from_dodson, AbstractCMType, ReflexReport};
pub use triple::{group_from_triple, triple_from_group, DodsonTriple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DodsonError {
    #[error("invalid triple ({condition}): {detail}")]
    InvalidTriple { condition: String, detail: String },
    #[error("not admissible ({condition}): {detail}")]
    NotAdmissible { condition: String, detail: String },
    #[error("N = {n} exceeds the enumeration bound {bound}")]
    BoundExceeded { n: usize, bound: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid CM type: {0}")]
    InvalidCMType(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl DodsonError {
    /// Name of the violated condition, for diagnostics.
    pub fn condition(&self) -> String {
        match self {
            DodsonError::InvalidTriple { condition, .. } | DodsonError::NotAdmissible { condition, .. } => {
                condition.clone()
            }
            DodsonError::BoundExceeded { .. } => "enumeration-bound".into(),
            DodsonError::InvalidPartition(_) => "partition".into(),
            DodsonError::InvalidCMType(_) => "cm-type".into(),
            DodsonError::Malformed(_) => "malformed-input".into(),
        }
    }
}
