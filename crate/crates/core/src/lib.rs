//! Exact computations for weak CM Hodge structures: number-field towers,
//! Dodson triples, period-matrix splittings and combinatorial products.

pub mod cmfield;
pub mod dodson;
pub mod hodgeprod;
pub mod linalg;
pub mod perm;
pub mod rational;
pub mod tausplit;
pub mod tower;
