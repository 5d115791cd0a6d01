pub mod bf;
pub mod seminorm;
pub mod weight;

pub use bf::{
    bf_norm, block_norm, projection_factorized, projection_norm, young_check, BfSpec, Exponent, Layout, NormKind,
    PhaseAccumulator, Selection, YoungReport,
};
pub use seminorm::{cone_seminorm, decide, fb_seminorm, lsq_slope, DecayOptions, SeminormResult};
pub use weight::{lattice_probes_1d, moderation_check, ClassTag, PhasePoint, Weight, WeightFamily};
