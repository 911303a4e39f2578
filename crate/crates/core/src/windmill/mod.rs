//! Extended windmills grown over the truncated tree, the free-factor ledger
//! they accumulate, and the decompositions of elements they support.

mod decompose;
mod grow;
mod preimage;
mod state;
mod subtree;
mod verify;

pub use decompose::{
    chain_report, decompose, trichotomy, ChainReport, RotationDecomposition, RotationSyllable, TrichotomyCase,
    TrichotomyOutcome,
};
pub use grow::{grow, run_windmill, GrowthCase, StageRecord, StopReason, WindmillRun};
pub use preimage::{
    decomposition_checks, find_reduced_preimage, kernel_structure, preimage_structure, CertificationBounds, ReducedPreimage,
    StructureRun,
};
pub use state::{fixed_apex, init_windmill, FreeFactorLedger, LedgerEntry, WindmillConfig, WindmillState};
pub use subtree::{DistanceField, MetricSubtree};
pub use verify::verify_windmill;

#[cfg(test)]
mod tests;
