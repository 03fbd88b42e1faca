//! Ensemble statistics: per-sample reductions, per-trajectory accumulators,
//! moments and structure factors with trajectory-batched error bars, phase
//! classification and squeezing-spectrum assembly.

mod accumulate;
mod phase;
mod squeezing;

pub use accumulate::{
    accumulate, estimate, EnsembleAccumulator, EnsembleStats, Estimate, MomentSet, Sample,
    StructureFactor, TrajectoryAccumulator, TrajectorySummary, MOMENT_NAMES,
};
pub use phase::{classify_phase, Phase, PhaseInput, PhaseLabel, PhaseThresholds};
pub use squeezing::{assemble_squeezing, SqueezingCurves};
