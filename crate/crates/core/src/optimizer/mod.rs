//! Differential-evolution optimiser and protograph ensemble search.

pub mod ensemble;
pub mod evolution;

pub use ensemble::{
    optimize_ensemble, optimize_ensemble_resumable, Candidate, EnsembleResult, EnsembleSearch, EnsembleTarget,
};
pub use evolution::{
    de_generation, make_trials, project_simplex, Checkpoint, Evolution, EvolutionParams, GeneLayout, Individual,
    Segment, CHECKPOINT_VERSION, IDLE_LIMIT,
};
