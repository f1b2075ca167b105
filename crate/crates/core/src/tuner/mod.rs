//! Gaussian-process Bayesian optimization of cross-validated MAPE, and
//! partial-dependence export of the fitted surrogate.

mod gp;
mod nelder_mead;
mod pdp;
mod search;
mod space;

pub use gp::{fit_surrogate, matern52, suggest_next, KernelParams, SurrogateOptions, SurrogateState, EI_XI};
pub use pdp::{partial_dependence, partial_dependence_all, write_pdp_csv, PdpRow, PDP_GRID_SIZE, PDP_SAMPLES};
pub use search::{
    apply_assignment, model_config, run_search, search, SearchResult, SearchSettings, TrialOutcome, TrialRecord,
    TrialStatus,
};
pub use space::{Assignment, Dimension, DimensionKind, SearchSpace, Value};

/// Draws one assignment.
pub fn sample_space(space: &SearchSpace, rng: &mut impl rand::Rng) -> Assignment {
    space.sample(rng)
}
