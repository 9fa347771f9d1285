//! The purely diffusive case c = 0: drift of the boundary value, similarity
//! variables τ = −log(−t), ξ = x/√(−t), the stationary profile and the
//! spectrum of its linearization.

mod drift;
mod flow;
mod profile;
mod rate;
mod spectrum;

pub use drift::{drift_experiment, DriftConfig, DriftReport};
pub use flow::{discrete_fixed_point, similarity_evolve, SimilarityConfig, SimilarityRun, SimilarityState};
pub use profile::{unscaled_erfc_profile, similarity_stationary_profile, v_star, StationaryProfile};
pub use rate::{rate_fit_linear_zero, RateFit, RateFitConfig};
pub use spectrum::{
    richardson, similarity_spectrum, unstable_eigenfunction, BoundaryCoefficient, LadderLevel, SpectrumReport,
};
