//! Bayesian estimation of the joint VIX/VVIX model by Markov chain Monte
//! Carlo: a Gibbs sweep over the latent volatility path, jump indicators and
//! jump sizes, followed by conjugate and random-walk Metropolis parameter
//! updates.

pub mod collapsed;
pub mod conjugate;
pub mod init;
pub mod latent;
pub mod likelihood;
pub mod metropolis;
pub mod sweep;
pub mod types;

pub use latent::{
    sample_jump_indicator, sample_jump_sizes, sample_volatility_point, LatentContext, Move,
};
pub use likelihood::{log_complete_data, log_prior, Dynamics};
pub use sweep::{run_chain, ChainOutput, LatentSummary, PosteriorSummary, Sampler, Snapshot};
pub use types::{
    ChainConfig, GammaPrior, InvGammaPrior, LatentState, NormalPrior, Observations, PriorHyper,
    ProposalSteps,
};
