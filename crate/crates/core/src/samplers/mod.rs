//! Random variate generators and the built-in Markov chains.

mod chains;
mod lasso;
mod rng;
mod variates;

pub use chains::{ar1_chain, toy_chain, toy_marginal_step, TOY_INNOVATION_VARIANCE, TOY_RHO};
pub use lasso::{
    gaussian_log_likelihood, lasso_gibbs_step, lasso_log_likelihood, EtaRateMode, IgMeanMode, LassoChain, LassoData,
    LassoModes, LassoState, Standardization,
};
pub use rng::{NormalSource, RngStream};
pub use variates::{draw_inverse_gamma, draw_inverse_gaussian, draw_mvn_precision, PrecisionFactor};
