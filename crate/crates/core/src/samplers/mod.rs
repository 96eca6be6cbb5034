//! Discretised overdamped Langevin chains: ULA/MYULA, the stochastic
//! θ-method (IMLA at θ = 1/2, ILA at θ = 1) and their reflected variants.

mod chain;
mod config;
mod inner;
mod lm;
mod step;

pub use chain::{run_chain, run_chain_with, run_chains, ChainOutput, FlaggedStep};
pub use config::{InnerSolver, SamplerConfig, StepPath};
pub use inner::{inner_solve, prox_by_minimisation, ImplicitObjective, InnerSolveReport, Objective};
pub use lm::{lm_consistency_check, record_trajectory, Trajectory};
pub use step::{reflected_step, resolve_path, theta_step, ula_step};
