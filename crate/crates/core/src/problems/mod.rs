//! Target posteriors for the experiments: GMM denoising, the
//! one-dimensional test distributions and TV-regularised deconvolution.

pub mod deconv;
pub mod gmm;
mod onedim;
pub mod pgm;

pub use deconv::{
    deconv_adjoint, deconv_apply, phantom, BlurOperator, DeconvModel, GaussianLikelihood, Kernel, Likelihood,
    NoiseModel, PoissonLikelihood,
};
pub use gmm::{gmm_posterior_params, GmmModel, GmmParams, PixelPosterior, Weighting};
pub use onedim::{onedim_target, OneDimKind};
pub use pgm::{read_pgm, write_pgm, GrayImage};
