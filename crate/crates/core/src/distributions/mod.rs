//! The IGR family, the Gumbel-Softmax baseline and diagonal-Gaussian utilities.

mod gaussian;
mod gumbel;
mod igr;

pub use gaussian::GaussianDiag;
pub use gumbel::{gs_log_density, gs_sample, gs_sample_log, gumbel_noise, GsParams};
pub use igr::{igr_kl_closed, igr_kl_mc, igr_log_density, igr_log_density_trace, igr_sample, IgrParams, SampleTrace};
