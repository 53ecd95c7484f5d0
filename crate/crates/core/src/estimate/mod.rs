//! Gradient estimators, the moment-matching objective, Adam, and the
//! finite-difference oracle.

mod adam;
mod fdcheck;
mod grad;
mod objective;

pub use adam::Adam;
pub use fdcheck::{fd_check, fd_gradient, fd_jacobian, fd_step, max_relative_error, FD_FLOOR};
pub use grad::{
    gs_reparam_estimate, moment_match_grad, moment_match_loss, reparam_estimate, reparam_grad, score_grad,
    score_grad_quad, Estimate, ParamGrad,
};
pub use objective::{objective_gradient, Constant, FnObjective, Linear, Quadratic, SquaredDistance, TestObjective};
