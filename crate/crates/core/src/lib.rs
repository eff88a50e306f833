//! Exact evaluation of the permutation-twisted q-adic measures `mu_{d,r}`, their
//! distribution functions `L_{d,r}`, generalized Takagi functions and the
//! parametric derivatives of `L_r`.
//!
//! Every quantity is an exact rational evaluated at base-q rationals `m / q^K`.

pub mod config;
pub mod derivs;
pub mod error;
pub mod measure;
pub mod poly;
pub mod qadic;
pub mod rational;
pub mod stepfn;
pub mod takagi;
pub mod verify;

pub use config::{permuted_weights, sigma_power, validate_config, SystemConfig, WeightVec};
pub use error::{Error, Result};
pub use measure::{
    cdf, cond_expect, expectation, integrate_step, interval_measure, lebesgue_level1_integral,
    MeasureContext,
};
pub use qadic::{locate, phi_apply, MultiIndex, QAdicInterval, QAdicPoint};
pub use rational::Rat;
pub use stepfn::{base_diff, compose_phi, phi_l, step_combine, w_fn, z_fn, Combine, StepFunction};
