//! Dense layer primitives with explicit forward/backward passes.

pub mod activation;
pub mod batchnorm;
pub mod dropout;
pub mod init;
pub mod linear;
pub mod loss;
pub mod param;

pub use activation::{sigmoid, silu, silu_derivative};
pub use batchnorm::{BatchNorm, BatchNormCache};
pub use dropout::{Dropout, DropoutMask};
pub use init::{init_params, InitScheme};
pub use linear::Linear;
pub use loss::{bce_loss, bce_with_logits, PROB_EPS};
pub use param::{Param, Parameters};
