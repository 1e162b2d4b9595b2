//! Dense numeric kernel: MLP forward/backward, Adam, softmax and a
//! finite-difference gradient checker. Everything is `f64`.

mod adam;
mod gradcheck;
mod net;
mod softmax;

pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use gradcheck::{check_flat, finite_diff_check, relative_error, GradCheckReport, FD_STEP, REL_FLOOR};
pub use net::{DenseNet, ForwardTrace, GradBundle};
pub use softmax::{softmax, softmax_logsumexp};
