//! Feedback and estimation pipelines.
//!
//! Every scheme starts from the user's MMSE view of its channel
//! ([`user_mmse`]) and ends in a [`SchemeOutput`]: the BS-side estimate and
//! error covariances, the MSE, and a sampler for `(h, ĥ)` pairs.

mod budget;
mod dr;
mod ljscc;
mod mmse;
mod output;
mod tkl;

pub use budget::FeedbackBudget;
pub use dr::{dr_distortion, dr_output, dr_rate, ecsq_output, DrCodec};
pub use ljscc::{draw_spreading, ljscc_build, LjsccCodec};
pub use mmse::{user_mmse, UserMmse};
pub use output::{joint_sampler, SchemeId, SchemeOutput};
pub use tkl::{tkl_build, TkCodec};
