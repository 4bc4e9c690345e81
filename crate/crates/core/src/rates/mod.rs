//! Downlink ergodic rates from the BS-side CSI statistics.
//!
//! Rates are per subcarrier and per user, in bits/s/Hz. The UatF lower
//! bound is closed-form under MRT and needs two Monte-Carlo moments under
//! ZF; the upper bound is Monte-Carlo for both precoders.

mod bound;
mod stats;
mod uatf;

pub use bound::{average_sum_rate, rate_upper_bound, subcarrier_weights, Precoder};
pub use stats::{extract_subcarrier_blocks, SubcarrierStats, UserBlock};
pub use uatf::{
    mrt_power_scale, uatf_mrt, uatf_zf, zf_moments, UserRates, ZfMoments, ZF_MAX_CONDITION,
    ZF_MAX_REJECTED_FRACTION,
};
