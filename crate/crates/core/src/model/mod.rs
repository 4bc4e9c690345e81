//! Channel statistics, channel realizations, pilot matrices and pilot
//! observations.

mod config;
mod covariance;
mod geometry;
mod pilots;

pub use config::{comb_subcarriers, from_db, to_db, SystemConfig};
pub use covariance::{build_covariance, ChannelCovariance, Frame, FramedCov};
pub use geometry::{
    delay_vector, path_signature, sample_channel, sample_geometry, steering_vector,
    ChannelGeometry, PathParams, MAX_ANGLE,
};
pub use pilots::{build_pilot_matrix, observe_pilots, PilotBlock, PilotMatrix};
