//! Run configuration, CSV time series and binary checkpoints.

mod checkpoint;
mod config;
mod timeseries;

pub use checkpoint::{
    canonicalize_velocity, canonicalize_vorticity, read_checkpoint, velocity_from_checkpoint,
    vorticity_from_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_HEADER_LEN,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{parse_config, InitialCondition, RunConfig, TrackedField};
pub use timeseries::{read_timeseries, write_timeseries, TimeSeriesWriter, TIMESERIES_HEADER};
