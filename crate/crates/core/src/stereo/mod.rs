//! Viewing geometry, zone-of-comfort depth ranges and the trial protocol.

pub mod geometry;
pub mod protocol;

pub use geometry::{
    classify_depth, screen_disparity, vergence_angle, ComfortZoneSpec, DepthClass, DepthRange,
    ViewingGeometry,
};
pub use protocol::{generate_schedule, score_task, TaskResponse, Trial, TrialSchedule};
