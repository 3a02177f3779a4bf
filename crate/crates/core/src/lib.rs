//! Deterministic 2D radio-propagation simulator built around a
//! reconfigurable intelligent surface (RIS) modeled as a rotatable specular
//! reflector. The crate traces multipath with the image method, schedules
//! RIS angles under static / periodic / context-aware policies, and turns
//! the resulting traces into satisfaction fractions and dB statistics.

pub mod geometry;
pub mod metrics;
pub mod policy;
pub mod propagation;
pub mod scene;

pub mod cli;

pub use geometry::{Point, Ray, Segment, Vec2};
pub use metrics::{
    build_report, compare_policies, power_stats, satisfaction_fraction, MeanDomain, MetricsReport,
};
pub use policy::{
    minimal_angle_cover, probe_report, run_simulation, select_best_angles, Policy, SelectionMode,
    SimulationTrace, TimelineConfig,
};
pub use propagation::{
    coverage_grid, coverage_grid_over, path_gain_db, received_power_dbm, trace_paths,
    CoverageGrid, PropagationParams, RayPath, Summation,
};
pub use scene::{canonical_scene, load_scene, scene_to_string, AppliedScene, Scene, SceneError};
