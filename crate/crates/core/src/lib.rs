//! Navigation engine for painting on a marker-registered board.
//!
//! [`geometry`] maps camera pixels onto the canonical board, [`tipdetect`]
//! finds the brush tip on its silhouette, [`grid`] names the board's blocks,
//! [`guidance`] turns tip positions into voice cues and [`metrics`] scores
//! trajectories and paint. [`sim`] closes the loop with a simulated painter;
//! [`io`] holds the record format, replay and the live server.

pub mod geometry;
pub mod grid;
pub mod guidance;
pub mod io;
pub mod metrics;
pub mod sim;
pub mod tipdetect;

pub use geometry::{
    homography_between, homography_unit_square, register_board, BoardRegistration, CanonicalSize, Direction,
    GeometryError, Homography, MarkerDetection, Point2, DEFAULT_CANONICAL_SIZE,
};
pub use grid::{arrival_check, cell_to_code, code_to_cell, Cell, CellCode, GridError, GridSpec, Rect, ReferenceArea};
pub use guidance::{next_cue, parse_command, Cue, CueKind, GuidanceError, GuidanceState, Phase, PromptPolicy};
pub use io::{Frame, LoadedRecord, RecordError, SessionRecord, SessionStatus, TargetOutcome};
pub use metrics::{
    fill_metrics, heatmap, relative_movement_distance, timing_stats, FillMetrics, FillThresholds, Heatmap,
    MetricsError, PaintMask, Sample, TimingStats, TrajectoryClass, TrajectoryMetrics,
};
pub use sim::{run_session, AgentModel, ConfigError, Session, SessionConfig};
pub use tipdetect::{
    curvature_profile, tip_center, tip_index, CurvatureProfile, DetectorNoiseModel, EdgeChain, TipDetection, TipError,
};
