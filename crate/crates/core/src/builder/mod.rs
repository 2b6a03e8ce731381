//! Offline cut-object database construction: pose interpolation, tracklet
//! association, multi-scan accumulation, colored ICP + pose-graph
//! registration, outlier/ground removal, surface reconstruction and
//! metadata extraction.
//!
//! Per-object builds are independent; each build is internally sequential.

pub mod accumulate;
pub mod cut_object;
pub mod database;
pub mod filters;
pub mod icp;
pub mod normals;
pub mod pose_graph;
pub mod pose_track;
pub mod reconstruct;
pub mod tracklets;

pub use accumulate::{accumulate_object, FrameScan, ObjectScan};
pub use cut_object::{build_cut_object, BuildParams, CutObject, SequenceData, SequenceFrame};
pub use database::{load_database, validate_database, write_database, CutObjectDb, Manifest};
pub use filters::{ransac_plane, remove_outliers, Plane};
pub use icp::{colored_icp, IcpParams, IcpResult, ScanCloud};
pub use pose_graph::{optimize_pose_graph, PoseGraph, PoseGraphEdge};
pub use pose_track::{interpolate_pose, StampedPose};
pub use tracklets::{assignment_cost, build_tracklets, hungarian, BoxDescriptor, Tracklet};

#[derive(Debug, thiserror::Error)]
pub enum BuilderError {
    #[error("timestamp outside the pose track range")]
    TimestampOutOfRange,
    #[error("pose track needs at least one stamped pose")]
    EmptyTrack,
    #[error("pose track timestamps must be strictly increasing")]
    NonMonotonicTrack,
    #[error("rigid tracklet needs >= 2 observations (single-scan path is for deformable classes)")]
    RigidTrackTooShort,
    #[error("object crop produced no points")]
    EmptyCrop,
    #[error("too few points for reconstruction: have {have}, need {need}")]
    TooFewPoints { have: usize, need: usize },
    #[error("degenerate input (collinear points)")]
    DegenerateInput,
    #[error("pose graph is disconnected: components {0:?}")]
    DisconnectedGraph(Vec<Vec<usize>>),
    #[error("pose graph edge references an invalid node")]
    BadEdge,
    #[error("no unoccluded source observation")]
    NoUnoccludedSource,
    #[error("missing instance mask for the source observation")]
    MissingMask,
    #[error("source box projects behind the camera")]
    SourceBoxBehindCamera,
    #[error("mesh silhouette covers only {coverage:.3} of the eroded mask")]
    SilhouetteGap { coverage: f64 },
    #[error("reconstruction failed: {0}")]
    Reconstruction(&'static str),
    #[error("registration failed: {0}")]
    Registration(String),
    #[error("intensity interpolant: {0}")]
    Intensity(String),
    #[error("database io: {0}")]
    Io(#[from] std::io::Error),
    #[error("database format: {0}")]
    Database(String),
}
