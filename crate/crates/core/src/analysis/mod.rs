//! Diagnostics over tracker output and ground truth.

mod histogram;
mod matching;
mod metrics;
mod rca;

pub use histogram::{
    build_distance_histograms, default_edges, find_intersection_point, DistanceHistograms, DistanceMode,
    Histogram, IntersectionPoint, Population,
};
pub use matching::{match_to_gt, GtMatch, GtMatchTable, DEFAULT_IOU_MIN};
pub use metrics::{compute_idf1, compute_mota, IdF1Report, MotaReport};
pub use rca::{compute_rca, RcaBin, RcaBinning, RcaReport, DEFAULT_OCCLUSION_EDGES, DEFAULT_VISIBILITY_EDGES};
