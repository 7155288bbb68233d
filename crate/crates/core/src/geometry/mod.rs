//! Regions, convex hulls and sample nets.

pub mod hull;
pub mod net;
pub mod point;
pub mod region;

pub use hull::ConvexHull;
pub use net::{
    build_net, read_points_csv, validate_net, write_points_csv, DomainTag, NetMeta, NetOptions,
    SampleNet, ValidationReport, DEFAULT_PROBES, DEFAULT_SEED,
};
pub use point::{BoundingBox, Point};
pub use region::{parse_region, Region, RegionDoc, Shape};
