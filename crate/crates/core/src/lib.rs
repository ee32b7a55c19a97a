//! Hyperspectral and panchromatic image fusion.
//!
//! A low-resolution hyperspectral cube is unmixed into endmember signatures and
//! abundances with non-negative matrix factorization. Each low-resolution pixel's
//! footprint in the panchromatic image is segmented with fuzzy C-means, and the
//! segments are matched to endmembers by comparing area fractions with abundances.
//! The result is a high-resolution cube in which every subpixel carries one
//! endmember signature.
//!
//! The stages are exposed as plain functions ([`simulate`], [`unmix`], [`segment`],
//! [`fuse`], [`metrics`]) and as file-to-file steps in [`pipeline`].

pub mod config;
pub mod error;
pub mod fuse;
pub mod io;
pub mod library;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod report;
pub mod segment;
pub mod simulate;
pub mod unmix;

pub use error::{Error, ErrorKind, Result};
pub use library::{Material, SpectralLibrary};
pub use raster::{LabelMap, PanImage, SpectralCube};
pub use report::QualityReport;
