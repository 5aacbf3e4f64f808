//! Liquid surface and phase boundary detection in images of axisymmetric
//! transparent vessels.
//!
//! The vessel interior is given. Every horizontal line and half-ellipse that
//! could be the outline of a liquid surface is scored against the image, and
//! the curves scoring close to the best one are accepted.

pub mod canny;
pub mod config;
pub mod detector;
pub mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod par;
pub mod scan;
pub mod scoring;
pub mod select;
pub mod sobel;
pub mod synth;
pub mod vessel;

pub use config::{DetectorConfig, Preset};
pub use detector::{annotate, DetectionReport, Detector, ScoredImage, SCHEMA_VERSION};
pub use error::{Error, Result};
pub use image::{EdgeMap, GradientField, GrayImage, RgbImage};
pub use par::Execution;
pub use scan::{CandidateCurve, Half, ScanParams};
pub use scoring::{Indicator, ScoredCurve};
pub use select::{DetectedCurve, SelectionParams};
pub use vessel::VesselRegion;
