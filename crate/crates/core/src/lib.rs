//! Saliency-adaptive superpixel segmentation.
//!
//! The crate implements two superpixel methods sharing one localized k-means
//! core: `slic` (fixed search radius) and `dsr` (per-center radius scaled by a
//! spectral-residual density map, with density-guided seeding). Besides the
//! segmentation pipeline it provides the supporting pieces: image I/O and
//! CIELAB conversion, a 2D DFT for arbitrary field sizes, boundary
//! recall/precision and undersegmentation error metrics, and readers for
//! ground-truth region maps.
//!
//! ```no_run
//! use dsr_core::clustering::{segment, ClusteringParams, Method};
//! use dsr_core::raster::load_image;
//! use dsr_core::spectral::{compute_density, SpectralParams};
//!
//! let img = load_image("photo.png".as_ref()).unwrap();
//! let density = compute_density(&img, &SpectralParams::default()).unwrap();
//! let params = ClusteringParams::new(Method::Dsr, 400);
//! let out = segment(&img, &params, Some(&density)).unwrap();
//! println!("{} superpixels", out.labels.num_labels());
//! ```

pub mod clustering;
pub mod error;
pub mod field;
pub mod metrics;
pub mod raster;
pub mod seeding;
pub mod spectral;

pub use error::{Error, Result};
