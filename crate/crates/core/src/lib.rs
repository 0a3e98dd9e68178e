//! Relighting data engine.
//!
//! Converts well-lit portraits plus sidecar files (lighting scores, subject
//! masks, depth maps, instructions) into `(degraded, instruction, ground
//! truth)` training triplets:
//!
//! 1. [`filtering`] averages per-prompt lighting scores, keeps images above
//!    the threshold and assigns seeded train/val/test splits.
//! 2. [`intrinsic`] estimates a lighting-neutral albedo with Multi-Scale
//!    Retinex on the masked subject.
//! 3. [`relight`] shades the albedo with a random hemisphere light over
//!    normals derived from depth.
//! 4. [`shadowgen`] overlays a procedural cast-shadow pattern and places the
//!    subject on neutral gray.
//! 5. [`engine`] runs all of it per image in parallel and writes the manifest.
//!
//! [`metrics`] scores predictions with SSIM and summarizes externally computed
//! metrics.

pub mod blur;
pub mod engine;
pub mod error;
pub mod filtering;
pub mod image;
pub mod intrinsic;
pub mod metrics;
pub mod relight;
pub mod rng;
pub mod shadowgen;

pub use error::{Error, Result};
pub use image::{DepthMap, ImageRgb, Mask};
