//! Split-sum environment-lit rendering and photometric-stereo inversion.
//!
//! The crate has two halves that share one image-formation model:
//!
//! * **Forward**: a software rasterizer ([`raster`]) produces per-pixel
//!   geometry buffers for a triangle mesh, and [`shade`] lights them with
//!   the split-sum approximation over a prefiltered environment map
//!   ([`envlight`]) using a metallic/roughness microfacet BRDF ([`brdf`]).
//!   A Monte Carlo reference integrator ([`mcref`]) evaluates the exact
//!   rendering equation for validation.
//! * **Inverse**: [`photostereo`] recovers per-pixel surface normals and
//!   albedo from stacks of observations under known cameras, materials and
//!   lighting — classical Lambertian photometric stereo and a damped
//!   Gauss-Newton solver for the split-sum observation model.
//!
//! [`sampler`] generates datasets of rendered views under a randomized
//! material/lighting/camera policy, [`metrics`] scores images and meshes,
//! and the `splitshade` binary exposes the pipeline as CLI subcommands.
//!
//! The narrative guide lives in `book/`; its code snippets compile and run
//! as doctests of this crate.

pub mod brdf;
pub mod envlight;
pub mod error;
pub mod imageio;
pub mod mcref;
pub mod metrics;
pub mod photostereo;
pub mod raster;
pub mod rng;
pub mod sampler;
pub mod scene;
pub mod shade;

pub mod cli;

pub use error::{Error, Result};

/// 3-component f64 vector used for points, directions and linear RGB.
pub type Vec3 = nalgebra::Vector3<f64>;

#[cfg(doctest)]
mod book;
