//! Cube I/O, band presets, noise injection, synthetic scenes and rasters.

pub mod bands;
pub mod cube;
pub mod noise;
pub mod raster;
pub mod scene;
pub mod table;

pub use bands::{remove_bands, BandPreset};
pub use cube::{decode_cube, encode_cube, load_cube, save_cube};
pub use noise::{add_gaussian_noise, SNR_LADDER_DB};
pub use raster::{render_grayscale, render_pseudocolor};
pub use scene::{synthesize_scene, SceneSpec};
