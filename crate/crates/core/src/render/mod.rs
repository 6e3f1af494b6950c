//! Placement of structured Gaussians and software splatting.

mod avatar;
mod camera;
mod place;
mod project;
mod raster;

pub use avatar::{
    render_avatar, render_avatar_timed, sample_composed, AvatarSettings, CanonicalCache,
    StageTimings,
};
pub use camera::{read_camera, Camera, CameraRecord};
pub use place::{place_gaussians, place_one, Placement, WorldGaussian};
pub use project::{project_gaussian, world_covariance, Splat, LOW_PASS, Z_NEAR};
pub use raster::{
    rasterize, rasterize_with, RasterSettings, RenderedImage, ALPHA_CUTOFF, DEFAULT_TILE_SIZE,
    MAX_WEIGHT, MIN_TRANSMITTANCE,
};
