//! Lifting pose-space Gaussians into UV space.

mod attention;
mod bvh;
mod unproject;

pub use attention::{
    cross_attention_lift, positional_encode, AttentionKernel, AttentionWeights, LatentCode, Matrix,
    DEFAULT_N_FREQ, LATENT_CHANNELS, LATENT_SIZE,
};
pub use bvh::{closest_point_on_triangle, nearest_surface_point, SurfaceHit, SurfaceIndex};
pub use unproject::{unproject_to_uv, CollisionPolicy, UnprojectReport};
