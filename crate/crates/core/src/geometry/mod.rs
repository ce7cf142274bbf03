//! Scene geometry: vectors, triangle meshes with materials, and the BVH
//! used by every ray query.

pub mod aabb;
pub mod bvh;
pub mod mesh;
pub mod vec3;

pub use aabb::Aabb;
pub use bvh::{build_accelerator, build_accelerator_for, Bvh, Hit};
pub use mesh::{
    axis_box_triangles, load_scene, mirror_point, oriented_box_triangles, serialize_scene, Face,
    Scene, SceneDescription, EPS_RAY,
};
pub use vec3::Vec3;
