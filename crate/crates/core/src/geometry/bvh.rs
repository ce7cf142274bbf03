//! Bounding volume hierarchy over scene triangles.
//!
//! Median-split construction, Moller-Trumbore intersection, no backface
//! culling. Queries are read-only and safe to run concurrently.

use super::aabb::Aabb;
use super::mesh::{Face, Scene, EPS_RAY};
use super::vec3::Vec3;

/// Intersection result.
#[derive(Clone, Copy, Debug)]
pub struct Hit {
    /// Ray parameter in meters (distance along the unit direction).
    pub t: f64,
    pub point: Vec3,
    pub face_id: u32,
    /// Barycentric (u, v) with respect to the face's vertex order.
    pub bary: (f64, f64),
}

#[derive(Clone, Debug)]
struct Node {
    aabb: Aabb,
    /// Leaf: (first, count) into `order`. Internal: (left child, 0) with the
    /// right child at left + 1 is not used; children are stored explicitly.
    left: u32,
    right: u32,
    first: u32,
    count: u32,
}

/// Precomputed triangle for the intersection kernel.
#[derive(Clone, Debug)]
struct Tri {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
    face_id: u32,
}

#[derive(Clone, Debug, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<Tri>,
}

const LEAF_SIZE: usize = 4;

/// Build the acceleration structure. An empty scene yields an accelerator
/// that returns no hits.
pub fn build_accelerator(scene: &Scene) -> Bvh {
    build_accelerator_for(&scene.faces)
}

/// Accelerator over a face subset (keeps original face ids in hits).
pub fn build_accelerator_for(faces: &[Face]) -> Bvh {
    let mut tris: Vec<Tri> = faces
        .iter()
        .map(|f| Tri {
            v0: f.vertices[0],
            e1: f.vertices[1] - f.vertices[0],
            e2: f.vertices[2] - f.vertices[0],
            face_id: f.face_id,
        })
        .collect();
    if tris.is_empty() {
        return Bvh::default();
    }
    let mut bvh = Bvh { nodes: Vec::new(), tris: Vec::new() };
    let mut items: Vec<(Aabb, Vec3, u32)> = tris
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let b = Aabb::of_points(&[t.v0, t.v0 + t.e1, t.v0 + t.e2]);
            (b, b.center(), i as u32)
        })
        .collect();
    build_node(&mut bvh.nodes, &mut items);
    // Reorder triangles to match leaf ranges.
    bvh.tris = items.iter().map(|&(_, _, i)| tris[i as usize].clone()).collect();
    tris.clear();
    bvh
}

fn build_node(nodes: &mut Vec<Node>, items: &mut [(Aabb, Vec3, u32)]) -> u32 {
    // Offsets are tracked by splitting: the caller owns the slice position.
    build_range(nodes, items, 0)
}

fn build_range(nodes: &mut Vec<Node>, items: &mut [(Aabb, Vec3, u32)], first: usize) -> u32 {
    let mut aabb = Aabb::empty();
    for (b, _, _) in items.iter() {
        aabb = aabb.union(b);
    }
    let idx = nodes.len() as u32;
    nodes.push(Node { aabb, left: 0, right: 0, first: first as u32, count: items.len() as u32 });
    if items.len() <= LEAF_SIZE {
        return idx;
    }
    let mut centroid_bounds = Aabb::empty();
    for (_, c, _) in items.iter() {
        centroid_bounds.grow(*c);
    }
    let axis = centroid_bounds.longest_axis();
    let extent = centroid_bounds.max.component(axis) - centroid_bounds.min.component(axis);
    if extent < 1e-12 {
        return idx; // all centroids coincide, keep as leaf
    }
    // Deterministic median split: ties broken by original triangle index.
    items.sort_unstable_by(|a, b| {
        a.1.component(axis)
            .partial_cmp(&b.1.component(axis))
            .unwrap()
            .then(a.2.cmp(&b.2))
    });
    let mid = items.len() / 2;
    let (lo, hi) = items.split_at_mut(mid);
    let left = build_range(nodes, lo, first);
    let right = build_range(nodes, hi, first + mid);
    nodes[idx as usize].left = left;
    nodes[idx as usize].right = right;
    nodes[idx as usize].count = 0;
    idx
}

fn ray_triangle(tri: &Tri, origin: Vec3, dir: Vec3) -> Option<(f64, f64, f64)> {
    let p = dir.cross(tri.e2);
    let det = tri.e1.dot(p);
    if det.abs() < 1e-14 {
        return None; // parallel to the plane
    }
    let inv = 1.0 / det;
    let s = origin - tri.v0;
    let u = s.dot(p) * inv;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let q = s.cross(tri.e1);
    let v = dir.dot(q) * inv;
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    let t = tri.e2.dot(q) * inv;
    Some((t, u, v))
}

impl Bvh {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of triangles reachable through the hierarchy.
    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Nearest hit with EPS_RAY < t <= t_max, or None. Grazing ties at the
    /// same t resolve to the lowest face id.
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<Hit> {
        self.intersect_excluding(origin, dir, t_max, |_| false)
    }

    /// Nearest hit among faces not rejected by `skip`.
    pub fn intersect_excluding<F: Fn(u32) -> bool>(
        &self,
        origin: Vec3,
        dir: Vec3,
        t_max: f64,
        skip: F,
    ) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<Hit> = None;
        let mut best_t = t_max;
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.aabb.hit_by(origin, inv_dir, EPS_RAY, best_t) {
                continue;
            }
            if node.count > 0 {
                for tri in &self.tris[node.first as usize..(node.first + node.count) as usize] {
                    if skip(tri.face_id) {
                        continue;
                    }
                    if let Some((t, u, v)) = ray_triangle(tri, origin, dir) {
                        if t <= EPS_RAY || t > best_t {
                            continue;
                        }
                        let closer = match &best {
                            None => true,
                            Some(h) => t < h.t || (t == h.t && tri.face_id < h.face_id),
                        };
                        if closer {
                            best_t = t;
                            best = Some(Hit {
                                t,
                                point: origin + dir * t,
                                face_id: tri.face_id,
                                bary: (u, v),
                            });
                        }
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        best
    }

    /// True when any face blocks the open segment (a, b), with EPS_RAY
    /// clearance at both endpoints so that interaction points sitting on a
    /// face do not occlude themselves.
    pub fn occluded(&self, a: Vec3, b: Vec3) -> bool {
        self.occluded_excluding(a, b, |_| false)
    }

    /// Occlusion test ignoring faces rejected by `skip` (early-exit any-hit).
    pub fn occluded_excluding<F: Fn(u32) -> bool>(&self, a: Vec3, b: Vec3, skip: F) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let len = a.dist(b);
        if len <= 2.0 * EPS_RAY {
            return false;
        }
        let dir = (b - a) / len;
        let t_hi = len - EPS_RAY;
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.aabb.hit_by(a, inv_dir, EPS_RAY, t_hi) {
                continue;
            }
            if node.count > 0 {
                for tri in &self.tris[node.first as usize..(node.first + node.count) as usize] {
                    if skip(tri.face_id) {
                        continue;
                    }
                    if let Some((t, _, _)) = ray_triangle(tri, a, dir) {
                        if t > EPS_RAY && t < t_hi {
                            return true;
                        }
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::Material;
    use crate::geometry::mesh::{MeshSpec, SceneDescription};
    use std::collections::BTreeMap;

    fn ground_square() -> Scene {
        let mut materials = BTreeMap::new();
        materials.insert(
            "metal".to_string(),
            Material { name: String::new(), eps_real: 1.0, sigma: 0.0, is_pec: true, scattering_s: 0.0 },
        );
        Scene::from_description(SceneDescription {
            materials,
            boxes: vec![],
            meshes: vec![MeshSpec {
                vertices: vec![
                    [-5.0, -5.0, 0.0],
                    [5.0, -5.0, 0.0],
                    [5.0, 5.0, 0.0],
                    [-5.0, 5.0, 0.0],
                ],
                triangles: vec![[0, 1, 2], [0, 2, 3]],
                material: "metal".into(),
            }],
        })
        .unwrap()
    }

    #[test]
    fn vertical_ray_hits_ground_at_origin() {
        let scene = ground_square();
        let bvh = build_accelerator(&scene);
        let hit = bvh
            .intersect(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0), 100.0)
            .expect("hit expected");
        assert!((hit.t - 1.0).abs() < 1e-12);
        assert!(hit.point.dist(Vec3::new(0.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn parallel_ray_misses() {
        let scene = ground_square();
        let bvh = build_accelerator(&scene);
        assert!(bvh
            .intersect(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0), 100.0)
            .is_none());
    }

    #[test]
    fn empty_scene_has_empty_accelerator() {
        let scene = Scene::from_description(SceneDescription {
            materials: BTreeMap::new(),
            boxes: vec![],
            meshes: vec![],
        })
        .unwrap();
        let bvh = build_accelerator(&scene);
        assert!(bvh.is_empty());
        assert!(bvh.intersect(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0), 1e9).is_none());
        assert!(!bvh.occluded(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0)));
    }

    #[test]
    fn occlusion_through_and_around_a_wall() {
        let scene = ground_square();
        let bvh = build_accelerator(&scene);
        // segment crossing the plane
        assert!(bvh.occluded(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0)));
        // segment fully above
        assert!(!bvh.occluded(Vec3::new(-1.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0)));
        // endpoint lying on the plane: epsilon clearance excludes the face
        assert!(!bvh.occluded(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 2.0)));
    }

    #[test]
    fn forty_five_degree_hit_matches_hand_geometry() {
        let scene = ground_square();
        let bvh = build_accelerator(&scene);
        // From (0,0,1) at 45 degrees downward toward +x: hits z=0 at (1,0,0),
        // ray length sqrt(2).
        let dir = Vec3::new(1.0, 0.0, -1.0).normalized();
        let hit = bvh.intersect(Vec3::new(0.0, 0.0, 1.0), dir, 10.0).unwrap();
        assert!((hit.t - 2f64.sqrt()).abs() < 1e-12);
        assert!(hit.point.dist(Vec3::new(1.0, 0.0, 0.0)) < 1e-12);
    }
}
