//! Lambertian diffuse scattering paths.
//!
//! Scene faces are partitioned into tiles of roughly `tile_area_m2`; each
//! tile visible from an incident source (the transmitter directly, or the
//! transmitter via one specular bounce) and from the receiver produces one
//! path with a single scatter event at the tile center. With the default
//! interaction budget of 2 the emitted signatures are Tx-S-Rx, Tx-R-S-Rx
//! and Tx-S-R-Rx.
//!
//! Bounced illumination is discovered per reflecting face through the
//! mirror image of the endpoint: only tiles inside the reflection frustum
//! (apex at the image, window at the face) are candidates, found with a
//! point index over tile centers rather than a full face-times-tile scan.

use std::collections::BTreeMap;

use super::{Interaction, RayPath, TraceConfig, TraceOpts};
use crate::error::{Error, Result};
use crate::geometry::{mirror_point, Aabb, Bvh, Face, Scene, Vec3, EPS_RAY};

/// One scattering tile.
#[derive(Clone, Copy, Debug)]
pub struct Tile {
    pub center: Vec3,
    pub normal: Vec3,
    pub area: f64,
    pub face_id: u32,
}

/// Tiles plus a point index over their centers. Tiles appended after the
/// index was built (moving UAV bodies) are scanned linearly by frustum
/// queries.
#[derive(Clone, Debug, Default)]
pub struct DiffuseTiles {
    pub tiles: Vec<Tile>,
    index: PointIndex,
    indexed: usize,
}

/// Per-scene illumination of tiles from the transmitter side.
#[derive(Clone, Debug, Default)]
pub struct TxIllumination {
    /// tile index -> unobstructed from tx.
    pub direct: Vec<bool>,
    /// tile index -> (reflecting face, reflection point) pairs reaching it
    /// from tx via one specular bounce.
    pub reflected: BTreeMap<u32, Vec<(u32, Vec3)>>,
}

/// Partition scene faces into scattering tiles.
///
/// Coplanar triangle pairs forming a rectangle (box faces, ground quads)
/// are tiled on an even grid of near-target-area cells. Lone triangles are
/// split uniformly four ways per level, giving tiles in (target/4, target].
/// Small coplanar pairs below the merge threshold collapse into one tile.
pub fn build_tiles(scene: &Scene, tile_area_m2: f64) -> DiffuseTiles {
    let mut tiles = Vec::new();
    tile_faces(&scene.faces, tile_area_m2, &mut tiles);
    let index = PointIndex::build(&tiles);
    let indexed = tiles.len();
    DiffuseTiles { tiles, index, indexed }
}

impl DiffuseTiles {
    /// Append tiles for extra faces (UAV bodies) without rebuilding the
    /// index; frustum queries scan these linearly.
    pub fn append_dynamic(&mut self, faces: &[Face], tile_area_m2: f64) {
        tile_faces(faces, tile_area_m2, &mut self.tiles);
    }

    /// Number of tiles covered by the point index (the static portion).
    pub fn indexed_len(&self) -> usize {
        self.indexed
    }

    /// Candidate tiles for a reflection frustum: indexed hits plus every
    /// dynamic tile (exact window tests happen at the caller).
    fn tiles_in_frustum(&self, apex: Vec3, face: &Face) -> Vec<u32> {
        let mut out = self.index.query_frustum(apex, face);
        out.extend(self.indexed as u32..self.tiles.len() as u32);
        out
    }
}

fn tile_faces(faces: &[Face], tile_area_m2: f64, tiles: &mut Vec<Tile>) {
    let mut i = 0;
    while i < faces.len() {
        let face = &faces[i];
        if let Some(next) = faces.get(i + 1) {
            if let Some((corner, e1, e2)) = rectangle_pair(face, next) {
                let combined = face.area() + next.area();
                if combined < tile_area_m2 / 4.0 {
                    tiles.push(Tile {
                        center: corner + (e1 + e2) * 0.5,
                        normal: face.normal(),
                        area: combined,
                        face_id: face.face_id,
                    });
                } else {
                    grid_tiles(corner, e1, e2, face, tile_area_m2, tiles);
                }
                i += 2;
                continue;
            }
        }
        triangle_tiles(face, tile_area_m2, tiles);
        i += 1;
    }
}

/// Detect two coplanar same-material triangles forming a rectangle.
/// Returns (corner, side1, side2) spanning it.
fn rectangle_pair(a: &Face, b: &Face) -> Option<(Vec3, Vec3, Vec3)> {
    if a.material_id != b.material_id || a.normal().dot(b.normal()) < 1.0 - 1e-9 {
        return None;
    }
    // Find the two shared vertices (the common diagonal) and the two
    // unique ones.
    let mut shared = Vec::new();
    let mut unique_a = Vec::new();
    for va in &a.vertices {
        if b.vertices.iter().any(|vb| va.dist(*vb) < 1e-12) {
            shared.push(*va);
        } else {
            unique_a.push(*va);
        }
    }
    let unique_b: Vec<Vec3> = b
        .vertices
        .iter()
        .filter(|vb| !a.vertices.iter().any(|va| va.dist(**vb) < 1e-12))
        .copied()
        .collect();
    if shared.len() != 2 || unique_a.len() != 1 || unique_b.len() != 1 {
        return None;
    }
    let (u0, u1) = (unique_a[0], unique_b[0]);
    // Parallelogram: diagonals bisect each other.
    if ((shared[0] + shared[1]) - (u0 + u1)).norm() > 1e-9 {
        return None;
    }
    let e1 = shared[0] - u0;
    let e2 = shared[1] - u0;
    if e1.dot(e2).abs() > 1e-9 * e1.norm() * e2.norm() {
        return None; // not a right angle
    }
    Some((u0, e1, e2))
}

fn grid_tiles(corner: Vec3, e1: Vec3, e2: Vec3, face: &Face, tile_area_m2: f64, out: &mut Vec<Tile>) {
    let target = tile_area_m2.sqrt();
    let n1 = (e1.norm() / target).ceil().max(1.0) as usize;
    let n2 = (e2.norm() / target).ceil().max(1.0) as usize;
    let area = e1.norm() * e2.norm() / (n1 * n2) as f64;
    for i in 0..n1 {
        for j in 0..n2 {
            let center = corner
                + e1 * ((i as f64 + 0.5) / n1 as f64)
                + e2 * ((j as f64 + 0.5) / n2 as f64);
            out.push(Tile { center, normal: face.normal(), area, face_id: face.face_id });
        }
    }
}

fn triangle_tiles(face: &Face, tile_area_m2: f64, out: &mut Vec<Tile>) {
    if face.area() <= tile_area_m2 {
        out.push(Tile {
            center: face.centroid(),
            normal: face.normal(),
            area: face.area(),
            face_id: face.face_id,
        });
        return;
    }
    let mut depth = 0u32;
    let mut area = face.area();
    while area > tile_area_m2 {
        area /= 4.0;
        depth += 1;
    }
    subdivide(face.vertices, depth, &mut |v: [Vec3; 3]| {
        out.push(Tile {
            center: (v[0] + v[1] + v[2]) / 3.0,
            normal: face.normal(),
            area,
            face_id: face.face_id,
        });
    });
}

fn subdivide(v: [Vec3; 3], depth: u32, emit: &mut impl FnMut([Vec3; 3])) {
    if depth == 0 {
        emit(v);
        return;
    }
    let m01 = (v[0] + v[1]) * 0.5;
    let m12 = (v[1] + v[2]) * 0.5;
    let m20 = (v[2] + v[0]) * 0.5;
    subdivide([v[0], m01, m20], depth - 1, emit);
    subdivide([m01, v[1], m12], depth - 1, emit);
    subdivide([m20, m12, v[2]], depth - 1, emit);
    subdivide([m01, m12, m20], depth - 1, emit);
}

// ---------------------------------------------------------------------------
// Point index + reflection frustum query
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct PNode {
    aabb: Aabb,
    left: u32,
    right: u32,
    first: u32,
    count: u32,
}

#[derive(Clone, Debug, Default)]
struct PointIndex {
    nodes: Vec<PNode>,
    order: Vec<u32>,
}

const P_LEAF: usize = 16;

impl PointIndex {
    fn build(tiles: &[Tile]) -> PointIndex {
        if tiles.is_empty() {
            return PointIndex::default();
        }
        let mut items: Vec<(Vec3, u32)> =
            tiles.iter().enumerate().map(|(i, t)| (t.center, i as u32)).collect();
        let mut idx = PointIndex { nodes: Vec::new(), order: Vec::new() };
        idx.build_range(&mut items, 0);
        idx.order = items.iter().map(|&(_, i)| i).collect();
        idx
    }

    fn build_range(&mut self, items: &mut [(Vec3, u32)], first: usize) -> u32 {
        let mut aabb = Aabb::empty();
        for (p, _) in items.iter() {
            aabb.grow(*p);
        }
        let node = self.nodes.len() as u32;
        self.nodes.push(PNode {
            aabb,
            left: 0,
            right: 0,
            first: first as u32,
            count: items.len() as u32,
        });
        if items.len() <= P_LEAF {
            return node;
        }
        let axis = aabb.longest_axis();
        if aabb.max.component(axis) - aabb.min.component(axis) < 1e-12 {
            return node;
        }
        items.sort_unstable_by(|a, b| {
            a.0.component(axis).partial_cmp(&b.0.component(axis)).unwrap().then(a.1.cmp(&b.1))
        });
        let mid = items.len() / 2;
        let (lo, hi) = items.split_at_mut(mid);
        let left = self.build_range(lo, first);
        let right = self.build_range(hi, first + mid);
        self.nodes[node as usize].left = left;
        self.nodes[node as usize].right = right;
        self.nodes[node as usize].count = 0;
        node
    }

    /// Indices of points inside the reflection frustum with apex `apex`
    /// and window `face`: points p for which the segment apex->p crosses
    /// the face's triangle. Result is sorted.
    fn query_frustum(&self, apex: Vec3, face: &Face) -> Vec<u32> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let da = face.plane_distance(apex);
        if da.abs() < 1e-9 {
            return out;
        }
        // Half-space "beyond the face plane, away from the apex".
        let base_n = face.normal() * (-da.signum());
        let base_o = face.vertices[0];
        // Side planes through the apex and each triangle edge, oriented
        // inward (third vertex on the non-negative side).
        let mut planes: Vec<(Vec3, Vec3)> = vec![(base_n, base_o)];
        let v = face.vertices;
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let mut n = (v[i] - apex).cross(v[j] - apex);
            if (v[k] - apex).dot(n) < 0.0 {
                n = -n;
            }
            planes.push((n, apex));
        }
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let mut outside = false;
            for &(n, o) in &planes {
                // p-vertex test: corner of the AABB farthest along n.
                let c = Vec3::new(
                    if n.x > 0.0 { node.aabb.max.x } else { node.aabb.min.x },
                    if n.y > 0.0 { node.aabb.max.y } else { node.aabb.min.y },
                    if n.z > 0.0 { node.aabb.max.z } else { node.aabb.min.z },
                );
                if (c - o).dot(n) < 0.0 {
                    outside = true;
                    break;
                }
            }
            if outside {
                continue;
            }
            if node.count > 0 {
                for &ti in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    out.push(ti);
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        out.sort_unstable();
        out
    }
}

// ---------------------------------------------------------------------------
// Illumination and path assembly
// ---------------------------------------------------------------------------

/// Reflection point of the segment image->target on the face, if the
/// crossing lies strictly inside the face.
fn window_point(face: &Face, image: Vec3, target: Vec3) -> Option<Vec3> {
    let n = face.normal();
    let denom = (target - image).dot(n);
    if denom.abs() < 1e-14 {
        return None;
    }
    let t = (face.vertices[0] - image).dot(n) / denom;
    if !(1e-12..=1.0 - 1e-12).contains(&t) {
        return None;
    }
    let q = image + (target - image) * t;
    if !face.contains_projected(q, 1e-9) {
        return None;
    }
    Some(q)
}

/// Compute which tiles the transmitter illuminates, directly and via one
/// specular bounce. Receiver-independent, so evaluated once per scene.
pub fn compute_tx_illumination(
    scene: &Scene,
    bvh: &Bvh,
    tiles: &DiffuseTiles,
    tx: Vec3,
    cfg: &TraceConfig,
) -> TxIllumination {
    let direct: Vec<bool> =
        tiles.tiles.iter().map(|t| !bvh.occluded(tx, t.center)).collect();

    let mut reflected: BTreeMap<u32, Vec<(u32, Vec3)>> = BTreeMap::new();
    if cfg.ds_max_interactions >= 2 {
        for face in &scene.faces {
            let image = mirror_point(tx, face);
            for ti in tiles.tiles_in_frustum(image, face) {
                if let Some(q) = bounce_entry(bvh, face, image, tx, &tiles.tiles[ti as usize]) {
                    reflected.entry(ti).or_default().push((face.face_id, q));
                }
            }
        }
    }
    TxIllumination { direct, reflected }
}

/// Validated one-bounce illumination of a tile: the reflection point on
/// `face` for the unfolded segment image->tile, with both legs clear.
fn bounce_entry(bvh: &Bvh, face: &Face, image: Vec3, tx: Vec3, tile: &Tile) -> Option<Vec3> {
    if tile.face_id == face.face_id {
        return None;
    }
    let q = window_point(face, image, tile.center)?;
    if tx.dist(q) <= EPS_RAY || q.dist(tile.center) <= EPS_RAY {
        return None;
    }
    if bvh.occluded(tx, q) || bvh.occluded(q, tile.center) {
        return None;
    }
    Some(q)
}

/// Rebase a static illumination map onto a scene extended with UAV body
/// faces: static results are rechecked against the bodies-only geometry
/// (bodies can only add blockage), body tiles and body reflectors are
/// evaluated in full.
#[allow(clippy::too_many_arguments)]
pub fn revalidate_illumination(
    scene: &Scene,
    bvh: &Bvh,
    body_bvh: &Bvh,
    tiles: &DiffuseTiles,
    static_illum: &TxIllumination,
    static_face_count: usize,
    tx: Vec3,
    cfg: &TraceConfig,
) -> TxIllumination {
    let n_static_tiles = static_illum.direct.len();
    let direct: Vec<bool> = tiles
        .tiles
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i < n_static_tiles {
                static_illum.direct[i] && !body_bvh.occluded(tx, t.center)
            } else {
                !bvh.occluded(tx, t.center)
            }
        })
        .collect();

    let mut reflected: BTreeMap<u32, Vec<(u32, Vec3)>> = BTreeMap::new();
    if cfg.ds_max_interactions >= 2 {
        // Statically valid entries survive unless a body blocks a leg.
        for (&ti, vias) in &static_illum.reflected {
            let center = tiles.tiles[ti as usize].center;
            for &(f, q) in vias {
                if body_bvh.occluded(tx, q) || body_bvh.occluded(q, center) {
                    continue;
                }
                reflected.entry(ti).or_default().push((f, q));
            }
        }
        // Body faces as reflectors toward any tile.
        for face in &scene.faces[static_face_count..] {
            let image = mirror_point(tx, face);
            for ti in tiles.tiles_in_frustum(image, face) {
                if let Some(q) = bounce_entry(bvh, face, image, tx, &tiles.tiles[ti as usize]) {
                    reflected.entry(ti).or_default().push((face.face_id, q));
                }
            }
        }
        // Static faces reflecting onto body tiles.
        for face in &scene.faces[..static_face_count] {
            let image = mirror_point(tx, face);
            for ti in tiles.indexed_len()..tiles.tiles.len() {
                if let Some(q) = bounce_entry(bvh, face, image, tx, &tiles.tiles[ti]) {
                    reflected.entry(ti as u32).or_default().push((face.face_id, q));
                }
            }
        }
        // Keep per-tile entries in face-id order regardless of which loop
        // found them, matching the order a from-scratch computation emits.
        for vias in reflected.values_mut() {
            vias.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.x.total_cmp(&b.1.x)));
        }
    }
    TxIllumination { direct, reflected }
}

/// Incidence/departure cosine pair at a tile, requiring both endpoints on
/// the same side of the surface. Returns None for a through-the-face pair.
fn tile_cosines(tile: &Tile, incident_from: Vec3, depart_to: Vec3) -> Option<(f64, f64)> {
    let to_src = (incident_from - tile.center).try_normalized()?;
    let to_dst = (depart_to - tile.center).try_normalized()?;
    let ci = to_src.dot(tile.normal);
    let cs = to_dst.dot(tile.normal);
    if ci.abs() < 1e-9 || cs.abs() < 1e-9 || (ci > 0.0) != (cs > 0.0) {
        return None;
    }
    Some((ci.abs(), cs.abs()))
}

/// Diffuse path search with freshly built tiles and illumination; the
/// orchestrator uses [`trace_diffuse_prepared`] to share them per scene.
pub fn trace_diffuse(
    scene: &Scene,
    bvh: &Bvh,
    tx: Vec3,
    rx: Vec3,
    cfg: &TraceConfig,
    opts: &TraceOpts,
) -> Result<Vec<RayPath>> {
    let tiles = build_tiles(scene, cfg.tile_area_m2);
    let illum = compute_tx_illumination(scene, bvh, &tiles, tx, cfg);
    trace_diffuse_prepared(scene, bvh, &tiles, &illum, tx, rx, cfg, opts)
}

/// Diffuse path search against precomputed tiles and tx illumination.
#[allow(clippy::too_many_arguments)]
pub fn trace_diffuse_prepared(
    scene: &Scene,
    bvh: &Bvh,
    tiles: &DiffuseTiles,
    illum: &TxIllumination,
    tx: Vec3,
    rx: Vec3,
    cfg: &TraceConfig,
    opts: &TraceOpts,
) -> Result<Vec<RayPath>> {
    let candidates = diffuse_candidates(scene, tiles, illum, tx, rx, cfg, opts)?;
    Ok(candidates
        .into_iter()
        .filter(|p| validate_diffuse_rx_side(bvh, p, opts))
        .collect())
}

/// Diffuse paths that are valid on the transmitter side, before the
/// receiver-side occlusion checks.
///
/// Occlusion decides only whether a candidate exists, never its power, so
/// a caller ranking by power can defer [`validate_diffuse_rx_side`] and
/// stop validating once enough of the strongest survive.
pub fn diffuse_candidates(
    scene: &Scene,
    tiles: &DiffuseTiles,
    illum: &TxIllumination,
    tx: Vec3,
    rx: Vec3,
    cfg: &TraceConfig,
    opts: &TraceOpts,
) -> Result<Vec<RayPath>> {
    if tx.dist(rx) <= EPS_RAY {
        return Err(Error::Invariant("tx and rx coincide".into()));
    }
    let mut paths = Vec::new();
    // A tile on the receiver's own body must not scatter into its own
    // antenna centimeters away; the Lambertian far-field form is meaningless
    // there.
    let own_tile = |tile: &Tile| opts.excludes(tile.face_id);

    // Tx-S-Rx
    for (ti, tile) in tiles.tiles.iter().enumerate() {
        if !illum.direct[ti] || own_tile(tile) {
            continue;
        }
        if tile_cosines(tile, tx, rx).is_none() {
            continue;
        }
        if tx.dist(tile.center) <= EPS_RAY || tile.center.dist(rx) <= EPS_RAY {
            continue;
        }
        paths.push(RayPath::new(
            tx,
            rx,
            vec![Interaction::Scatter {
                face_id: tile.face_id,
                point: tile.center,
                tile_area: tile.area,
            }],
        ));
    }

    if cfg.ds_max_interactions >= 2 {
        // Tx-R-S-Rx: one bounce before the scatter, from the
        // scene-wide illumination map.
        for (&ti, vias) in &illum.reflected {
            let tile = &tiles.tiles[ti as usize];
            if own_tile(tile) {
                continue;
            }
            for &(face_id, q) in vias {
                if tile_cosines(tile, q, rx).is_none() {
                    continue;
                }
                paths.push(RayPath::new(
                    tx,
                    rx,
                    vec![
                        Interaction::Reflect { face_id, point: q },
                        Interaction::Scatter {
                            face_id: tile.face_id,
                            point: tile.center,
                            tile_area: tile.area,
                        },
                    ],
                ));
            }
        }

        // Tx-S-R-Rx: one bounce after the scatter, via the receiver image.
        for face in &scene.faces {
            let image = mirror_point(rx, face);
            for ti in tiles.tiles_in_frustum(image, face) {
                let tile = &tiles.tiles[ti as usize];
                if !illum.direct[ti as usize] || own_tile(tile) || tile.face_id == face.face_id {
                    continue;
                }
                let Some(q) = window_point(face, image, tile.center) else {
                    continue;
                };
                if tile_cosines(tile, tx, q).is_none() {
                    continue;
                }
                if q.dist(rx) <= EPS_RAY || tile.center.dist(q) <= EPS_RAY {
                    continue;
                }
                paths.push(RayPath::new(
                    tx,
                    rx,
                    vec![
                        Interaction::Scatter {
                            face_id: tile.face_id,
                            point: tile.center,
                            tile_area: tile.area,
                        },
                        Interaction::Reflect { face_id: face.face_id, point: q },
                    ],
                ));
            }
        }
    }
    Ok(paths)
}

/// Occlusion checks for the segments after the scatter event. The
/// transmitter-side legs were validated during candidate construction.
pub fn validate_diffuse_rx_side(bvh: &Bvh, path: &RayPath, opts: &TraceOpts) -> bool {
    let pts = path.points();
    let scatter_idx = path
        .interactions
        .iter()
        .position(|i| matches!(i, Interaction::Scatter { .. }))
        .expect("diffuse path has a scatter event");
    for i in scatter_idx + 1..pts.len() - 1 {
        let last = i == pts.len() - 2;
        let blocked = if last {
            bvh.occluded_excluding(pts[i], pts[i + 1], |f| opts.excludes(f))
        } else {
            bvh.occluded(pts[i], pts[i + 1])
        };
        if blocked {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::Material;
    use crate::geometry::build_accelerator;
    use crate::geometry::mesh::{BoxSpec, MeshSpec, SceneDescription};
    use std::collections::BTreeMap;

    fn materials() -> BTreeMap<String, Material> {
        let mut m = BTreeMap::new();
        m.insert(
            "concrete".to_string(),
            Material {
                name: String::new(),
                eps_real: 5.31,
                sigma: 0.9,
                is_pec: false,
                scattering_s: 0.4,
            },
        );
        m
    }

    /// One 1 m^2 wall tile facing +x.
    fn single_tile_scene() -> Scene {
        Scene::from_description(SceneDescription {
            materials: materials(),
            boxes: vec![],
            meshes: vec![MeshSpec {
                vertices: vec![
                    [0.0, -0.5, 0.0],
                    [0.0, 0.5, 0.0],
                    [0.0, 0.5, 1.0],
                    [0.0, -0.5, 1.0],
                ],
                triangles: vec![[0, 2, 1], [0, 3, 2]],
                material: "concrete".into(),
            }],
        })
        .unwrap()
    }

    #[test]
    fn tiling_respects_target_area() {
        let scene = single_tile_scene();
        // The 1 m^2 quad is one grid cell at target 1.
        let tiles = build_tiles(&scene, 1.0);
        assert_eq!(tiles.tiles.len(), 1);
        assert!((tiles.tiles[0].area - 1.0).abs() < 1e-12);
        // target 0.25: a 2x2 grid of quarter tiles
        let fine = build_tiles(&scene, 0.25);
        assert_eq!(fine.tiles.len(), 4);
        for t in &fine.tiles {
            assert!(t.area > 0.25 / 4.0 - 1e-12 && t.area <= 0.25 + 1e-12);
        }
        // small-face merge: at target 9 the pair is below the merge
        // threshold and collapses into one tile at the quad center.
        let merged = build_tiles(&scene, 9.0);
        assert_eq!(merged.tiles.len(), 1);
        assert!((merged.tiles[0].area - 1.0).abs() < 1e-12);
        assert!(merged.tiles[0].center.dist(Vec3::new(0.0, 0.0, 0.5)) < 1e-12);

        // Lone triangles still use quarternary subdivision.
        let mut desc = scene.description().clone();
        desc.meshes[0].triangles.pop();
        let tri_scene = Scene::from_description(desc).unwrap();
        let tri_tiles = build_tiles(&tri_scene, 0.25);
        assert_eq!(tri_tiles.tiles.len(), 4); // 0.5 m^2 split once
        for t in &tri_tiles.tiles {
            assert!(t.area > 0.25 / 4.0 - 1e-12 && t.area <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn single_wall_tile_scatters_between_endpoints() {
        let scene = single_tile_scene();
        let bvh = build_accelerator(&scene);
        let cfg = TraceConfig { ds_max_interactions: 1, ..TraceConfig::default() };
        let tx = Vec3::new(5.0, -2.0, 0.5);
        let rx = Vec3::new(5.0, 2.0, 0.5);
        let paths =
            trace_diffuse(&scene, &bvh, tx, rx, &cfg, &TraceOpts::default()).unwrap();
        assert_eq!(paths.len(), 1); // the single 1 m^2 wall tile
        assert_eq!(paths[0].signature, "Tx-S-Rx");
    }

    #[test]
    fn occluded_tile_gives_no_path() {
        // Wall tile plus a blocking slab between the tile and rx.
        let mut desc = SceneDescription {
            materials: materials(),
            boxes: vec![BoxSpec {
                min: [2.0, -3.0, -1.0],
                max: [2.5, 3.0, 3.0],
                material: "concrete".into(),
            }],
            meshes: vec![],
        };
        desc.meshes.push(MeshSpec {
            vertices: vec![
                [0.0, -0.5, 0.0],
                [0.0, 0.5, 0.0],
                [0.0, 0.5, 1.0],
                [0.0, -0.5, 1.0],
            ],
            triangles: vec![[0, 2, 1], [0, 3, 2]],
            material: "concrete".into(),
        });
        let scene = Scene::from_description(desc).unwrap();
        let bvh = build_accelerator(&scene);
        let cfg = TraceConfig { ds_max_interactions: 1, ..TraceConfig::default() };
        let tx = Vec3::new(1.0, 0.0, 0.5); // sees the tile
        let rx = Vec3::new(5.0, 0.0, 0.5); // blocked by the slab
        let paths =
            trace_diffuse(&scene, &bvh, tx, rx, &cfg, &TraceOpts::default()).unwrap();
        assert!(paths.iter().all(|p| {
            !matches!(p.interactions.first(),
                Some(Interaction::Scatter { point, .. }) if point.x.abs() < 1e-9)
        }));
    }

    #[test]
    fn interaction_budget_limits_signatures() {
        // Wall tile plus a ground plane for bounces.
        let scene = Scene::from_description(SceneDescription {
            materials: materials(),
            boxes: vec![],
            meshes: vec![
                MeshSpec {
                    vertices: vec![
                        [0.0, -2.0, 0.1],
                        [0.0, 2.0, 0.1],
                        [0.0, 2.0, 3.0],
                        [0.0, -2.0, 3.0],
                    ],
                    triangles: vec![[0, 2, 1], [0, 3, 2]],
                    material: "concrete".into(),
                },
                MeshSpec {
                    vertices: vec![
                        [-1.0, -8.0, 0.0],
                        [9.0, -8.0, 0.0],
                        [9.0, 8.0, 0.0],
                        [-1.0, 8.0, 0.0],
                    ],
                    triangles: vec![[0, 1, 2], [0, 2, 3]],
                    material: "concrete".into(),
                },
            ],
        })
        .unwrap();
        let bvh = build_accelerator(&scene);
        let tx = Vec3::new(5.0, -3.0, 1.5);
        let rx = Vec3::new(5.0, 3.0, 1.5);

        let cfg1 = TraceConfig { ds_max_interactions: 1, ..TraceConfig::default() };
        let paths1 =
            trace_diffuse(&scene, &bvh, tx, rx, &cfg1, &TraceOpts::default()).unwrap();
        assert!(!paths1.is_empty());
        assert!(paths1.iter().all(|p| p.signature == "Tx-S-Rx"));

        let cfg2 = TraceConfig { ds_max_interactions: 2, ..TraceConfig::default() };
        let paths2 =
            trace_diffuse(&scene, &bvh, tx, rx, &cfg2, &TraceOpts::default()).unwrap();
        let sigs: std::collections::BTreeSet<&str> =
            paths2.iter().map(|p| p.signature.as_str()).collect();
        for s in &sigs {
            assert!(
                ["Tx-S-Rx", "Tx-R-S-Rx", "Tx-S-R-Rx"].contains(s),
                "unexpected signature {s}"
            );
        }
        assert!(sigs.contains("Tx-R-S-Rx"), "bounce-then-scatter missing: {sigs:?}");
        assert!(sigs.contains("Tx-S-R-Rx"), "scatter-then-bounce missing: {sigs:?}");
        // every diffuse path has exactly one scatter event
        for p in &paths2 {
            let scatters = p
                .interactions
                .iter()
                .filter(|i| matches!(i, Interaction::Scatter { .. }))
                .count();
            assert_eq!(scatters, 1);
            assert!(p.interactions.len() <= 2);
        }
    }
}
