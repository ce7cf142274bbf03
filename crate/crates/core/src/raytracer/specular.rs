//! Specular path search.
//!
//! Candidate reflection-face sequences come from a launch grid
//! (shooting-and-bouncing rays) on large scenes, or from exhaustive
//! enumeration on small ones. Every candidate is then refined with the
//! image method: the transmitter is mirrored across the face sequence and
//! exact reflection points are solved back from the receiver, so emitted
//! geometry never depends on grid resolution.

use std::collections::BTreeSet;

use super::{launch_directions, reflect_dir, Interaction, RayPath, TraceConfig, TraceOpts};
use crate::error::{Error, Result};
use crate::geometry::{mirror_point, Bvh, Scene, Vec3, EPS_RAY};

/// Scenes at or below this face count use exhaustive sequence enumeration,
/// which guarantees every image-method-valid path is found regardless of
/// launch spacing.
const EXHAUSTIVE_FACE_LIMIT: usize = 32;

const BARY_TOL: f64 = 1e-9;

/// Trace the line-of-sight path (when clear) and all specular reflection
/// paths up to `cfg.max_reflections` bounces. Duplicate face sequences are
/// collapsed; output order is deterministic.
pub fn trace_specular(
    scene: &Scene,
    bvh: &Bvh,
    tx: Vec3,
    rx: Vec3,
    cfg: &TraceConfig,
    opts: &TraceOpts,
) -> Result<Vec<RayPath>> {
    let candidates = specular_candidates(scene, bvh, tx, cfg)?;
    trace_specular_with_candidates(scene, bvh, &candidates, tx, rx, cfg, opts)
}

/// Candidate reflection-face sequences for a transmitter. Receiver
/// independent: compute once per scene and refine per receiver.
pub fn specular_candidates(
    scene: &Scene,
    bvh: &Bvh,
    tx: Vec3,
    cfg: &TraceConfig,
) -> Result<BTreeSet<Vec<u32>>> {
    if scene.faces.len() <= EXHAUSTIVE_FACE_LIMIT {
        Ok(exhaustive_candidates(scene, cfg.max_reflections))
    } else {
        sbr_candidates(scene, bvh, tx, cfg)
    }
}

/// Image-method refinement of precomputed candidates for one receiver,
/// plus the line-of-sight path when clear.
pub fn trace_specular_with_candidates(
    scene: &Scene,
    bvh: &Bvh,
    candidates: &BTreeSet<Vec<u32>>,
    tx: Vec3,
    rx: Vec3,
    _cfg: &TraceConfig,
    opts: &TraceOpts,
) -> Result<Vec<RayPath>> {
    if tx.dist(rx) <= EPS_RAY {
        return Err(Error::Invariant("tx and rx coincide".into()));
    }
    let mut paths = Vec::new();
    if !bvh.occluded_excluding(tx, rx, |f| opts.excludes(f)) {
        paths.push(RayPath::new(tx, rx, Vec::new()));
    }
    for seq in candidates {
        if let Some(path) = refine_candidate(scene, bvh, tx, rx, seq, opts) {
            paths.push(path);
        }
    }
    Ok(paths)
}

/// All face sequences of length 1..=depth. Consecutive repeats are skipped:
/// a ray cannot reflect off the same plane twice in a row.
fn exhaustive_candidates(scene: &Scene, depth: u32) -> BTreeSet<Vec<u32>> {
    let n = scene.faces.len() as u32;
    let mut out = BTreeSet::new();
    let mut stack: Vec<Vec<u32>> = (0..n).map(|f| vec![f]).collect();
    while let Some(seq) = stack.pop() {
        if (seq.len() as u32) < depth {
            for f in 0..n {
                if f != *seq.last().unwrap() {
                    let mut next = seq.clone();
                    next.push(f);
                    stack.push(next);
                }
            }
        }
        out.insert(seq);
    }
    out
}

/// March the launch grid through the scene, recording every prefix of each
/// bounce sequence as a candidate.
fn sbr_candidates(
    scene: &Scene,
    bvh: &Bvh,
    tx: Vec3,
    cfg: &TraceConfig,
) -> Result<BTreeSet<Vec<u32>>> {
    let dirs = launch_directions(cfg.ray_spacing_deg)?;
    let mut out = BTreeSet::new();
    let mut seq = Vec::with_capacity(cfg.max_reflections as usize);
    for dir in dirs {
        seq.clear();
        let mut origin = tx;
        let mut d = dir;
        for _ in 0..cfg.max_reflections {
            let Some(hit) = bvh.intersect(origin, d, f64::INFINITY) else {
                break;
            };
            seq.push(hit.face_id);
            if !out.contains(seq.as_slice()) {
                out.insert(seq.clone());
            }
            d = reflect_dir(d, scene.faces[hit.face_id as usize].normal());
            origin = hit.point;
        }
    }
    Ok(out)
}

/// Image-method refinement of one candidate sequence. Returns the exact
/// specular path when it exists and survives validation.
fn refine_candidate(
    scene: &Scene,
    bvh: &Bvh,
    tx: Vec3,
    rx: Vec3,
    seq: &[u32],
    opts: &TraceOpts,
) -> Option<RayPath> {
    let faces: Vec<&crate::geometry::Face> =
        seq.iter().map(|&f| &scene.faces[f as usize]).collect();

    // Mirror tx across the sequence: images[j] is tx reflected j times.
    let mut images = Vec::with_capacity(seq.len() + 1);
    images.push(tx);
    for f in &faces {
        images.push(mirror_point(*images.last().unwrap(), f));
    }

    // Solve reflection points back from rx.
    let mut points = vec![Vec3::new(0.0, 0.0, 0.0); seq.len()];
    let mut target = rx;
    for j in (0..seq.len()).rev() {
        let face = faces[j];
        let image = images[j + 1];
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
        if !face.contains_projected(q, BARY_TOL) {
            return None;
        }
        points[j] = q;
        target = q;
    }

    // Assemble and validate the polyline.
    let mut poly = Vec::with_capacity(seq.len() + 2);
    poly.push(tx);
    poly.extend_from_slice(&points);
    poly.push(rx);
    for w in poly.windows(2) {
        if w[0].dist(w[1]) <= EPS_RAY {
            return None;
        }
    }
    for (i, w) in poly.windows(2).enumerate() {
        let is_last = i == seq.len();
        let blocked = if is_last {
            bvh.occluded_excluding(w[0], w[1], |f| opts.excludes(f))
        } else {
            bvh.occluded(w[0], w[1])
        };
        if blocked {
            return None;
        }
    }
    // Reflection-law check: the image construction is exact up to floating
    // point; reject anything that drifted.
    for (j, face) in faces.iter().enumerate() {
        let d_in = (poly[j + 1] - poly[j]).normalized();
        let d_out = (poly[j + 2] - poly[j + 1]).normalized();
        if d_in.dot(face.normal()).abs() < 1e-12 {
            return None; // grazing, no real reflection
        }
        if (reflect_dir(d_in, face.normal()) - d_out).norm() > 1e-9 {
            return None;
        }
    }

    let interactions = seq
        .iter()
        .zip(points.iter())
        .map(|(&face_id, &point)| Interaction::Reflect { face_id, point })
        .collect();
    Some(RayPath::new(tx, rx, interactions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::Material;
    use crate::geometry::mesh::{BoxSpec, MeshSpec, SceneDescription};
    use crate::geometry::build_accelerator;
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

    fn ground_scene(half: f64) -> Scene {
        Scene::from_description(SceneDescription {
            materials: materials(),
            boxes: vec![],
            meshes: vec![MeshSpec {
                vertices: vec![
                    [-half, -half, 0.0],
                    [half, -half, 0.0],
                    [half, half, 0.0],
                    [-half, half, 0.0],
                ],
                triangles: vec![[0, 1, 2], [0, 2, 3]],
                material: "concrete".into(),
            }],
        })
        .unwrap()
    }

    fn empty_scene() -> Scene {
        Scene::from_description(SceneDescription {
            materials: BTreeMap::new(),
            boxes: vec![],
            meshes: vec![],
        })
        .unwrap()
    }

    #[test]
    fn empty_scene_gives_only_los() {
        let scene = empty_scene();
        let bvh = build_accelerator(&scene);
        let tx = Vec3::new(0.0, 0.0, 5.0);
        let rx = Vec3::new(10.0, 0.0, 5.0);
        let paths =
            trace_specular(&scene, &bvh, tx, rx, &TraceConfig::default(), &TraceOpts::default())
                .unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].signature, "Tx-Rx");
        assert!((paths[0].length_m - 10.0).abs() < 1e-12);
    }

    #[test]
    fn ground_bounce_matches_image_construction() {
        let scene = ground_scene(50.0);
        let bvh = build_accelerator(&scene);
        let tx = Vec3::new(0.0, 0.0, 5.0);
        let rx = Vec3::new(10.0, 0.0, 5.0);
        let paths =
            trace_specular(&scene, &bvh, tx, rx, &TraceConfig::default(), &TraceOpts::default())
                .unwrap();
        assert_eq!(paths.len(), 2, "expected LOS + ground bounce, got {paths:?}");
        assert_eq!(paths[0].signature, "Tx-Rx");
        assert_eq!(paths[1].signature, "Tx-R-Rx");
        let bounce = &paths[1];
        assert!(bounce.interactions[0].point().dist(Vec3::new(5.0, 0.0, 0.0)) < 1e-9);
        assert!((bounce.length_m - 2.0 * 50f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn wall_blocks_los() {
        // A wall crossing the direct segment, reaching the ground.
        let scene = Scene::from_description(SceneDescription {
            materials: materials(),
            boxes: vec![BoxSpec {
                min: [4.9, -20.0, 0.0],
                max: [5.1, 20.0, 20.0],
                material: "concrete".into(),
            }],
            meshes: vec![],
        })
        .unwrap();
        let bvh = build_accelerator(&scene);
        let tx = Vec3::new(0.0, 0.0, 5.0);
        let rx = Vec3::new(10.0, 0.0, 5.0);
        let paths =
            trace_specular(&scene, &bvh, tx, rx, &TraceConfig::default(), &TraceOpts::default())
                .unwrap();
        assert!(paths.iter().all(|p| p.signature != "Tx-Rx"), "LOS must be absent");
    }

    #[test]
    fn reciprocity_of_path_lengths() {
        let scene = Scene::from_description(SceneDescription {
            materials: materials(),
            boxes: vec![BoxSpec {
                min: [-3.0, 6.0, 0.0],
                max: [9.0, 8.0, 12.0],
                material: "concrete".into(),
            }],
            meshes: vec![MeshSpec {
                vertices: vec![
                    [-20.0, -20.0, 0.0],
                    [20.0, -20.0, 0.0],
                    [20.0, 20.0, 0.0],
                    [-20.0, 20.0, 0.0],
                ],
                triangles: vec![[0, 1, 2], [0, 2, 3]],
                material: "concrete".into(),
            }],
        })
        .unwrap();
        let bvh = build_accelerator(&scene);
        let cfg = TraceConfig { max_reflections: 2, ..TraceConfig::default() };
        let a = Vec3::new(0.0, 0.0, 2.0);
        let b = Vec3::new(7.0, 1.0, 3.0);
        let fwd =
            trace_specular(&scene, &bvh, a, b, &cfg, &TraceOpts::default()).unwrap();
        let rev =
            trace_specular(&scene, &bvh, b, a, &cfg, &TraceOpts::default()).unwrap();
        let mut lf: Vec<f64> = fwd.iter().map(|p| p.length_m).collect();
        let mut lr: Vec<f64> = rev.iter().map(|p| p.length_m).collect();
        lf.sort_by(f64::total_cmp);
        lr.sort_by(f64::total_cmp);
        assert_eq!(lf.len(), lr.len());
        for (x, y) in lf.iter().zip(lr.iter()) {
            assert!((x - y).abs() < 1e-9, "lengths differ: {x} vs {y}");
        }
    }
}
