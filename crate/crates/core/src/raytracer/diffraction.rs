//! Single knife-edge diffraction over building edges.
//!
//! Diffraction paths are emitted only when the direct segment is blocked.
//! Candidate edges are the crease and boundary edges of the mesh filtered
//! to near-vertical or near-horizontal orientation; edges lying flush
//! inside another surface (wall-ground junctions) are discarded. The bend
//! point on each edge minimizes total path length, and the clearance
//! parameter nu comes from the standard Fresnel-Kirchhoff construction.

use std::collections::BTreeMap;

use super::{Interaction, RayPath, TraceConfig, TraceOpts};
use crate::error::{Error, Result};
use crate::geometry::{Bvh, Face, Scene, Vec3, EPS_RAY};

/// One candidate diffracting edge.
#[derive(Clone, Debug)]
pub struct DiffractionEdge {
    pub a: Vec3,
    pub b: Vec3,
    /// Adjacent face ids; boundary edges have one.
    pub faces: Vec<u32>,
}

/// Deterministically ordered diffracting edges of a scene.
#[derive(Clone, Debug, Default)]
pub struct SceneEdges {
    pub edges: Vec<DiffractionEdge>,
}

type VKey = (u64, u64, u64);

fn vkey(v: Vec3) -> VKey {
    (v.x.to_bits(), v.y.to_bits(), v.z.to_bits())
}

const PLANE_TOL: f64 = 1e-6;

/// True when the edge lies flush inside non-adjacent coplanar faces at both
/// endpoints, e.g. the bottom edge of a wall standing on the ground plane.
/// Such junction edges cannot diffract.
fn edge_is_buried(scene: &Scene, a: Vec3, b: Vec3, adjacent: &[u32]) -> bool {
    // Faces whose supporting plane contains both endpoints.
    let mut in_plane: Vec<(&Face, bool, bool)> = Vec::new();
    for face in &scene.faces {
        if adjacent.contains(&face.face_id) {
            continue;
        }
        if face.plane_distance(a).abs() < PLANE_TOL && face.plane_distance(b).abs() < PLANE_TOL {
            let a_in = face.contains_projected(a, 1e-9);
            let b_in = face.contains_projected(b, 1e-9);
            if a_in || b_in {
                in_plane.push((face, a_in, b_in));
            }
        }
    }
    for (i, &(fa, a1, b1)) in in_plane.iter().enumerate() {
        if a1 && b1 {
            return true;
        }
        for &(fb, a2, b2) in &in_plane[i + 1..] {
            let coplanar = fa.normal().dot(fb.normal()).abs() > 1.0 - 1e-9;
            if coplanar && ((a1 && b2) || (a2 && b1)) {
                return true;
            }
        }
    }
    false
}

/// Extract crease and boundary edges, keeping only near-vertical or
/// near-horizontal ones (building silhouettes) that are not buried in
/// another surface.
pub fn scene_edges(scene: &Scene) -> SceneEdges {
    let mut map: BTreeMap<(VKey, VKey), (Vec3, Vec3, Vec<u32>)> = BTreeMap::new();
    for face in &scene.faces {
        let v = face.vertices;
        for (p, q) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            let (ka, kb) = (vkey(p), vkey(q));
            let (key, a, b) = if ka <= kb { ((ka, kb), p, q) } else { ((kb, ka), q, p) };
            map.entry(key).or_insert_with(|| (a, b, Vec::new())).2.push(face.face_id);
        }
    }
    let mut edges = Vec::new();
    for (_, (a, b, faces)) in map {
        let keep = match faces.len() {
            1 => true, // boundary edge
            2 => {
                let n0 = scene.faces[faces[0] as usize].normal();
                let n1 = scene.faces[faces[1] as usize].normal();
                n0.dot(n1).abs() < 1.0 - 1e-9 // crease, not coplanar
            }
            _ => false,
        };
        if !keep {
            continue;
        }
        let dir = match (b - a).try_normalized() {
            Some(d) => d,
            None => continue,
        };
        if dir.z.abs() > 0.99 || dir.z.abs() < 0.01 {
            if !edge_is_buried(scene, a, b, &faces) {
                edges.push(DiffractionEdge { a, b, faces });
            }
        }
    }
    SceneEdges { edges }
}

/// Golden-section minimum of total path length over the edge parameter.
fn bend_point(tx: Vec3, rx: Vec3, a: Vec3, b: Vec3) -> Vec3 {
    let total = |t: f64| {
        let p = a + (b - a) * t;
        tx.dist(p) + p.dist(rx)
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut t1 = hi - phi * (hi - lo);
    let mut t2 = lo + phi * (hi - lo);
    let mut f1 = total(t1);
    let mut f2 = total(t2);
    for _ in 0..100 {
        if f1 <= f2 {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - phi * (hi - lo);
            f1 = total(t1);
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + phi * (hi - lo);
            f2 = total(t2);
        }
    }
    a + (b - a) * ((lo + hi) / 2.0)
}

/// Trace first-order knife-edge diffraction paths. Empty when line of
/// sight is clear.
pub fn trace_diffraction(
    scene: &Scene,
    bvh: &Bvh,
    tx: Vec3,
    rx: Vec3,
    cfg: &TraceConfig,
    opts: &TraceOpts,
) -> Result<Vec<RayPath>> {
    let edges = scene_edges(scene);
    trace_diffraction_prepared(bvh, &edges, tx, rx, cfg, opts)
}

/// Diffraction search against precomputed scene edges.
pub fn trace_diffraction_prepared(
    bvh: &Bvh,
    edges: &SceneEdges,
    tx: Vec3,
    rx: Vec3,
    cfg: &TraceConfig,
    opts: &TraceOpts,
) -> Result<Vec<RayPath>> {
    if tx.dist(rx) <= EPS_RAY {
        return Err(Error::Invariant("tx and rx coincide".into()));
    }
    // Gate: diffraction only fills shadows.
    if !bvh.occluded_excluding(tx, rx, |f| opts.excludes(f)) {
        return Ok(Vec::new());
    }
    let lambda = cfg.wavelength();
    let line = rx - tx;
    let line_len = line.norm();
    let u = line / line_len;

    let mut paths = Vec::new();
    for (edge_id, edge) in edges.edges.iter().enumerate() {
        let p = bend_point(tx, rx, edge.a, edge.b);
        if tx.dist(p) <= EPS_RAY || p.dist(rx) <= EPS_RAY {
            continue;
        }
        // Clearance geometry: project the bend point onto the direct line.
        let s = (p - tx).dot(u);
        if s <= EPS_RAY || s >= line_len - EPS_RAY {
            continue;
        }
        let foot = tx + u * s;
        let h = p.dist(foot);
        let (d1, d2) = (s, line_len - s);
        let nu = h * (2.0 * (d1 + d2) / (lambda * d1 * d2)).sqrt();

        // Both legs must clear everything except the faces forming the edge.
        let adjacent = |f: u32| edge.faces.contains(&f);
        if bvh.occluded_excluding(tx, p, &adjacent) {
            continue;
        }
        if bvh.occluded_excluding(p, rx, |f| adjacent(f) || opts.excludes(f)) {
            continue;
        }
        paths.push(RayPath::new(
            tx,
            rx,
            vec![Interaction::Diffract { edge_id: edge_id as u32, point: p, nu }],
        ));
    }
    Ok(paths)
}
