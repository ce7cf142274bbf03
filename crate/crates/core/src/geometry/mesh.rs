//! Scene representation: triangle faces with per-face materials, plus the
//! JSON scene format. Boxes in the input are tessellated to triangles at
//! load time; everything downstream sees only triangles.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::aabb::Aabb;
use super::vec3::Vec3;
use crate::canonical;
use crate::em::Material;
use crate::error::{Error, Result};

/// Minimum hit distance: interaction points are offset by this much along
/// the ray so a surface never shadows itself.
pub const EPS_RAY: f64 = 1e-4;

/// Minimum face area in m^2; anything smaller is rejected as degenerate.
pub const MIN_FACE_AREA: f64 = 1e-9;

/// One triangle with a resolved material index and a stable id.
#[derive(Clone, Debug)]
pub struct Face {
    pub vertices: [Vec3; 3],
    pub material_id: u32,
    pub face_id: u32,
    normal: Vec3,
    area: f64,
}

impl Face {
    pub fn new(vertices: [Vec3; 3], material_id: u32, face_id: u32) -> Result<Face> {
        for v in &vertices {
            if !v.is_finite() {
                return Err(Error::Scene(format!("face {face_id}: non-finite vertex")));
            }
        }
        let cross = (vertices[1] - vertices[0]).cross(vertices[2] - vertices[0]);
        let area = 0.5 * cross.norm();
        if area <= MIN_FACE_AREA {
            return Err(Error::Scene(format!(
                "face {face_id}: degenerate triangle (area {area:.3e} m^2)"
            )));
        }
        Ok(Face { vertices, material_id, face_id, normal: cross.normalized(), area })
    }

    /// Unit normal as given by the vertex winding.
    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Vec3 {
        (self.vertices[0] + self.vertices[1] + self.vertices[2]) / 3.0
    }

    /// Signed distance of `p` from the supporting plane.
    pub fn plane_distance(&self, p: Vec3) -> f64 {
        (p - self.vertices[0]).dot(self.normal)
    }

    /// Barycentric coordinates (u, v) of the projection of `p` onto the
    /// supporting plane, with p ~ (1-u-v) v0 + u v1 + v v2.
    pub fn barycentric(&self, p: Vec3) -> (f64, f64) {
        let e1 = self.vertices[1] - self.vertices[0];
        let e2 = self.vertices[2] - self.vertices[0];
        let w = p - self.vertices[0];
        let d11 = e1.dot(e1);
        let d12 = e1.dot(e2);
        let d22 = e2.dot(e2);
        let dw1 = w.dot(e1);
        let dw2 = w.dot(e2);
        let denom = d11 * d22 - d12 * d12;
        ((d22 * dw1 - d12 * dw2) / denom, (d11 * dw2 - d12 * dw1) / denom)
    }

    pub fn contains_projected(&self, p: Vec3, tol: f64) -> bool {
        let (u, v) = self.barycentric(p);
        u >= -tol && v >= -tol && u + v <= 1.0 + tol
    }
}

/// Mirror a point across the supporting plane of a face.
pub fn mirror_point(p: Vec3, face: &Face) -> Vec3 {
    let n = face.normal();
    p - n * (2.0 * face.plane_distance(p))
}

// ---------------------------------------------------------------------------
// Scene JSON schema
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub material: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
    pub material: String,
}

/// The on-disk scene description. Kept inside `Scene` so that loading and
/// re-serializing a scene is idempotent.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescription {
    pub materials: BTreeMap<String, Material>,
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
    #[serde(default)]
    pub meshes: Vec<MeshSpec>,
}

/// Immutable scene: triangles, resolved materials, bounds.
#[derive(Clone, Debug)]
pub struct Scene {
    pub faces: Vec<Face>,
    materials: Vec<Material>,
    material_names: Vec<String>,
    pub bounds: Aabb,
    description: SceneDescription,
}

impl Scene {
    pub fn from_description(description: SceneDescription) -> Result<Scene> {
        let mut materials = Vec::new();
        let mut material_names = Vec::new();
        let mut index = BTreeMap::new();
        for (name, spec) in &description.materials {
            let mut m = spec.clone();
            m.name = name.clone();
            m.validate()?;
            index.insert(name.clone(), materials.len() as u32);
            material_names.push(name.clone());
            materials.push(m);
        }
        let lookup = |name: &str| -> Result<u32> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Scene(format!("unknown material '{name}'")))
        };

        let mut faces = Vec::new();
        for b in &description.boxes {
            let mat = lookup(&b.material)?;
            let lo = Vec3::from(b.min).min_by_component(Vec3::from(b.max));
            let hi = Vec3::from(b.min).max_by_component(Vec3::from(b.max));
            for tri in axis_box_triangles(lo, hi) {
                let id = faces.len() as u32;
                faces.push(Face::new(tri, mat, id)?);
            }
        }
        for m in &description.meshes {
            let mat = lookup(&m.material)?;
            for tri in &m.triangles {
                let fetch = |i: u32| -> Result<Vec3> {
                    m.vertices
                        .get(i as usize)
                        .map(|&a| Vec3::from(a))
                        .ok_or_else(|| Error::Scene(format!("triangle index {i} out of range")))
                };
                let id = faces.len() as u32;
                faces.push(Face::new([fetch(tri[0])?, fetch(tri[1])?, fetch(tri[2])?], mat, id)?);
            }
        }

        let mut bounds = Aabb::empty();
        for f in &faces {
            for &v in &f.vertices {
                bounds.grow(v);
            }
        }
        Ok(Scene { faces, materials, material_names, bounds, description })
    }

    pub fn material(&self, id: u32) -> &Material {
        &self.materials[id as usize]
    }

    pub fn material_name(&self, id: u32) -> &str {
        &self.material_names[id as usize]
    }

    pub fn material_id(&self, name: &str) -> Option<u32> {
        self.material_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn face_material(&self, face_id: u32) -> &Material {
        self.material(self.faces[face_id as usize].material_id)
    }

    pub fn description(&self) -> &SceneDescription {
        &self.description
    }

    /// Append extra triangles (UAV bodies) under an existing material.
    /// Returns the face id range they occupy. The description is not
    /// updated; appended geometry is per-snapshot, not part of the file.
    pub fn append_triangles(
        &mut self,
        triangles: &[[Vec3; 3]],
        material_id: u32,
    ) -> Result<std::ops::Range<u32>> {
        let start = self.faces.len() as u32;
        for tri in triangles {
            let id = self.faces.len() as u32;
            let face = Face::new(*tri, material_id, id)?;
            for &v in &face.vertices {
                self.bounds.grow(v);
            }
            self.faces.push(face);
        }
        Ok(start..self.faces.len() as u32)
    }
}

/// Load a scene file, tessellating boxes to triangles (12 per box).
pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Scene(format!("cannot read {}: {e}", path.display())))?;
    let description: SceneDescription = serde_json::from_str(&text)
        .map_err(|e| Error::Scene(format!("parse {}: {e}", path.display())))?;
    Scene::from_description(description)
}

/// Canonical serialization of the scene's source description.
pub fn serialize_scene(scene: &Scene) -> Result<String> {
    canonical::to_canonical_string(scene.description())
}

/// Tessellate an axis-aligned box into 12 triangles with outward normals.
pub fn axis_box_triangles(lo: Vec3, hi: Vec3) -> Vec<[Vec3; 3]> {
    oriented_box_triangles((lo + hi) * 0.5, hi - lo, 0.0)
}

/// Tessellate a box centered at `center` with dimensions `dims` (x = length,
/// y = width, z = height), rotated by `yaw` radians around +z. Outward
/// normals, 12 triangles.
pub fn oriented_box_triangles(center: Vec3, dims: Vec3, yaw: f64) -> Vec<[Vec3; 3]> {
    let (s, c) = yaw.sin_cos();
    let ex = Vec3::new(c, s, 0.0) * (dims.x * 0.5);
    let ey = Vec3::new(-s, c, 0.0) * (dims.y * 0.5);
    let ez = Vec3::new(0.0, 0.0, dims.z * 0.5);
    // corner(i) with bits (x, y, z)
    let corner = |bx: bool, by: bool, bz: bool| {
        center
            + ex * (if bx { 1.0 } else { -1.0 })
            + ey * (if by { 1.0 } else { -1.0 })
            + ez * (if bz { 1.0 } else { -1.0 })
    };
    let c000 = corner(false, false, false);
    let c100 = corner(true, false, false);
    let c010 = corner(false, true, false);
    let c110 = corner(true, true, false);
    let c001 = corner(false, false, true);
    let c101 = corner(true, false, true);
    let c011 = corner(false, true, true);
    let c111 = corner(true, true, true);
    // Each quad split into two triangles, wound counterclockwise when seen
    // from outside.
    vec![
        // -x
        [c000, c001, c011],
        [c000, c011, c010],
        // +x
        [c100, c110, c111],
        [c100, c111, c101],
        // -y
        [c000, c100, c101],
        [c000, c101, c001],
        // +y
        [c010, c011, c111],
        [c010, c111, c110],
        // -z
        [c000, c010, c110],
        [c000, c110, c100],
        // +z
        [c001, c101, c111],
        [c001, c111, c011],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn material_table(names: &[(&str, bool)]) -> BTreeMap<String, Material> {
        names
            .iter()
            .map(|&(n, pec)| {
                (
                    n.to_string(),
                    Material {
                        name: n.to_string(),
                        eps_real: if pec { 1.0 } else { 5.31 },
                        sigma: if pec { 0.0 } else { 0.9 },
                        is_pec: pec,
                        scattering_s: 0.3,
                    },
                )
            })
            .collect()
    }

    fn unit_box_scene(material: &str) -> SceneDescription {
        SceneDescription {
            materials: material_table(&[("metal", true), ("concrete", false)]),
            boxes: vec![BoxSpec {
                min: [0.0, 0.0, 0.0],
                max: [1.0, 1.0, 1.0],
                material: material.into(),
            }],
            meshes: vec![],
        }
    }

    #[test]
    fn unit_box_tessellates_to_12_outward_faces() {
        let scene = Scene::from_description(unit_box_scene("metal")).unwrap();
        assert_eq!(scene.faces.len(), 12);
        let center = Vec3::new(0.5, 0.5, 0.5);
        for f in &scene.faces {
            assert!(f.normal().dot(f.centroid() - center) > 0.0, "inward normal on {}", f.face_id);
            assert!((f.area() - 0.5).abs() < 1e-12);
        }
        // face ids contiguous
        for (i, f) in scene.faces.iter().enumerate() {
            assert_eq!(f.face_id, i as u32);
        }
    }

    #[test]
    fn unknown_material_is_an_error() {
        let err = Scene::from_description(unit_box_scene("carbon")).unwrap_err();
        assert!(err.to_string().contains("unknown material"));
    }

    #[test]
    fn degenerate_mesh_triangle_is_an_error() {
        let desc = SceneDescription {
            materials: material_table(&[("metal", true)]),
            boxes: vec![],
            meshes: vec![MeshSpec {
                vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
                triangles: vec![[0, 1, 2]],
                material: "metal".into(),
            }],
        };
        assert!(matches!(Scene::from_description(desc), Err(Error::Scene(_))));
    }

    #[test]
    fn mirror_point_examples() {
        let desc = SceneDescription {
            materials: material_table(&[("metal", true)]),
            boxes: vec![],
            meshes: vec![MeshSpec {
                vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
                triangles: vec![[0, 1, 2]],
                material: "metal".into(),
            }],
        };
        let scene = Scene::from_description(desc).unwrap();
        let f = &scene.faces[0];
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(mirror_point(p, f), Vec3::new(1.0, 2.0, -3.0));
        let on_plane = Vec3::new(0.3, 0.4, 0.0);
        assert!(mirror_point(on_plane, f).dist(on_plane) < 1e-15);
        assert!(mirror_point(mirror_point(p, f), f).dist(p) < 1e-12);
    }

    #[test]
    fn load_then_serialize_is_idempotent() {
        let scene = Scene::from_description(unit_box_scene("concrete")).unwrap();
        let s1 = serialize_scene(&scene).unwrap();
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        tmp.write_all(s1.as_bytes()).unwrap();
        let scene2 = load_scene(tmp.path()).unwrap();
        let s2 = serialize_scene(&scene2).unwrap();
        assert_eq!(s1, s2);
    }
}
