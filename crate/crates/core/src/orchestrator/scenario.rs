//! Canonical urban scenario generator: two orthogonal street corridors,
//! 20 concrete buildings with seeded heights, 6 routes along the streets,
//! and a sidewalk transmitter at 5 m.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::canonical::to_canonical_string;
use crate::em::itu_material;
use crate::error::{Error, Result};
use crate::geometry::mesh::{BoxSpec, MeshSpec, SceneDescription};
use crate::geometry::Vec3;
use crate::mobility::{assign_models, builtin_models, routes_to_file, Route};

/// Scenario knobs. The street layout, building count (20) and route count
/// (6) are fixed; the seed drives building heights, vehicle models, and
/// route speeds.
#[derive(Clone, Copy, Debug)]
pub struct ScenarioParams {
    pub seed: u64,
    pub n_uavs: u32,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams { seed: 1, n_uavs: 10 }
    }
}

/// Street half-width (roadway); sidewalks run from 10 to 12 m.
const STREET_HALF: f64 = 10.0;
/// Building footprint edge, meters.
const FOOTPRINT: f64 = 14.0;
/// Ground plane half-extent.
const GROUND_HALF: f64 = 80.0;

/// Canonical transmitter position: on the north sidewalk of the x street
/// near the crossing, antenna at 5 m.
pub fn canonical_tx_position() -> Vec3 {
    Vec3::new(15.0, STREET_HALF + 1.0, 5.0)
}

fn building_centers() -> Vec<(f64, f64)> {
    let mut centers = Vec::with_capacity(20);
    // Twelve flanking the x street, eight flanking the y street; the y
    // street skips the slots that would collide at the crossing corners.
    for &x in &[-57.0, -39.0, -21.0, 21.0, 39.0, 57.0] {
        for &y in &[-19.0, 19.0] {
            centers.push((x, y));
        }
    }
    for &y in &[-57.0, -39.0, 39.0, 57.0] {
        for &x in &[-19.0, 19.0] {
            centers.push((x, y));
        }
    }
    centers
}

fn canonical_routes(params: &ScenarioParams) -> Vec<Route> {
    let lane = 4.0;
    let reach = 70.0;
    let waypoint_sets: Vec<Vec<[f64; 2]>> = vec![
        vec![[-reach, -lane], [reach, -lane]],
        vec![[reach, lane], [-reach, lane]],
        vec![[lane, -reach], [lane, reach]],
        vec![[-lane, reach], [-lane, -reach]],
        vec![[-reach, -lane], [lane, -lane], [lane, reach]],
        vec![[-lane, reach], [-lane, lane], [reach, lane]],
    ];
    // Route speed: 70% of the slowest vehicle assigned to it, one decimal.
    let models = assign_models(params.n_uavs as usize, &builtin_models(), params.seed);
    waypoint_sets
        .into_iter()
        .enumerate()
        .map(|(r, wps)| {
            let v_min = (r..params.n_uavs as usize)
                .step_by(6)
                .map(|i| models[i].v_max_mps)
                .fold(f64::INFINITY, f64::min);
            let v_min = if v_min.is_finite() { v_min } else { 20.0 };
            let speed = (v_min * 0.7 * 10.0).round() / 10.0;
            Route {
                route_id: r as u32,
                waypoints: wps.iter().map(|&[x, y]| Vec3::new(x, y, 0.0)).collect(),
                speed_mps: speed,
            }
        })
        .collect()
}

/// Generate `scene.json`, `routes.json`, and a ready `config.json` into
/// `out_dir`. Identical parameters produce byte-identical files.
pub fn generate_scenario(out_dir: &Path, params: &ScenarioParams) -> Result<(PathBuf, PathBuf, PathBuf)> {
    if params.n_uavs == 0 || params.n_uavs > 99 {
        return Err(Error::Config(format!("n_uavs must be in 1..=99, got {}", params.n_uavs)));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut materials = BTreeMap::new();
    let concrete = itu_material("concrete", 60e9)?;
    let metal = itu_material("metal", 60e9)?;
    materials.insert("itu_concrete_60ghz".to_string(), concrete);
    materials.insert("metal".to_string(), metal);

    let boxes = building_centers()
        .into_iter()
        .map(|(x, y)| {
            let h: f64 = rng.random_range(10.0..=90.0);
            let half = FOOTPRINT / 2.0;
            BoxSpec {
                min: [x - half, y - half, 0.0],
                max: [x + half, y + half, h],
                material: "itu_concrete_60ghz".into(),
            }
        })
        .collect();

    let ground = MeshSpec {
        vertices: vec![
            [-GROUND_HALF, -GROUND_HALF, 0.0],
            [GROUND_HALF, -GROUND_HALF, 0.0],
            [GROUND_HALF, GROUND_HALF, 0.0],
            [-GROUND_HALF, GROUND_HALF, 0.0],
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        material: "itu_concrete_60ghz".into(),
    };

    let scene = SceneDescription { materials, boxes, meshes: vec![ground] };
    let scene_path = out_dir.join("scene.json");
    std::fs::write(&scene_path, to_canonical_string(&scene)? + "\n")?;

    let routes = canonical_routes(params);
    let routes_path = out_dir.join("routes.json");
    std::fs::write(&routes_path, to_canonical_string(&routes_to_file(&routes))? + "\n")?;

    let tx = canonical_tx_position();
    let config = serde_json::json!({
        "frequency_hz": 60e9,
        "tx_power_dbm": 0.0,
        "tx_position": [tx.x, tx.y, tx.z],
        "altitudes_m": [50.0, 100.0, 150.0],
        "t_sam_s": 0.1,
        "duration_s": 5.0,
        "ray_spacing_deg": 1.0,
        "max_reflections": 3,
        "l_max": 25,
        "ds_max_interactions": 2,
        "tile_area_m2": 1.0,
        "seed": params.seed,
        "n_uavs": params.n_uavs,
        "scene_path": "scene.json",
        "routes_path": "routes.json",
    });
    let config_path = out_dir.join("config.json");
    std::fs::write(&config_path, crate::canonical::canonical_json(&config)? + "\n")?;

    Ok((scene_path, routes_path, config_path))
}
