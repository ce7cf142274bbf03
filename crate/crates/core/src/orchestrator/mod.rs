//! End-to-end simulation flow: parse config, generate or load the scene and
//! routes, loop episodes over altitudes and scenes over time, trace every
//! receiver, and persist the dataset.
//!
//! Determinism contract: (config, seed) fully determines every output byte.
//! The seeded generator is ChaCha8 (a portable, explicitly specified
//! stream); scene results are computed independently per scene and written
//! in scene order, so the observable output does not depend on the degree
//! of parallelism. Completed scenes persist as part files and are skipped
//! on resume, which makes an aborted run reproducible after restart.

mod scenario;

pub use scenario::{generate_scenario, ScenarioParams};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{sha256_hex, to_canonical_string};
use crate::channel::{path_metrics, total_power, Antennas, CombineMode, PathMetrics};
use crate::dataset::{
    write_dataset, EpisodeDataset, EpisodeRecord, InteractionRecord, Manifest, PoseRecord,
    RayRecord, ReceiverRecord, SceneRecord,
};
use crate::error::{Error, Result};
use crate::geometry::{build_accelerator, load_scene, Scene, Vec3};
use crate::mobility::{
    assign_models, builtin_models, ingest_routes, place_uav, sample_trajectory_from, PoseSample,
    Route, VehicleModel,
};
use crate::geometry::build_accelerator_for;
use crate::raytracer::{
    build_tiles, compute_tx_illumination, diffuse_candidates, launch_directions,
    revalidate_illumination, scene_edges, select_top_l, specular_candidates,
    trace_diffraction_prepared, trace_specular_with_candidates, validate_diffuse_rx_side,
    DiffuseTiles, Interaction, RayPath, TraceConfig, TraceOpts, TxIllumination,
};

/// Arc-length stagger between UAVs sharing one route, meters.
const ROUTE_STAGGER_M: f64 = 25.0;

/// Resolved run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_position: Vec3,
    pub altitudes_m: Vec<f64>,
    pub t_sam_s: f64,
    pub duration_s: f64,
    pub ray_spacing_deg: f64,
    pub max_reflections: u32,
    pub l_max: usize,
    pub ds_max_interactions: u32,
    pub tile_area_m2: f64,
    pub seed: u64,
    pub n_uavs: u32,
    pub scene_path: PathBuf,
    pub routes_path: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            frequency_hz: 60e9,
            tx_power_dbm: 0.0,
            tx_position: Vec3::new(15.0, 11.0, 5.0),
            altitudes_m: vec![50.0, 100.0, 150.0],
            t_sam_s: 0.1,
            duration_s: 5.0,
            ray_spacing_deg: 1.0,
            max_reflections: 3,
            l_max: 25,
            ds_max_interactions: 2,
            tile_area_m2: 1.0,
            seed: 1,
            n_uavs: 10,
            scene_path: PathBuf::from("scene.json"),
            routes_path: PathBuf::from("routes.json"),
            out_dir: PathBuf::from("dataset"),
        }
    }
}

/// Raw config file: every field optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    frequency_hz: Option<f64>,
    tx_power_dbm: Option<f64>,
    tx_position: Option<[f64; 3]>,
    altitudes_m: Option<Vec<f64>>,
    t_sam_s: Option<f64>,
    duration_s: Option<f64>,
    ray_spacing_deg: Option<f64>,
    max_reflections: Option<u32>,
    l_max: Option<usize>,
    ds_max_interactions: Option<u32>,
    tile_area_m2: Option<f64>,
    seed: Option<u64>,
    n_uavs: Option<u32>,
    scene_path: Option<PathBuf>,
    routes_path: Option<PathBuf>,
    out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn trace_config(&self) -> TraceConfig {
        TraceConfig {
            ray_spacing_deg: self.ray_spacing_deg,
            max_reflections: self.max_reflections,
            l_max: self.l_max,
            ds_max_interactions: self.ds_max_interactions,
            tile_area_m2: self.tile_area_m2,
            f_hz: self.frequency_hz,
            tx_power_dbm: self.tx_power_dbm,
        }
    }

    /// Field-by-field validation with the offending field named.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if !(self.frequency_hz > 0.0) {
            return bad("frequency_hz", format!("must be positive, got {}", self.frequency_hz));
        }
        if !(self.t_sam_s > 0.0) {
            return bad("t_sam_s", format!("must be positive, got {}", self.t_sam_s));
        }
        if !(self.duration_s >= 0.0) {
            return bad("duration_s", format!("must be non-negative, got {}", self.duration_s));
        }
        if self.altitudes_m.is_empty() {
            return bad("altitudes_m", "must not be empty".into());
        }
        if self.altitudes_m.iter().any(|a| !(*a > 0.0)) {
            return bad("altitudes_m", "altitudes must be positive".into());
        }
        if launch_directions(self.ray_spacing_deg).is_err() {
            return bad(
                "ray_spacing_deg",
                format!("{} must be positive and divide 90 evenly", self.ray_spacing_deg),
            );
        }
        if self.l_max == 0 || self.l_max > 99 {
            return bad("l_max", format!("must be in 1..=99, got {}", self.l_max));
        }
        if self.ds_max_interactions == 0 {
            return bad("ds_max_interactions", "must be at least 1".into());
        }
        if !(self.tile_area_m2 > 0.0) {
            return bad("tile_area_m2", format!("must be positive, got {}", self.tile_area_m2));
        }
        if self.n_uavs == 0 || self.n_uavs > 99 {
            return bad("n_uavs", format!("must be in 1..=99, got {}", self.n_uavs));
        }
        if !self.tx_position.is_finite() {
            return bad("tx_position", "must be finite".into());
        }
        Ok(())
    }
}

/// Parse and validate a run configuration file. Relative scene/route paths
/// resolve against the config file's directory. Missing keys take the
/// stock defaults; unknown keys are errors.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let d = RunConfig::default();
    let mut cfg = RunConfig {
        frequency_hz: file.frequency_hz.unwrap_or(d.frequency_hz),
        tx_power_dbm: file.tx_power_dbm.unwrap_or(d.tx_power_dbm),
        tx_position: file.tx_position.map(Vec3::from).unwrap_or(d.tx_position),
        altitudes_m: file.altitudes_m.unwrap_or(d.altitudes_m),
        t_sam_s: file.t_sam_s.unwrap_or(d.t_sam_s),
        duration_s: file.duration_s.unwrap_or(d.duration_s),
        ray_spacing_deg: file.ray_spacing_deg.unwrap_or(d.ray_spacing_deg),
        max_reflections: file.max_reflections.unwrap_or(d.max_reflections),
        l_max: file.l_max.unwrap_or(d.l_max),
        ds_max_interactions: file.ds_max_interactions.unwrap_or(d.ds_max_interactions),
        tile_area_m2: file.tile_area_m2.unwrap_or(d.tile_area_m2),
        seed: file.seed.unwrap_or(d.seed),
        n_uavs: file.n_uavs.unwrap_or(d.n_uavs),
        scene_path: file.scene_path.unwrap_or(d.scene_path),
        routes_path: file.routes_path.unwrap_or(d.routes_path),
        out_dir: file.out_dir.unwrap_or(d.out_dir),
    };
    if let Some(dir) = path.parent() {
        if cfg.scene_path.is_relative() {
            cfg.scene_path = dir.join(&cfg.scene_path);
        }
        if cfg.routes_path.is_relative() {
            cfg.routes_path = dir.join(&cfg.routes_path);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Configuration snapshot stored per episode and hashed for the manifest.
/// Input files enter by content hash, not by path, so moving a dataset
/// around does not change its identity.
#[derive(Serialize)]
struct SnapshotConfig<'a> {
    frequency_hz: f64,
    tx_power_dbm: f64,
    tx_position: [f64; 3],
    altitudes_m: &'a [f64],
    t_sam_s: f64,
    duration_s: f64,
    ray_spacing_deg: f64,
    max_reflections: u32,
    l_max: usize,
    ds_max_interactions: u32,
    tile_area_m2: f64,
    seed: u64,
    n_uavs: u32,
    scene_sha256: String,
    routes_sha256: String,
}

fn config_snapshot(cfg: &RunConfig) -> Result<(serde_json::Value, String)> {
    let scene_bytes = std::fs::read(&cfg.scene_path)
        .map_err(|e| Error::Config(format!("scene_path {}: {e}", cfg.scene_path.display())))?;
    let routes_bytes = std::fs::read(&cfg.routes_path)
        .map_err(|e| Error::Config(format!("routes_path {}: {e}", cfg.routes_path.display())))?;
    let snap = SnapshotConfig {
        frequency_hz: cfg.frequency_hz,
        tx_power_dbm: cfg.tx_power_dbm,
        tx_position: cfg.tx_position.to_array(),
        altitudes_m: &cfg.altitudes_m,
        t_sam_s: cfg.t_sam_s,
        duration_s: cfg.duration_s,
        ray_spacing_deg: cfg.ray_spacing_deg,
        max_reflections: cfg.max_reflections,
        l_max: cfg.l_max,
        ds_max_interactions: cfg.ds_max_interactions,
        tile_area_m2: cfg.tile_area_m2,
        seed: cfg.seed,
        n_uavs: cfg.n_uavs,
        scene_sha256: sha256_hex(&scene_bytes),
        routes_sha256: sha256_hex(&routes_bytes),
    };
    let text = to_canonical_string(&snap)?;
    let hash = sha256_hex(text.as_bytes());
    let value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("snapshot round-trip: {e}")))?;
    Ok((value, hash))
}

/// One UAV's plan for the whole run: model, route, staggered trajectory.
struct UavPlan {
    uav_id: u32,
    model: VehicleModel,
    samples: Vec<PoseSample>,
}

fn plan_uavs(cfg: &RunConfig, routes: &[Route]) -> Result<Vec<UavPlan>> {
    let models = assign_models(cfg.n_uavs as usize, &builtin_models(), cfg.seed);
    let mut plans = Vec::with_capacity(cfg.n_uavs as usize);
    for i in 0..cfg.n_uavs as usize {
        let route = &routes[i % routes.len()];
        let model = models[i].clone();
        if route.speed_mps > model.v_max_mps + 1e-9 {
            return Err(Error::Config(format!(
                "uav {i}: route {} speed {} m/s exceeds model '{}' v_max {} m/s",
                route.route_id, route.speed_mps, model.name, model.v_max_mps
            )));
        }
        let offset = (i / routes.len()) as f64 * ROUTE_STAGGER_M;
        let samples = sample_trajectory_from(route, cfg.t_sam_s, cfg.duration_s, offset)?;
        plans.push(UavPlan { uav_id: i as u32, model, samples });
    }
    Ok(plans)
}

/// Records produced by one traced scene.
#[derive(Serialize, Deserialize)]
struct SceneChunk {
    scene: SceneRecord,
    receivers: Vec<ReceiverRecord>,
    rays: Vec<RayRecord>,
}

fn scenes_per_episode(cfg: &RunConfig) -> usize {
    (cfg.duration_s / cfg.t_sam_s + 1e-9).floor() as usize + 1
}

fn interaction_record(i: &Interaction) -> InteractionRecord {
    match i {
        Interaction::Reflect { face_id, point } => InteractionRecord {
            kind: "R".into(),
            point: point.to_array(),
            face_id: Some(*face_id),
            edge_id: None,
        },
        Interaction::Diffract { edge_id, point, .. } => InteractionRecord {
            kind: "D".into(),
            point: point.to_array(),
            face_id: None,
            edge_id: Some(*edge_id),
        },
        Interaction::Scatter { face_id, point, .. } => InteractionRecord {
            kind: "S".into(),
            point: point.to_array(),
            face_id: Some(*face_id),
            edge_id: None,
        },
    }
}

/// Receiver-independent assets computed once per run: the static scene
/// never moves and the transmitter is fixed, so static tiles and their
/// illumination are shared by every scene.
struct RunAssets {
    base: Scene,
    static_tiles: DiffuseTiles,
    static_illum: TxIllumination,
    trace_cfg: TraceConfig,
    antennas: Antennas,
}

impl RunAssets {
    fn prepare(cfg: &RunConfig, base: Scene) -> RunAssets {
        let trace_cfg = cfg.trace_config();
        let static_bvh = crate::geometry::build_accelerator(&base);
        let static_tiles = build_tiles(&base, trace_cfg.tile_area_m2);
        let static_illum =
            compute_tx_illumination(&base, &static_bvh, &static_tiles, cfg.tx_position, &trace_cfg);
        RunAssets {
            base,
            static_tiles,
            static_illum,
            trace_cfg,
            antennas: Antennas::vertical_dipoles(),
        }
    }
}

fn compute_scene_chunk(
    assets: &RunAssets,
    cfg: &RunConfig,
    plans: &[UavPlan],
    episode_id: u32,
    altitude_m: f64,
    k: usize,
) -> Result<SceneChunk> {
    let trace_cfg = &assets.trace_cfg;
    let antennas = &assets.antennas;
    let time_s = k as f64 * cfg.t_sam_s;
    let scene_id = episode_id as u64 * 100_000 + k as u64;

    let mut scene = assets.base.clone();
    let static_face_count = scene.faces.len();
    let mut placements = Vec::with_capacity(plans.len());
    for plan in plans {
        let placement = place_uav(plan.uav_id, &plan.samples[k], &plan.model, altitude_m)?;
        let material = scene.material_id(&placement.material_id).ok_or_else(|| {
            Error::Scene(format!("scene lacks material '{}'", placement.material_id))
        })?;
        let range = scene.append_triangles(&placement.body_triangles(), material)?;
        placements.push((placement, range));
    }

    let bvh = build_accelerator(&scene);
    let body_bvh = build_accelerator_for(&scene.faces[static_face_count..]);
    let edges = scene_edges(&scene);
    let mut tiles = assets.static_tiles.clone();
    tiles.append_dynamic(&scene.faces[static_face_count..], trace_cfg.tile_area_m2);
    let illum = revalidate_illumination(
        &scene,
        &bvh,
        &body_bvh,
        &tiles,
        &assets.static_illum,
        static_face_count,
        cfg.tx_position,
        trace_cfg,
    );
    let candidates = specular_candidates(&scene, &bvh, cfg.tx_position, trace_cfg)?;

    let poses = placements
        .iter()
        .map(|(p, _)| PoseRecord {
            uav_id: p.uav_id,
            position: p.body_center.to_array(),
            heading: plans[p.uav_id as usize].samples[k].heading.to_array(),
        })
        .collect();

    let mut receivers = Vec::with_capacity(placements.len());
    let mut rays = Vec::new();
    for (idx, (placement, range)) in placements.iter().enumerate() {
        let opts = TraceOpts { rx_exclude: Some(range.clone()) };
        let tx = cfg.tx_position;
        let rx = placement.rx_position;
        let mut paths =
            trace_specular_with_candidates(&scene, &bvh, &candidates, tx, rx, trace_cfg, &opts)?;
        paths.extend(trace_diffraction_prepared(&bvh, &edges, tx, rx, trace_cfg, &opts)?);

        let mut ranked: Vec<(RayPath, PathMetrics)> = Vec::with_capacity(paths.len());
        for path in paths {
            if let Some(m) = path_metrics(&path, &scene, antennas, trace_cfg)? {
                ranked.push((path, m));
            }
        }

        // Diffuse candidates are ranked before occlusion is checked:
        // visibility never changes a path's power, so validating in
        // descending power order until l_max survive yields exactly the
        // same top-L set as validating everything.
        let diffuse = diffuse_candidates(&scene, &tiles, &illum, tx, rx, trace_cfg, &opts)?;
        let mut diffuse_ranked: Vec<(RayPath, PathMetrics)> = Vec::with_capacity(diffuse.len());
        for path in diffuse {
            if let Some(m) = path_metrics(&path, &scene, antennas, trace_cfg)? {
                diffuse_ranked.push((path, m));
            }
        }
        diffuse_ranked.sort_by(|(pa, ma), (pb, mb)| {
            mb.power_dbm
                .total_cmp(&ma.power_dbm)
                .then(ma.delay_ns.total_cmp(&mb.delay_ns))
                .then(pa.signature.cmp(&pb.signature))
        });
        let mut accepted = 0;
        for (path, m) in diffuse_ranked {
            if accepted >= trace_cfg.l_max {
                break;
            }
            if validate_diffuse_rx_side(&bvh, &path, &opts) {
                accepted += 1;
                ranked.push((path, m));
            }
        }

        let kept = select_top_l(ranked, trace_cfg.l_max, |(p, m)| {
            (m.power_dbm, m.delay_ns, p.signature.clone())
        });

        let receiver_id = scene_id * 100 + idx as u64;
        let amplitudes: Vec<_> = kept.iter().map(|(_, m)| m.amplitude).collect();
        let los = !bvh.occluded_excluding(tx, rx, |f| opts.excludes(f));
        receivers.push(ReceiverRecord {
            receiver_id,
            scene_id,
            uav_id: placement.uav_id,
            rx_position: rx.to_array(),
            total_power_coherent_dbm: total_power(
                &amplitudes,
                CombineMode::Coherent,
                trace_cfg.tx_power_dbm,
            ),
            total_power_noncoherent_dbm: total_power(
                &amplitudes,
                CombineMode::Noncoherent,
                trace_cfg.tx_power_dbm,
            ),
            los,
            ray_count: kept.len() as u32,
        });
        for (rank, (path, m)) in kept.iter().enumerate() {
            rays.push(RayRecord {
                ray_id: receiver_id * 100 + rank as u64,
                receiver_id,
                power_dbm: m.power_dbm,
                delay_ns: m.delay_ns,
                aod_az_deg: m.aod_az_deg,
                aod_el_deg: m.aod_el_deg,
                aoa_az_deg: m.aoa_az_deg,
                aoa_el_deg: m.aoa_el_deg,
                los: m.los,
                signature: path.signature.clone(),
                interactions: path.interactions.iter().map(interaction_record).collect(),
            });
        }
    }

    Ok(SceneChunk {
        scene: SceneRecord { scene_id, episode_id, time_s, poses },
        receivers,
        rays,
    })
}

fn part_path(parts_dir: &Path, episode_id: u32, k: usize) -> PathBuf {
    parts_dir.join(format!("ep{episode_id:02}_sc{k:05}.json"))
}

/// Run the full simulation described by `cfg`. Completed scenes are
/// persisted under `<out_dir>/.parts` and skipped when the run is resumed
/// with an identical configuration.
pub fn run_simulation(cfg: &RunConfig) -> Result<Manifest> {
    Ok(run_simulation_limited(cfg, None)?.expect("unlimited run yields a manifest"))
}

/// `max_new_scenes` caps how many missing scenes are computed before the
/// run stops early (returning None), which models an aborted run in tests.
fn run_simulation_limited(cfg: &RunConfig, max_new_scenes: Option<usize>) -> Result<Option<Manifest>> {
    cfg.validate()?;
    // Surface config and file errors before any tracing starts.
    let (snapshot, config_hash) = config_snapshot(cfg)?;
    let base = load_scene(&cfg.scene_path)?;
    let routes = ingest_routes(&cfg.routes_path)?;
    if routes.is_empty() {
        return Err(Error::Routes("routes file has no routes".into()));
    }
    let plans = plan_uavs(cfg, &routes)?;
    let assets = RunAssets::prepare(cfg, base);
    let n_scenes = scenes_per_episode(cfg);

    let parts_dir = cfg.out_dir.join(".parts");
    std::fs::create_dir_all(&parts_dir)?;
    let meta_path = parts_dir.join("meta.json");
    let stale = match std::fs::read_to_string(&meta_path) {
        Ok(text) => text.trim() != config_hash,
        Err(_) => true,
    };
    if stale {
        // Drop any parts from a different configuration.
        for entry in std::fs::read_dir(&parts_dir)? {
            let entry = entry?;
            std::fs::remove_file(entry.path())?;
        }
        std::fs::write(&meta_path, &config_hash)?;
    }

    // Work list: every (episode, scene) without a part file.
    let mut pending: Vec<(u32, usize)> = Vec::new();
    for (e, _) in cfg.altitudes_m.iter().enumerate() {
        for k in 0..n_scenes {
            if !part_path(&parts_dir, e as u32, k).exists() {
                pending.push((e as u32, k));
            }
        }
    }
    if let Some(limit) = max_new_scenes {
        pending.truncate(limit);
    }

    // Batched parallel compute, parts written in scene order per batch.
    let batch = (rayon::current_num_threads() * 2).max(2);
    for work in pending.chunks(batch) {
        let chunks: Vec<(u32, usize, SceneChunk)> = work
            .par_iter()
            .map(|&(e, k)| {
                let chunk =
                    compute_scene_chunk(&assets, cfg, &plans, e, cfg.altitudes_m[e as usize], k)?;
                Ok((e, k, chunk))
            })
            .collect::<Result<_>>()?;
        for (e, k, chunk) in chunks {
            let text = to_canonical_string(&chunk)?;
            std::fs::write(part_path(&parts_dir, e, k), text)?;
        }
    }
    if max_new_scenes.is_some() {
        let done = cfg
            .altitudes_m
            .iter()
            .enumerate()
            .all(|(e, _)| (0..n_scenes).all(|k| part_path(&parts_dir, e as u32, k).exists()));
        if !done {
            return Ok(None);
        }
    }

    // Assemble the dataset in canonical order and finalize.
    let mut ds = EpisodeDataset::default();
    for (e, &altitude_m) in cfg.altitudes_m.iter().enumerate() {
        ds.episodes.push(EpisodeRecord {
            episode_id: e as u32,
            altitude_m,
            scene_count: n_scenes as u32,
            config: snapshot.clone(),
        });
        for k in 0..n_scenes {
            let path = part_path(&parts_dir, e as u32, k);
            let text = std::fs::read_to_string(&path)?;
            let chunk: SceneChunk = serde_json::from_str(&text)
                .map_err(|err| Error::Dataset(format!("corrupt part {}: {err}", path.display())))?;
            ds.scenes.push(chunk.scene);
            ds.receivers.extend(chunk.receivers);
            ds.rays.extend(chunk.rays);
        }
    }
    let manifest = write_dataset(&ds, &cfg.out_dir, &config_hash)?;
    std::fs::remove_dir_all(&parts_dir)?;
    Ok(Some(manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::dataset_hash;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn empty_config_takes_table_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "config.json", "{}");
        let cfg = parse_config(&path).unwrap();
        assert_eq!(cfg.frequency_hz, 60e9);
        assert_eq!(cfg.tx_power_dbm, 0.0);
        assert_eq!(cfg.ray_spacing_deg, 1.0);
        assert_eq!(cfg.l_max, 25);
        assert_eq!(cfg.t_sam_s, 0.1);
        assert_eq!(cfg.altitudes_m, vec![50.0, 100.0, 150.0]);
        assert_eq!(cfg.tx_position.z, 5.0);
        assert_eq!(cfg.n_uavs, 10);
        // relative paths resolve against the config directory
        assert_eq!(cfg.scene_path, dir.path().join("scene.json"));
    }

    #[test]
    fn negative_t_sam_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "config.json", r#"{"t_sam_s": -0.1}"#);
        let err = parse_config(&path).unwrap_err();
        assert!(err.to_string().contains("t_sam_s"), "message: {err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "config.json", r#"{"t_sam": 0.1}"#);
        let err = parse_config(&path).unwrap_err();
        assert!(err.to_string().contains("t_sam"), "message: {err}");
    }

    #[test]
    fn scene_count_formula() {
        let cfg = RunConfig { duration_s: 1.0, t_sam_s: 0.1, ..RunConfig::default() };
        assert_eq!(scenes_per_episode(&cfg), 11);
        let one = RunConfig { duration_s: 0.0, t_sam_s: 0.1, ..RunConfig::default() };
        assert_eq!(scenes_per_episode(&one), 1);
    }

    /// A small scenario for end-to-end orchestrator tests: two buildings,
    /// ground plane, two UAVs on one route.
    fn small_setup(dir: &Path, seed: u64) -> RunConfig {
        let scene = r#"{
            "materials": {
                "concrete": {"eps_real": 5.31, "sigma": 0.8967, "is_pec": false, "scattering_s": 0.4},
                "metal": {"eps_real": 1.0, "sigma": 0.0, "is_pec": true, "scattering_s": 0.2}
            },
            "boxes": [
                {"min": [-14.0, 6.0, 0.0], "max": [-2.0, 18.0, 22.0], "material": "concrete"},
                {"min": [4.0, 6.0, 0.0], "max": [16.0, 18.0, 35.0], "material": "concrete"}
            ],
            "meshes": [
                {"vertices": [[-30.0, -30.0, 0.0], [30.0, -30.0, 0.0], [30.0, 30.0, 0.0], [-30.0, 30.0, 0.0]],
                 "triangles": [[0, 1, 2], [0, 2, 3]],
                 "material": "concrete"}
            ]
        }"#;
        let routes = r#"{"routes": [{"id": 0, "speed_mps": 15.0, "waypoints": [[-20.0, 0.0], [20.0, 0.0]]}]}"#;
        write_file(dir, "scene.json", scene);
        write_file(dir, "routes.json", routes);
        RunConfig {
            duration_s: 0.2,
            altitudes_m: vec![30.0],
            n_uavs: 2,
            seed,
            ray_spacing_deg: 6.0,
            tx_position: Vec3::new(0.0, -10.0, 5.0),
            scene_path: dir.join("scene.json"),
            routes_path: dir.join("routes.json"),
            out_dir: dir.join("out"),
            ..RunConfig::default()
        }
    }

    #[test]
    fn run_is_deterministic_and_resumable() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_setup(dir.path(), 7);

        // Aborted run: two scenes, then stop.
        let partial = run_simulation_limited(&cfg, Some(2)).unwrap();
        assert!(partial.is_none());
        assert!(cfg.out_dir.join(".parts").exists());
        // Resume to completion.
        let m1 = run_simulation(&cfg).unwrap();
        assert!(!cfg.out_dir.join(".parts").exists());
        let h1 = dataset_hash(&cfg.out_dir).unwrap();

        // Fresh uninterrupted run elsewhere.
        cfg.out_dir = dir.path().join("out2");
        let m2 = run_simulation(&cfg).unwrap();
        let h2 = dataset_hash(&cfg.out_dir).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(h1, h2, "aborted+resumed dataset differs from a fresh run");

        // Sanity on the produced content.
        let ds = crate::dataset::read_dataset(&cfg.out_dir).unwrap();
        assert_eq!(ds.episodes.len(), 1);
        assert_eq!(ds.scenes.len(), 3);
        assert_eq!(ds.receivers.len(), 6);
        assert!(ds.rays.iter().all(|r| r.power_dbm.is_finite()));
        assert!(!ds.rays.is_empty());
    }

    #[test]
    fn different_seeds_differ() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_a = small_setup(dir.path(), 1);
        run_simulation(&cfg_a).unwrap();
        let ha = dataset_hash(&cfg_a.out_dir).unwrap();

        let dir_b = tempfile::tempdir().unwrap();
        let mut cfg_b = small_setup(dir_b.path(), 2);
        cfg_b.out_dir = dir_b.path().join("out");
        run_simulation(&cfg_b).unwrap();
        let hb = dataset_hash(&cfg_b.out_dir).unwrap();
        assert_ne!(ha, hb);
    }
}
