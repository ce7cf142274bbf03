//! The episode/scene/receiver/ray data model, JSONL persistence, queries,
//! SQL export, and plot-data emission.
//!
//! The canonical store is one JSONL file per table plus a manifest with row
//! counts and the config hash. Every line is canonical JSON (sorted keys,
//! 9 significant digits), which makes whole-dataset byte comparison a valid
//! determinism check. SQL is an export format layered on top.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::{sha256_hex, to_canonical_string};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EpisodeRecord {
    pub episode_id: u32,
    pub altitude_m: f64,
    pub scene_count: u32,
    /// Resolved run configuration snapshot.
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PoseRecord {
    pub uav_id: u32,
    pub position: [f64; 3],
    pub heading: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SceneRecord {
    pub scene_id: u64,
    pub episode_id: u32,
    pub time_s: f64,
    pub poses: Vec<PoseRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReceiverRecord {
    pub receiver_id: u64,
    pub scene_id: u64,
    pub uav_id: u32,
    pub rx_position: [f64; 3],
    /// None on outage (no rays reached the receiver).
    pub total_power_coherent_dbm: Option<f64>,
    pub total_power_noncoherent_dbm: Option<f64>,
    pub los: bool,
    pub ray_count: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InteractionRecord {
    /// "R", "D" or "S".
    pub kind: String,
    pub point: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub face_id: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub edge_id: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RayRecord {
    pub ray_id: u64,
    pub receiver_id: u64,
    pub power_dbm: f64,
    pub delay_ns: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    pub los: bool,
    pub signature: String,
    pub interactions: Vec<InteractionRecord>,
}

/// Full in-memory dataset.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct EpisodeDataset {
    pub episodes: Vec<EpisodeRecord>,
    pub scenes: Vec<SceneRecord>,
    pub receivers: Vec<ReceiverRecord>,
    pub rays: Vec<RayRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub episode_count: u64,
    pub scene_count: u64,
    pub receiver_count: u64,
    pub ray_count: u64,
    pub config_hash: String,
}

impl EpisodeDataset {
    /// Referential integrity and field sanity for every table.
    pub fn validate(&self) -> Result<()> {
        let episode_ids: BTreeSet<u32> = self.episodes.iter().map(|e| e.episode_id).collect();
        if episode_ids.len() != self.episodes.len() {
            return Err(Error::Dataset("duplicate episode ids".into()));
        }
        let scene_ids: BTreeSet<u64> = self.scenes.iter().map(|s| s.scene_id).collect();
        if scene_ids.len() != self.scenes.len() {
            return Err(Error::Dataset("duplicate scene ids".into()));
        }
        for s in &self.scenes {
            if !episode_ids.contains(&s.episode_id) {
                return Err(Error::Dataset(format!(
                    "scene {} references missing episode {}",
                    s.scene_id, s.episode_id
                )));
            }
        }
        let receiver_ids: BTreeSet<u64> = self.receivers.iter().map(|r| r.receiver_id).collect();
        if receiver_ids.len() != self.receivers.len() {
            return Err(Error::Dataset("duplicate receiver ids".into()));
        }
        for r in &self.receivers {
            if !scene_ids.contains(&r.scene_id) {
                return Err(Error::Dataset(format!(
                    "receiver {} references missing scene {}",
                    r.receiver_id, r.scene_id
                )));
            }
        }
        let mut rays_per_receiver: BTreeMap<u64, u32> = BTreeMap::new();
        let mut ray_ids: BTreeSet<u64> = BTreeSet::new();
        let mut last_power: BTreeMap<u64, f64> = BTreeMap::new();
        for ray in &self.rays {
            if !ray_ids.insert(ray.ray_id) {
                return Err(Error::Dataset(format!("duplicate ray id {}", ray.ray_id)));
            }
            if !receiver_ids.contains(&ray.receiver_id) {
                return Err(Error::Dataset(format!(
                    "ray {} references missing receiver {}",
                    ray.ray_id, ray.receiver_id
                )));
            }
            for v in [
                ray.power_dbm,
                ray.delay_ns,
                ray.aod_az_deg,
                ray.aod_el_deg,
                ray.aoa_az_deg,
                ray.aoa_el_deg,
            ] {
                if !v.is_finite() {
                    return Err(Error::Dataset(format!("ray {}: non-finite field", ray.ray_id)));
                }
            }
            if let Some(prev) = last_power.get(&ray.receiver_id) {
                if ray.power_dbm > *prev + 1e-12 {
                    return Err(Error::Dataset(format!(
                        "rays for receiver {} not sorted by power",
                        ray.receiver_id
                    )));
                }
            }
            last_power.insert(ray.receiver_id, ray.power_dbm);
            *rays_per_receiver.entry(ray.receiver_id).or_insert(0) += 1;
        }
        for r in &self.receivers {
            let n = rays_per_receiver.get(&r.receiver_id).copied().unwrap_or(0);
            if n != r.ray_count {
                return Err(Error::Dataset(format!(
                    "receiver {}: ray_count {} but {} ray rows",
                    r.receiver_id, r.ray_count, n
                )));
            }
        }
        Ok(())
    }
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&to_canonical_string(row)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Dataset(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| Error::Dataset(format!("parse {}: {e}", path.display())))
        })
        .collect()
}

/// Write the dataset as one JSONL file per table plus `manifest.json`.
/// `config_hash` identifies the run configuration that produced it.
pub fn write_dataset(ds: &EpisodeDataset, out_dir: &Path, config_hash: &str) -> Result<Manifest> {
    ds.validate()?;
    std::fs::create_dir_all(out_dir)?;
    write_jsonl(&out_dir.join("episodes.jsonl"), &ds.episodes)?;
    write_jsonl(&out_dir.join("scenes.jsonl"), &ds.scenes)?;
    write_jsonl(&out_dir.join("receivers.jsonl"), &ds.receivers)?;
    write_jsonl(&out_dir.join("rays.jsonl"), &ds.rays)?;
    let manifest = Manifest {
        episode_count: ds.episodes.len() as u64,
        scene_count: ds.scenes.len() as u64,
        receiver_count: ds.receivers.len() as u64,
        ray_count: ds.rays.len() as u64,
        config_hash: config_hash.to_string(),
    };
    std::fs::write(out_dir.join("manifest.json"), to_canonical_string(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Read a dataset directory back into memory.
pub fn read_dataset(dir: &Path) -> Result<EpisodeDataset> {
    let ds = EpisodeDataset {
        episodes: read_jsonl(&dir.join("episodes.jsonl"))?,
        scenes: read_jsonl(&dir.join("scenes.jsonl"))?,
        receivers: read_jsonl(&dir.join("receivers.jsonl"))?,
        rays: read_jsonl(&dir.join("rays.jsonl"))?,
    };
    ds.validate()?;
    Ok(ds)
}

/// Read the manifest of a dataset directory.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| Error::Dataset(format!("cannot read manifest: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Dataset(format!("parse manifest: {e}")))
}

/// SHA-256 over all dataset files, for determinism checks.
pub fn dataset_hash(dir: &Path) -> Result<String> {
    let mut combined = String::new();
    for name in ["episodes.jsonl", "scenes.jsonl", "receivers.jsonl", "rays.jsonl", "manifest.json"]
    {
        let bytes = std::fs::read(dir.join(name))?;
        combined.push_str(name);
        combined.push(':');
        combined.push_str(&sha256_hex(&bytes));
        combined.push('\n');
    }
    Ok(sha256_hex(combined.as_bytes()))
}

// ---------------------------------------------------------------------------
// Query
// ---------------------------------------------------------------------------

/// Row filter for [`query_rays`].
#[derive(Clone, Copy, Debug, Default)]
pub struct RayFilter {
    pub episode_id: Option<u32>,
    pub scene_id: Option<u64>,
    pub receiver_id: Option<u64>,
}

/// Rays matching the filter, in canonical order (receiver id, then the
/// stored power-descending order).
pub fn query_rays<'a>(ds: &'a EpisodeDataset, filter: &RayFilter) -> Vec<&'a RayRecord> {
    let scene_of: BTreeMap<u64, u64> =
        ds.receivers.iter().map(|r| (r.receiver_id, r.scene_id)).collect();
    let episode_of: BTreeMap<u64, u32> =
        ds.scenes.iter().map(|s| (s.scene_id, s.episode_id)).collect();
    let mut rows: Vec<&RayRecord> = ds
        .rays
        .iter()
        .filter(|ray| {
            if let Some(rid) = filter.receiver_id {
                if ray.receiver_id != rid {
                    return false;
                }
            }
            let sid = scene_of.get(&ray.receiver_id);
            if let Some(want) = filter.scene_id {
                if sid != Some(&want) {
                    return false;
                }
            }
            if let Some(want) = filter.episode_id {
                match sid.and_then(|s| episode_of.get(s)) {
                    Some(&e) if e == want => {}
                    _ => return false,
                }
            }
            true
        })
        .collect();
    rows.sort_by(|a, b| a.receiver_id.cmp(&b.receiver_id).then(a.ray_id.cmp(&b.ray_id)));
    rows
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

/// Plot metric selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotMetric {
    Power,
    Delay,
}

impl std::str::FromStr for PlotMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(PlotMetric::Power),
            "delay" => Ok(PlotMetric::Delay),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

/// Time series CSV `time_s,strongest,aggregate` for one UAV in one episode.
///
/// Power: strongest-ray power and the noncoherent total. Delay: strongest
/// ray delay and the power-weighted mean delay. Outage scenes keep their
/// row with empty values so gaps stay visible.
pub fn emit_plot_data(
    ds: &EpisodeDataset,
    uav_id: u32,
    episode_id: u32,
    metric: PlotMetric,
) -> Result<String> {
    if !ds.episodes.iter().any(|e| e.episode_id == episode_id) {
        return Err(Error::Dataset(format!("unknown episode {episode_id}")));
    }
    if !ds.receivers.iter().any(|r| r.uav_id == uav_id) {
        return Err(Error::Dataset(format!("unknown uav {uav_id}")));
    }
    let mut scenes: Vec<&SceneRecord> =
        ds.scenes.iter().filter(|s| s.episode_id == episode_id).collect();
    scenes.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
    let receivers: BTreeMap<u64, &ReceiverRecord> = ds
        .receivers
        .iter()
        .filter(|r| r.uav_id == uav_id)
        .map(|r| (r.scene_id, r))
        .collect();
    let mut rays_of: BTreeMap<u64, Vec<&RayRecord>> = BTreeMap::new();
    for ray in &ds.rays {
        rays_of.entry(ray.receiver_id).or_default().push(ray);
    }

    let mut csv = String::from("time_s,strongest,aggregate\n");
    for scene in scenes {
        let mut strongest = String::new();
        let mut aggregate = String::new();
        if let Some(recv) = receivers.get(&scene.scene_id) {
            if recv.ray_count > 0 {
                let rays = &rays_of[&recv.receiver_id];
                match metric {
                    PlotMetric::Power => {
                        strongest = fmt9(rays[0].power_dbm);
                        if let Some(p) = recv.total_power_noncoherent_dbm {
                            aggregate = fmt9(p);
                        }
                    }
                    PlotMetric::Delay => {
                        strongest = fmt9(rays[0].delay_ns);
                        let weights: f64 =
                            rays.iter().map(|r| 10f64.powf(r.power_dbm / 10.0)).sum();
                        let mean: f64 = rays
                            .iter()
                            .map(|r| r.delay_ns * 10f64.powf(r.power_dbm / 10.0))
                            .sum::<f64>()
                            / weights;
                        aggregate = fmt9(mean);
                    }
                }
            }
        }
        csv.push_str(&format!("{},{},{}\n", fmt9(scene.time_s), strongest, aggregate));
    }
    Ok(csv)
}

fn fmt9(x: f64) -> String {
    serde_json::Number::from_f64(crate::canonical::round_sig9(x))
        .map(|n| n.to_string())
        .unwrap_or_default()
}

// ---------------------------------------------------------------------------
// SQL export
// ---------------------------------------------------------------------------

/// DDL for the four tables with the rays -> receivers -> scenes -> episodes
/// foreign key chain.
pub fn export_sql_ddl() -> &'static str {
    "CREATE TABLE episodes (\n\
     \x20 episode_id INTEGER PRIMARY KEY,\n\
     \x20 altitude_m REAL NOT NULL,\n\
     \x20 scene_count INTEGER NOT NULL,\n\
     \x20 config TEXT NOT NULL\n\
     );\n\
     CREATE TABLE scenes (\n\
     \x20 scene_id INTEGER PRIMARY KEY,\n\
     \x20 episode_id INTEGER NOT NULL REFERENCES episodes(episode_id),\n\
     \x20 time_s REAL NOT NULL,\n\
     \x20 poses TEXT NOT NULL\n\
     );\n\
     CREATE TABLE receivers (\n\
     \x20 receiver_id INTEGER PRIMARY KEY,\n\
     \x20 scene_id INTEGER NOT NULL REFERENCES scenes(scene_id),\n\
     \x20 uav_id INTEGER NOT NULL,\n\
     \x20 rx_x REAL NOT NULL,\n\
     \x20 rx_y REAL NOT NULL,\n\
     \x20 rx_z REAL NOT NULL,\n\
     \x20 total_power_coherent_dbm REAL,\n\
     \x20 total_power_noncoherent_dbm REAL,\n\
     \x20 los INTEGER NOT NULL,\n\
     \x20 ray_count INTEGER NOT NULL\n\
     );\n\
     CREATE TABLE rays (\n\
     \x20 ray_id INTEGER PRIMARY KEY,\n\
     \x20 receiver_id INTEGER NOT NULL REFERENCES receivers(receiver_id),\n\
     \x20 power_dbm REAL NOT NULL,\n\
     \x20 delay_ns REAL NOT NULL,\n\
     \x20 aod_az_deg REAL NOT NULL,\n\
     \x20 aod_el_deg REAL NOT NULL,\n\
     \x20 aoa_az_deg REAL NOT NULL,\n\
     \x20 aoa_el_deg REAL NOT NULL,\n\
     \x20 los INTEGER NOT NULL,\n\
     \x20 signature TEXT NOT NULL,\n\
     \x20 interactions TEXT NOT NULL\n\
     );\n"
}

fn sql_str(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn sql_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => fmt9(x),
        None => "NULL".to_string(),
    }
}

/// DDL plus INSERT statements reproducing the dataset in any SQL engine.
pub fn export_sql(ds: &EpisodeDataset) -> Result<String> {
    ds.validate()?;
    let mut out = String::from(export_sql_ddl());
    out.push_str("BEGIN;\n");
    for e in &ds.episodes {
        out.push_str(&format!(
            "INSERT INTO episodes VALUES ({},{},{},{});\n",
            e.episode_id,
            fmt9(e.altitude_m),
            e.scene_count,
            sql_str(&crate::canonical::canonical_json(&e.config)?),
        ));
    }
    for s in &ds.scenes {
        out.push_str(&format!(
            "INSERT INTO scenes VALUES ({},{},{},{});\n",
            s.scene_id,
            s.episode_id,
            fmt9(s.time_s),
            sql_str(&to_canonical_string(&s.poses)?),
        ));
    }
    for r in &ds.receivers {
        out.push_str(&format!(
            "INSERT INTO receivers VALUES ({},{},{},{},{},{},{},{},{},{});\n",
            r.receiver_id,
            r.scene_id,
            r.uav_id,
            fmt9(r.rx_position[0]),
            fmt9(r.rx_position[1]),
            fmt9(r.rx_position[2]),
            sql_opt(r.total_power_coherent_dbm),
            sql_opt(r.total_power_noncoherent_dbm),
            r.los as u8,
            r.ray_count,
        ));
    }
    for ray in &ds.rays {
        out.push_str(&format!(
            "INSERT INTO rays VALUES ({},{},{},{},{},{},{},{},{},{},{});\n",
            ray.ray_id,
            ray.receiver_id,
            fmt9(ray.power_dbm),
            fmt9(ray.delay_ns),
            fmt9(ray.aod_az_deg),
            fmt9(ray.aod_el_deg),
            fmt9(ray.aoa_az_deg),
            fmt9(ray.aoa_el_deg),
            ray.los as u8,
            sql_str(&ray.signature),
            sql_str(&to_canonical_string(&ray.interactions)?),
        ));
    }
    out.push_str("COMMIT;\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset() -> EpisodeDataset {
        let config = serde_json::json!({"seed": 1, "frequency_hz": 60e9});
        EpisodeDataset {
            episodes: vec![EpisodeRecord {
                episode_id: 0,
                altitude_m: 100.0,
                scene_count: 1,
                config,
            }],
            scenes: vec![SceneRecord {
                scene_id: 0,
                episode_id: 0,
                time_s: 0.0,
                poses: vec![PoseRecord {
                    uav_id: 0,
                    position: [1.0, 2.0, 100.0],
                    heading: [1.0, 0.0, 0.0],
                }],
            }],
            receivers: vec![ReceiverRecord {
                receiver_id: 0,
                scene_id: 0,
                uav_id: 0,
                rx_position: [1.0, 2.0, 99.852],
                total_power_coherent_dbm: Some(-101.5),
                total_power_noncoherent_dbm: Some(-102.5),
                los: true,
                ray_count: 2,
            }],
            rays: vec![
                RayRecord {
                    ray_id: 0,
                    receiver_id: 0,
                    power_dbm: -105.0,
                    delay_ns: 333.6,
                    aod_az_deg: 10.0,
                    aod_el_deg: 80.0,
                    aoa_az_deg: 190.0,
                    aoa_el_deg: -80.0,
                    los: true,
                    signature: "Tx-Rx".into(),
                    interactions: vec![],
                },
                RayRecord {
                    ray_id: 1,
                    receiver_id: 0,
                    power_dbm: -110.0,
                    delay_ns: 340.1,
                    aod_az_deg: 15.0,
                    aod_el_deg: 70.0,
                    aoa_az_deg: 195.0,
                    aoa_el_deg: -75.0,
                    los: false,
                    signature: "Tx-R-Rx".into(),
                    interactions: vec![InteractionRecord {
                        kind: "R".into(),
                        point: [5.0, 5.0, 20.0],
                        face_id: Some(7),
                        edge_id: None,
                    }],
                },
            ],
        }
    }

    #[test]
    fn write_read_roundtrip_is_byte_identical() {
        let ds = tiny_dataset();
        let dir1 = tempfile::tempdir().unwrap();
        let m = write_dataset(&ds, dir1.path(), "cafe").unwrap();
        assert_eq!(
            (m.episode_count, m.scene_count, m.receiver_count, m.ray_count),
            (1, 1, 1, 2)
        );
        let back = read_dataset(dir1.path()).unwrap();
        assert_eq!(back, ds);
        let dir2 = tempfile::tempdir().unwrap();
        write_dataset(&back, dir2.path(), "cafe").unwrap();
        assert_eq!(dataset_hash(dir1.path()).unwrap(), dataset_hash(dir2.path()).unwrap());
        for name in ["episodes.jsonl", "scenes.jsonl", "receivers.jsonl", "rays.jsonl"] {
            let a = std::fs::read(dir1.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }

    #[test]
    fn missing_receiver_reference_is_rejected() {
        let mut ds = tiny_dataset();
        ds.rays[1].receiver_id = 99;
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(write_dataset(&ds, dir.path(), "x"), Err(Error::Dataset(_))));
    }

    #[test]
    fn ray_count_mismatch_is_rejected() {
        let mut ds = tiny_dataset();
        ds.receivers[0].ray_count = 1;
        assert!(ds.validate().is_err());
    }

    #[test]
    fn unsorted_rays_are_rejected() {
        let mut ds = tiny_dataset();
        ds.rays.swap(0, 1);
        assert!(ds.validate().is_err());
    }

    #[test]
    fn query_filters() {
        let ds = tiny_dataset();
        assert_eq!(query_rays(&ds, &RayFilter::default()).len(), 2);
        assert_eq!(
            query_rays(&ds, &RayFilter { receiver_id: Some(0), ..Default::default() }).len(),
            2
        );
        assert_eq!(
            query_rays(&ds, &RayFilter { scene_id: Some(42), ..Default::default() }).len(),
            0
        );
        let by_episode = query_rays(&ds, &RayFilter { episode_id: Some(0), ..Default::default() });
        assert_eq!(by_episode.len(), 2);
        // canonical order: power-descending storage order preserved
        assert!(by_episode[0].power_dbm >= by_episode[1].power_dbm);
    }

    #[test]
    fn plot_data_shapes() {
        let ds = tiny_dataset();
        let power = emit_plot_data(&ds, 0, 0, PlotMetric::Power).unwrap();
        let lines: Vec<&str> = power.lines().collect();
        assert_eq!(lines[0], "time_s,strongest,aggregate");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("0.0,-105.0,"));
        let delay = emit_plot_data(&ds, 0, 0, PlotMetric::Delay).unwrap();
        assert!(delay.lines().nth(1).unwrap().starts_with("0.0,333.6,"));
        assert!(emit_plot_data(&ds, 9, 0, PlotMetric::Power).is_err());
        assert!(emit_plot_data(&ds, 0, 9, PlotMetric::Power).is_err());
    }

    #[test]
    fn outage_scene_has_empty_values() {
        let mut ds = tiny_dataset();
        ds.scenes.push(SceneRecord { scene_id: 1, episode_id: 0, time_s: 0.1, poses: vec![] });
        ds.receivers.push(ReceiverRecord {
            receiver_id: 1,
            scene_id: 1,
            uav_id: 0,
            rx_position: [2.0, 2.0, 99.852],
            total_power_coherent_dbm: None,
            total_power_noncoherent_dbm: None,
            los: false,
            ray_count: 0,
        });
        ds.episodes[0].scene_count = 2;
        let csv = emit_plot_data(&ds, 0, 0, PlotMetric::Power).unwrap();
        let last = csv.lines().last().unwrap();
        assert_eq!(last, "0.1,,");
    }

    #[test]
    fn sql_export_has_all_inserts_and_ddl() {
        let ds = tiny_dataset();
        let sql = export_sql(&ds).unwrap();
        assert!(sql.contains("CREATE TABLE episodes"));
        assert!(sql.contains("REFERENCES receivers(receiver_id)"));
        assert_eq!(sql.matches("INSERT INTO rays").count(), 2);
        assert_eq!(sql.matches("INSERT INTO receivers").count(), 1);
        // empty dataset: DDL only
        let empty = export_sql(&EpisodeDataset::default()).unwrap();
        assert!(empty.contains("CREATE TABLE rays"));
        assert!(!empty.contains("INSERT"));
    }

    #[test]
    fn sql_replay_through_sqlite_reproduces_row_counts() {
        // Replay the generated SQL through sqlite via Python as an
        // independent reference engine; skip quietly when unavailable.
        let ds = tiny_dataset();
        let sql = export_sql(&ds).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let sql_path = dir.path().join("dump.sql");
        std::fs::write(&sql_path, &sql).unwrap();
        let script = format!(
            "import sqlite3\n\
             conn = sqlite3.connect(':memory:')\n\
             conn.executescript(open({sql_path:?}).read())\n\
             for table, want in [('episodes',1),('scenes',1),('receivers',1),('rays',2)]:\n\
             \x20   got = conn.execute('SELECT COUNT(*) FROM ' + table).fetchone()[0]\n\
             \x20   assert got == want, f'{{table}}: {{got}} != {{want}}'\n\
             print('ok')\n",
            sql_path = sql_path.display().to_string(),
        );
        let out = std::process::Command::new("python3").arg("-c").arg(&script).output();
        match out {
            Ok(o) if o.status.success() => {
                assert!(String::from_utf8_lossy(&o.stdout).contains("ok"));
            }
            Ok(o) => panic!(
                "sqlite replay failed:\n{}\n{}",
                String::from_utf8_lossy(&o.stdout),
                String::from_utf8_lossy(&o.stderr)
            ),
            Err(_) => eprintln!("python3 not available; sqlite replay skipped"),
        }
    }
}
