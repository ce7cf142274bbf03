//! Multipath search per (tx, rx, scene): line of sight, specular
//! reflections found by shooting-and-bouncing-rays discovery and made exact
//! with the image method, single knife-edge diffraction at building edges,
//! and single Lambertian diffuse scattering from surface tiles.
//!
//! All searches are deterministic: candidate sets are deduplicated and
//! ordered before emission, so the output does not depend on worker count
//! or iteration order.

mod diffraction;
mod diffuse;
mod specular;

pub use diffraction::{scene_edges, trace_diffraction, trace_diffraction_prepared, SceneEdges};
pub use diffuse::{
    build_tiles, compute_tx_illumination, diffuse_candidates, revalidate_illumination,
    trace_diffuse, trace_diffuse_prepared, validate_diffuse_rx_side, DiffuseTiles, Tile,
    TxIllumination,
};
pub use specular::{specular_candidates, trace_specular, trace_specular_with_candidates};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Tracer parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceConfig {
    /// Launch grid spacing in degrees; must divide 90 evenly.
    pub ray_spacing_deg: f64,
    /// Maximum specular bounces per path.
    pub max_reflections: u32,
    /// Number of strongest rays kept per receiver.
    pub l_max: usize,
    /// Maximum total surface interactions on a diffuse-scattering path
    /// (the path always contains exactly one scatter event).
    pub ds_max_interactions: u32,
    /// Target scattering tile area in m^2.
    pub tile_area_m2: f64,
    /// Carrier frequency in Hz.
    pub f_hz: f64,
    /// Transmit power in dBm.
    pub tx_power_dbm: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            ray_spacing_deg: 1.0,
            max_reflections: 3,
            l_max: 25,
            ds_max_interactions: 2,
            tile_area_m2: 1.0,
            f_hz: 60e9,
            tx_power_dbm: 0.0,
        }
    }
}

impl TraceConfig {
    pub fn wavelength(&self) -> f64 {
        crate::em::SPEED_OF_LIGHT / self.f_hz
    }
}

/// Per-receiver trace options.
#[derive(Clone, Debug, Default)]
pub struct TraceOpts {
    /// Face ids excluded from occluding the final segment into the
    /// receiver: the receiver's own body box. The antenna hangs beneath the
    /// body, so self-blockage of the mounting point is a modeling artifact,
    /// not geometry worth honoring.
    pub rx_exclude: Option<std::ops::Range<u32>>,
}

impl TraceOpts {
    pub fn excludes(&self, face_id: u32) -> bool {
        match &self.rx_exclude {
            Some(r) => r.contains(&face_id),
            None => false,
        }
    }
}

/// One surface interaction along a path.
#[derive(Clone, Debug, PartialEq)]
pub enum Interaction {
    Reflect { face_id: u32, point: Vec3 },
    Diffract { edge_id: u32, point: Vec3, nu: f64 },
    Scatter { face_id: u32, point: Vec3, tile_area: f64 },
}

impl Interaction {
    pub fn point(&self) -> Vec3 {
        match self {
            Interaction::Reflect { point, .. }
            | Interaction::Diffract { point, .. }
            | Interaction::Scatter { point, .. } => *point,
        }
    }

    pub fn kind_char(&self) -> char {
        match self {
            Interaction::Reflect { .. } => 'R',
            Interaction::Diffract { .. } => 'D',
            Interaction::Scatter { .. } => 'S',
        }
    }
}

/// One propagation path from tx to rx.
#[derive(Clone, Debug)]
pub struct RayPath {
    pub tx: Vec3,
    pub rx: Vec3,
    pub interactions: Vec<Interaction>,
    /// Geometric length, sum of segment lengths.
    pub length_m: f64,
    /// Unit direction of departure at tx (toward the first interaction).
    pub departure_dir: Vec3,
    /// Unit bearing at rx pointing back toward the last interaction (or tx).
    pub arrival_bearing: Vec3,
    /// Interaction signature like "Tx-R-S-Rx".
    pub signature: String,
}

impl RayPath {
    pub fn new(tx: Vec3, rx: Vec3, interactions: Vec<Interaction>) -> RayPath {
        let points = polyline(tx, rx, &interactions);
        let length_m = points.windows(2).map(|w| w[0].dist(w[1])).sum();
        let departure_dir = (points[1] - tx).normalized();
        let arrival_bearing = (points[points.len() - 2] - rx).normalized();
        let mut signature = String::from("Tx");
        for i in &interactions {
            signature.push('-');
            signature.push(i.kind_char());
        }
        signature.push_str("-Rx");
        RayPath { tx, rx, interactions, length_m, departure_dir, arrival_bearing, signature }
    }

    /// Full polyline tx, interaction points.., rx.
    pub fn points(&self) -> Vec<Vec3> {
        polyline(self.tx, self.rx, &self.interactions)
    }

    pub fn is_los(&self) -> bool {
        self.interactions.is_empty()
    }
}

fn polyline(tx: Vec3, rx: Vec3, interactions: &[Interaction]) -> Vec<Vec3> {
    let mut pts = Vec::with_capacity(interactions.len() + 2);
    pts.push(tx);
    pts.extend(interactions.iter().map(|i| i.point()));
    pts.push(rx);
    pts
}

/// Reflect direction `d` about unit normal `n` (two-sided).
pub(crate) fn reflect_dir(d: Vec3, n: Vec3) -> Vec3 {
    d - n * (2.0 * d.dot(n))
}

/// Azimuth-elevation launch grid: elevation from -90 to +90 in steps of
/// `spacing_deg`, a full azimuth ring per elevation, poles emitted once.
pub fn launch_directions(spacing_deg: f64) -> Result<Vec<Vec3>> {
    if !(spacing_deg > 0.0) || !spacing_deg.is_finite() {
        return Err(Error::Config(format!("ray spacing must be positive, got {spacing_deg}")));
    }
    let per_quadrant = 90.0 / spacing_deg;
    if (per_quadrant - per_quadrant.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "ray spacing {spacing_deg} deg must divide 90 evenly"
        )));
    }
    let n_el = (180.0 / spacing_deg).round() as i64;
    let n_az = (360.0 / spacing_deg).round() as i64;
    let mut dirs = Vec::new();
    for i in 0..=n_el {
        let el = (-90.0 + i as f64 * spacing_deg).to_radians();
        if i == 0 || i == n_el {
            dirs.push(Vec3::new(0.0, 0.0, el.sin().round()));
            continue;
        }
        let (sin_el, cos_el) = el.sin_cos();
        for j in 0..n_az {
            let az = (j as f64 * spacing_deg).to_radians();
            dirs.push(Vec3::new(cos_el * az.cos(), cos_el * az.sin(), sin_el));
        }
    }
    Ok(dirs)
}

/// Keep the strongest `l_max` items, sorted by power descending with ties
/// broken by delay ascending then signature.
pub fn select_top_l<T, F>(mut items: Vec<T>, l_max: usize, key: F) -> Vec<T>
where
    F: Fn(&T) -> (f64, f64, String),
{
    items.sort_by(|a, b| {
        let (pa, da, sa) = key(a);
        let (pb, db, sb) = key(b);
        pb.total_cmp(&pa).then(da.total_cmp(&db)).then(sa.cmp(&sb))
    });
    items.truncate(l_max);
    items
}
