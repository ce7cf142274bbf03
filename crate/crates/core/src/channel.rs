//! Per-path complex amplitude, power, delay, and angles, plus narrowband
//! geometric MIMO synthesis.
//!
//! Amplitudes are referenced to the transmit voltage: received power in dBm
//! is 20 log10 |a| + tx power. Phase is e^{-j 2 pi d / lambda} per path with
//! interaction coefficient phases included and no random injection, so
//! coherent sums are reproducible. Polarization is tracked as a field
//! vector decomposed into TE/TM per reflection; diffuse paths use the
//! scalar Lambertian power form with phase from geometric length.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::em::{
    dipole_gain, fresnel, fresnel_unpolarized_mag, knife_edge_loss, AntennaPattern,
    SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::geometry::{Scene, Vec3};
use crate::raytracer::{Interaction, RayPath, TraceConfig};

/// Transmit and receive antenna patterns.
#[derive(Clone, Copy, Debug)]
pub struct Antennas {
    pub tx: AntennaPattern,
    pub rx: AntennaPattern,
}

impl Antennas {
    pub fn vertical_dipoles() -> Self {
        Antennas { tx: AntennaPattern::vertical_dipole(), rx: AntennaPattern::vertical_dipole() }
    }

    pub fn isotropic() -> Self {
        Antennas { tx: AntennaPattern::Isotropic, rx: AntennaPattern::Isotropic }
    }
}

/// Everything the dataset stores about one ray.
#[derive(Clone, Debug)]
pub struct PathMetrics {
    pub power_dbm: f64,
    pub amplitude: Complex64,
    pub delay_ns: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    pub los: bool,
}

// Complex 3-vector for polarization tracking.
#[derive(Clone, Copy)]
struct CVec3 {
    x: Complex64,
    y: Complex64,
    z: Complex64,
}

impl CVec3 {
    fn from_real(v: Vec3) -> Self {
        CVec3 { x: v.x.into(), y: v.y.into(), z: v.z.into() }
    }

    fn dot_real(&self, v: Vec3) -> Complex64 {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    fn add(self, o: CVec3) -> CVec3 {
        CVec3 { x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }
}

fn scaled(v: Vec3, c: Complex64) -> CVec3 {
    CVec3 { x: c * v.x, y: c * v.y, z: c * v.z }
}

/// Energy bound asserted at every reflection: the specular remainder plus
/// the scattered fraction may not exceed unity.
fn check_energy_bound(gamma: Complex64, s: f64) -> Result<()> {
    let g2 = gamma.norm_sqr();
    let eff2 = g2 * (1.0 - s * s);
    if eff2 + s * s * g2 > 1.0 + 1e-9 {
        return Err(Error::Invariant(format!(
            "energy bound violated: |G_eff|^2 + S^2 |G|^2 = {} > 1",
            eff2 + s * s * g2
        )));
    }
    Ok(())
}

/// Any unit vector orthogonal to `d`.
fn any_perpendicular(d: Vec3) -> Vec3 {
    let probe = if d.x.abs() < 0.9 { crate::geometry::vec3::UNIT_X } else { crate::geometry::vec3::UNIT_Y };
    d.cross(probe).normalized()
}

/// Rotate `v` by the minimal rotation taking unit `from` onto unit `to`.
fn rotate_align(v: Vec3, from: Vec3, to: Vec3) -> Vec3 {
    let c = from.dot(to).clamp(-1.0, 1.0);
    let axis = from.cross(to);
    let s = axis.norm();
    if s < 1e-12 {
        if c > 0.0 {
            return v;
        }
        // antiparallel: rotate half-turn around any perpendicular
        let a = any_perpendicular(from);
        return a * (2.0 * v.dot(a)) - v;
    }
    let k = axis / s;
    // Rodrigues
    v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c))
}

/// Complex amplitude of one traced path.
///
/// Line-of-sight and specular paths: sqrt(Gt Gr) (lambda / 4 pi d)
/// e^{-j2pi d/lambda} with TE/TM reflection coefficients reduced by
/// sqrt(1 - S^2) per bounce and the field projected onto the receive
/// polarization. Diffracted paths: the same spreading with the knife-edge
/// loss 10^{-J(nu)/20}. Diffuse paths: the bistatic Lambertian power form
/// P = Pt Gt Gr lambda^2 S^2 |G|^2 A cos(ti) cos(ts) / (16 pi^3 ri^2 rs^2),
/// times the power loss of any extra specular leg.
pub fn path_amplitude(
    path: &RayPath,
    scene: &Scene,
    antennas: &Antennas,
    cfg: &TraceConfig,
) -> Result<Complex64> {
    if path.length_m <= crate::geometry::EPS_RAY {
        return Err(Error::Invariant("zero-length path".into()));
    }
    let lambda = cfg.wavelength();
    let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * path.length_m / lambda);
    let gt = dipole_gain(&antennas.tx, path.departure_dir);
    let gr = dipole_gain(&antennas.rx, path.arrival_bearing);
    if gt == 0.0 || gr == 0.0 {
        return Ok(Complex64::ZERO);
    }

    let has_scatter =
        path.interactions.iter().any(|i| matches!(i, Interaction::Scatter { .. }));
    if has_scatter {
        return scatter_amplitude(path, scene, cfg, gt, gr, lambda, phase);
    }

    let spreading = lambda / (4.0 * std::f64::consts::PI * path.length_m);
    let pts = path.points();

    if let Some(Interaction::Diffract { nu, .. }) =
        path.interactions.iter().find(|i| matches!(i, Interaction::Diffract { .. }))
    {
        let loss = 10f64.powf(-knife_edge_loss(*nu) / 20.0);
        // Parallel-transport the transmit polarization across the bend.
        let e_tx = antennas.tx.field_dir(path.departure_dir).unwrap_or(Vec3::new(0.0, 0.0, 0.0));
        let d0 = (pts[1] - pts[0]).normalized();
        let d1 = (pts[2] - pts[1]).normalized();
        let e_at_rx = rotate_align(e_tx, d0, d1);
        let l_rx = antennas.rx.field_dir(path.arrival_bearing).unwrap_or(Vec3::new(0.0, 0.0, 0.0));
        let proj = e_at_rx.dot(l_rx);
        return Ok(phase * (gt * gr).sqrt() * spreading * loss * proj);
    }

    // LOS / pure specular: full polarization tracking.
    let e_tx = match antennas.tx.field_dir(path.departure_dir) {
        Some(e) => e,
        None => return Ok(Complex64::ZERO),
    };
    let mut field = CVec3::from_real(e_tx);
    for (j, inter) in path.interactions.iter().enumerate() {
        let Interaction::Reflect { face_id, point } = inter else {
            return Err(Error::Invariant(format!(
                "unexpected interaction {inter:?} on specular path"
            )));
        };
        let face = &scene.faces[*face_id as usize];
        let mat = scene.face_material(*face_id);
        let n = face.normal();
        let d_in = (*point - pts[j]).normalized();
        let d_out = (pts[j + 2] - *point).normalized();
        let cos_i = d_in.dot(n).abs();
        let (g_te, g_tm) = fresnel(mat, cos_i, cfg.f_hz);
        let s = mat.scattering_s;
        check_energy_bound(g_te, s)?;
        check_energy_bound(g_tm, s)?;
        let keep = (1.0 - s * s).sqrt();
        let s_hat = match d_in.cross(n).try_normalized() {
            Some(v) => v,
            None => any_perpendicular(d_in), // normal incidence, plane is free
        };
        let p_in = s_hat.cross(d_in);
        let p_out = s_hat.cross(d_out);
        let e_s = field.dot_real(s_hat);
        let e_p = field.dot_real(p_in);
        field = scaled(s_hat, e_s * g_te * keep).add(scaled(p_out, e_p * g_tm * keep));
    }
    let l_rx = match antennas.rx.field_dir(path.arrival_bearing) {
        Some(l) => l,
        None => return Ok(Complex64::ZERO),
    };
    let proj = field.dot_real(l_rx);
    Ok(phase * (gt * gr).sqrt() * spreading * proj)
}

fn scatter_amplitude(
    path: &RayPath,
    scene: &Scene,
    cfg: &TraceConfig,
    gt: f64,
    gr: f64,
    lambda: f64,
    phase: Complex64,
) -> Result<Complex64> {
    let pts = path.points();
    let scatter_idx = path
        .interactions
        .iter()
        .position(|i| matches!(i, Interaction::Scatter { .. }))
        .expect("caller checked");
    let Interaction::Scatter { face_id, point, tile_area } = &path.interactions[scatter_idx]
    else {
        unreachable!();
    };
    let r_i: f64 =
        (0..=scatter_idx).map(|i| pts[i].dist(pts[i + 1])).sum();
    let r_s: f64 =
        (scatter_idx + 1..pts.len() - 1).map(|i| pts[i].dist(pts[i + 1])).sum();
    if r_i <= 0.0 || r_s <= 0.0 {
        return Err(Error::Invariant("degenerate scatter geometry".into()));
    }
    let face = &scene.faces[*face_id as usize];
    let mat = scene.face_material(*face_id);
    let n = face.normal();
    let d_in = (*point - pts[scatter_idx]).normalized();
    let d_out = (pts[scatter_idx + 2] - *point).normalized();
    let cos_i = d_in.dot(n).abs();
    let cos_s = d_out.dot(n).abs();
    let s = mat.scattering_s;
    let gamma = fresnel_unpolarized_mag(mat, cos_i, cfg.f_hz);
    {
        let (g_te, g_tm) = fresnel(mat, cos_i, cfg.f_hz);
        check_energy_bound(g_te, s)?;
        check_energy_bound(g_tm, s)?;
    }

    let mut x = gt * gr * lambda * lambda * s * s * gamma * gamma * tile_area * cos_i * cos_s
        / (16.0 * std::f64::consts::PI.powi(3) * r_i * r_i * r_s * r_s);

    // Extra specular legs multiply in their power loss.
    for (j, inter) in path.interactions.iter().enumerate() {
        if let Interaction::Reflect { face_id, point } = inter {
            let face = &scene.faces[*face_id as usize];
            let mat_r = scene.face_material(*face_id);
            let d_in_r = (*point - pts[j]).normalized();
            let cos_r = d_in_r.dot(face.normal()).abs();
            let g = fresnel_unpolarized_mag(mat_r, cos_r, cfg.f_hz);
            let (g_te, g_tm) = fresnel(mat_r, cos_r, cfg.f_hz);
            check_energy_bound(g_te, mat_r.scattering_s)?;
            check_energy_bound(g_tm, mat_r.scattering_s)?;
            x *= g * g * (1.0 - mat_r.scattering_s * mat_r.scattering_s);
        }
    }
    Ok(phase * x.sqrt())
}

/// Propagation delay in nanoseconds.
pub fn path_delay(path: &RayPath) -> Result<f64> {
    if path.length_m <= 0.0 {
        return Err(Error::Invariant("degenerate path".into()));
    }
    Ok(path.length_m / SPEED_OF_LIGHT * 1e9)
}

fn angles_of(dir: Vec3) -> (f64, f64) {
    let mut az = dir.y.atan2(dir.x).to_degrees();
    if az < 0.0 {
        az += 360.0;
    }
    if az >= 360.0 {
        az = 0.0;
    }
    let el = dir.z.clamp(-1.0, 1.0).asin().to_degrees();
    (az, el)
}

/// Departure and arrival angles in degrees: azimuth counterclockwise from
/// +x in [0, 360), elevation from the horizontal plane in [-90, +90].
pub fn path_angles(path: &RayPath) -> (f64, f64, f64, f64) {
    let (aod_az, aod_el) = angles_of(path.departure_dir);
    let (aoa_az, aoa_el) = angles_of(path.arrival_bearing);
    (aod_az, aod_el, aoa_az, aoa_el)
}

/// Full per-path metrics; `None` when the path departs or arrives exactly
/// in a pattern null and carries no power.
pub fn path_metrics(
    path: &RayPath,
    scene: &Scene,
    antennas: &Antennas,
    cfg: &TraceConfig,
) -> Result<Option<PathMetrics>> {
    let amplitude = path_amplitude(path, scene, antennas, cfg)?;
    if amplitude.norm() == 0.0 {
        return Ok(None);
    }
    let (aod_az_deg, aod_el_deg, aoa_az_deg, aoa_el_deg) = path_angles(path);
    Ok(Some(PathMetrics {
        power_dbm: 20.0 * amplitude.norm().log10() + cfg.tx_power_dbm,
        amplitude,
        delay_ns: path_delay(path)?,
        aod_az_deg,
        aod_el_deg,
        aoa_az_deg,
        aoa_el_deg,
        los: path.is_los(),
    }))
}

/// Aggregation mode for per-receiver totals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineMode {
    Coherent,
    Noncoherent,
}

/// Total received power in dBm; `None` on an empty path set (outage).
pub fn total_power(amplitudes: &[Complex64], mode: CombineMode, tx_power_dbm: f64) -> Option<f64> {
    if amplitudes.is_empty() {
        return None;
    }
    let p = match mode {
        CombineMode::Coherent => {
            let sum: Complex64 = amplitudes.iter().sum();
            sum.norm_sqr()
        }
        CombineMode::Noncoherent => amplitudes.iter().map(|a| a.norm_sqr()).sum(),
    };
    Some(10.0 * p.log10() + tx_power_dbm)
}

/// Element positions in wavelength units.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub elements: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    pub fn single() -> Self {
        ArrayGeometry { elements: vec![[0.0, 0.0, 0.0]] }
    }

    /// Uniform linear array along +y with the given spacing in wavelengths.
    pub fn linear(n: usize, spacing_wl: f64) -> Self {
        ArrayGeometry {
            elements: (0..n).map(|i| [0.0, i as f64 * spacing_wl, 0.0]).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("array descriptor: {e}")))
    }
}

/// One path's contribution to the MIMO channel.
#[derive(Clone, Debug)]
pub struct PathContribution {
    pub amplitude: Complex64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
}

impl From<&PathMetrics> for PathContribution {
    fn from(m: &PathMetrics) -> Self {
        PathContribution {
            amplitude: m.amplitude,
            aod_az_deg: m.aod_az_deg,
            aod_el_deg: m.aod_el_deg,
            aoa_az_deg: m.aoa_az_deg,
            aoa_el_deg: m.aoa_el_deg,
        }
    }
}

/// Narrowband MIMO channel matrix, rows = receive elements.
#[derive(Clone, Debug)]
pub struct MimoChannel {
    pub nr: usize,
    pub nt: usize,
    /// Row-major entries.
    pub entries: Vec<Complex64>,
    pub f_hz: f64,
}

impl MimoChannel {
    pub fn entry(&self, r: usize, t: usize) -> Complex64 {
        self.entries[r * self.nt + t]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn unit_from_angles(az_deg: f64, el_deg: f64) -> Vec3 {
    let (az, el) = (az_deg.to_radians(), el_deg.to_radians());
    Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

fn steering(elements: &[[f64; 3]], az_deg: f64, el_deg: f64) -> Vec<Complex64> {
    let u = unit_from_angles(az_deg, el_deg);
    elements
        .iter()
        .map(|&p| {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * Vec3::from(p).dot(u))
        })
        .collect()
}

/// H = sum_k a_k v_rx(angles_k) v_tx(angles_k)^H with planar-wavefront
/// steering vectors over the given element positions.
pub fn synthesize_mimo(
    contributions: &[PathContribution],
    tx_array: &ArrayGeometry,
    rx_array: &ArrayGeometry,
    f_hz: f64,
) -> Result<MimoChannel> {
    if contributions.is_empty() {
        return Err(Error::Invariant("no paths to synthesize a channel from".into()));
    }
    let nt = tx_array.elements.len();
    let nr = rx_array.elements.len();
    let mut entries = vec![Complex64::ZERO; nr * nt];
    for c in contributions {
        let v_tx = steering(&tx_array.elements, c.aod_az_deg, c.aod_el_deg);
        let v_rx = steering(&rx_array.elements, c.aoa_az_deg, c.aoa_el_deg);
        for r in 0..nr {
            for t in 0..nt {
                entries[r * nt + t] += c.amplitude * v_rx[r] * v_tx[t].conj();
            }
        }
    }
    Ok(MimoChannel { nr, nt, entries, f_hz })
}
