//! Material models, Fresnel reflection, dipole antenna patterns, and
//! knife-edge diffraction loss.
//!
//! Everything here is a pure function of immutable values; the tracer and
//! channel math call into this module for every interaction coefficient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Peak gain of a half-wave dipole (linear).
pub const DIPOLE_PEAK_GAIN: f64 = 1.643;

/// Surface material: lossy dielectric described by a real relative
/// permittivity and a conductivity, or a perfect electric conductor.
/// `scattering_s` is the fraction of the incident field amplitude diverted
/// from the specular reflection into diffuse scattering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    #[serde(skip, default)]
    pub name: String,
    pub eps_real: f64,
    pub sigma: f64,
    #[serde(default)]
    pub is_pec: bool,
    #[serde(default)]
    pub scattering_s: f64,
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        if !self.is_pec && self.eps_real < 1.0 {
            return Err(Error::Scene(format!(
                "material '{}': eps_real {} < 1 for a dielectric",
                self.name, self.eps_real
            )));
        }
        if !(0.0..1.0).contains(&self.scattering_s) {
            return Err(Error::Scene(format!(
                "material '{}': scattering_s {} outside [0, 1)",
                self.name, self.scattering_s
            )));
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::Scene(format!(
                "material '{}': bad conductivity {}",
                self.name, self.sigma
            )));
        }
        Ok(())
    }

    /// Complex relative permittivity eps' - j sigma / (2 pi f eps0).
    pub fn complex_permittivity(&self, f_hz: f64) -> Complex64 {
        let eps_imag = self.sigma / (2.0 * std::f64::consts::PI * f_hz * EPSILON_0);
        Complex64::new(self.eps_real, -eps_imag)
    }
}

/// ITU-style material presets. Concrete follows the P.2040 frequency power
/// law for conductivity; metal is modeled as a PEC.
pub fn itu_material(name: &str, f_hz: f64) -> Result<Material> {
    match name {
        "concrete" => {
            let f_ghz = f_hz / 1e9;
            if !(1.0..=100.0).contains(&f_ghz) {
                return Err(Error::Config(format!(
                    "concrete model valid for 1-100 GHz, got {f_ghz} GHz"
                )));
            }
            Ok(Material {
                name: "concrete".into(),
                eps_real: 5.31,
                sigma: 0.0326 * f_ghz.powf(0.8095),
                is_pec: false,
                scattering_s: 0.4,
            })
        }
        "metal" => Ok(Material {
            name: "metal".into(),
            eps_real: 1.0,
            sigma: 0.0,
            is_pec: true,
            scattering_s: 0.2,
        }),
        other => Err(Error::Config(format!("unknown material preset '{other}'"))),
    }
}

/// Fresnel reflection coefficients (TE, TM) for air onto the material at
/// incidence cosine `cos_theta_i` (angle from the surface normal).
///
/// Sign convention: a PEC returns (-1, +1) in terms of the tracked field
/// components. Coherent sums across paths depend on this convention.
pub fn fresnel(material: &Material, cos_theta_i: f64, f_hz: f64) -> (Complex64, Complex64) {
    if material.is_pec {
        return (Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0));
    }
    let cos_i = cos_theta_i.clamp(0.0, 1.0);
    let sin2 = 1.0 - cos_i * cos_i;
    let eps = material.complex_permittivity(f_hz);
    let w = (eps - sin2).sqrt();
    let gamma_te = (cos_i - w) / (cos_i + w);
    let gamma_tm = (eps * cos_i - w) / (eps * cos_i + w);
    (gamma_te, gamma_tm)
}

/// Unpolarized reflection magnitude sqrt((|TE|^2 + |TM|^2) / 2).
pub fn fresnel_unpolarized_mag(material: &Material, cos_theta_i: f64, f_hz: f64) -> f64 {
    let (te, tm) = fresnel(material, cos_theta_i, f_hz);
    ((te.norm_sqr() + tm.norm_sqr()) / 2.0).sqrt()
}

/// Antenna pattern of one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AntennaPattern {
    Isotropic,
    /// Half-wave dipole oriented along `axis` (unit vector).
    HalfWaveDipole { axis: Vec3 },
}

impl AntennaPattern {
    pub fn vertical_dipole() -> Self {
        AntennaPattern::HalfWaveDipole { axis: crate::geometry::vec3::UNIT_Z }
    }

    /// Unit polarization vector of the radiated E field toward `dir`
    /// (the spherical theta direction for a dipole). `None` along the
    /// pattern null where the field vanishes.
    ///
    /// Isotropic elements are treated as vertically polarized so that
    /// coefficient bookkeeping stays well defined; along +-z the reference
    /// axis falls back to x.
    pub fn field_dir(&self, dir: Vec3) -> Option<Vec3> {
        let axis = match self {
            AntennaPattern::Isotropic => {
                if dir.z.abs() > 1.0 - 1e-9 {
                    crate::geometry::vec3::UNIT_X
                } else {
                    crate::geometry::vec3::UNIT_Z
                }
            }
            AntennaPattern::HalfWaveDipole { axis } => *axis,
        };
        let perp = axis - dir * axis.dot(dir);
        perp.try_normalized().map(|u| -u)
    }
}

/// Far-field power gain of the pattern toward unit direction `dir`.
///
/// Half-wave dipole: G(theta) = 1.643 [cos(pi/2 cos theta) / sin theta]^2
/// with theta measured from the dipole axis. Exactly 0 along the axis.
pub fn dipole_gain(pattern: &AntennaPattern, dir: Vec3) -> f64 {
    match pattern {
        AntennaPattern::Isotropic => 1.0,
        AntennaPattern::HalfWaveDipole { axis } => {
            let cos_t = axis.dot(dir).clamp(-1.0, 1.0);
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            if sin_t < 1e-9 {
                return 0.0;
            }
            let num = (std::f64::consts::FRAC_PI_2 * cos_t).cos();
            DIPOLE_PEAK_GAIN * (num / sin_t) * (num / sin_t)
        }
    }
}

/// Single knife-edge diffraction loss in dB as a function of the
/// Fresnel-Kirchhoff clearance parameter nu. Zero below the validity
/// threshold nu <= -0.78 (unobstructed enough to ignore).
pub fn knife_edge_loss(nu: f64) -> f64 {
    if nu <= -0.78 {
        return 0.0;
    }
    let t = nu - 0.1;
    6.9 + 20.0 * ((t * t + 1.0).sqrt() + t).log10()
}
