//! Route ingestion and time-stepped trajectory sampling, plus placement of
//! UAV bodies and receiver antennas at episode altitude.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{oriented_box_triangles, Vec3};

/// Receiver antenna offset below the body underside, meters.
pub const RX_OFFSET_M: f64 = 0.05;

/// A vehicle model: body box dimensions and speed limit.
#[derive(Clone, Debug, PartialEq)]
pub struct VehicleModel {
    pub name: String,
    pub length_mm: f64,
    pub width_mm: f64,
    pub height_mm: f64,
    pub v_max_mps: f64,
    pub material_id: String,
}

impl VehicleModel {
    pub fn height_m(&self) -> f64 {
        self.height_mm / 1000.0
    }

    pub fn dims_m(&self) -> Vec3 {
        Vec3::new(self.length_mm / 1000.0, self.width_mm / 1000.0, self.height_mm / 1000.0)
    }
}

/// The three stock UAV models (delivery, domestic, rural).
pub fn builtin_models() -> Vec<VehicleModel> {
    let mk = |name: &str, l: f64, w: f64, h: f64, v: f64| VehicleModel {
        name: name.to_string(),
        length_mm: l,
        width_mm: w,
        height_mm: h,
        v_max_mps: v,
        material_id: "metal".to_string(),
    };
    vec![
        mk("entregas", 914.0, 914.0, 336.0, 24.5),
        mk("domestico", 289.5, 289.5, 196.0, 20.0),
        mk("rural", 716.0, 220.0, 236.0, 23.0),
    ]
}

/// A planar route followed at constant speed.
#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub route_id: u32,
    /// Waypoints on the ground plane (z = 0).
    pub waypoints: Vec<Vec3>,
    pub speed_mps: f64,
}

impl Route {
    pub fn total_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::Routes(format!(
                "route {}: needs at least 2 waypoints",
                self.route_id
            )));
        }
        if self.speed_mps <= 0.0 || !self.speed_mps.is_finite() {
            return Err(Error::Routes(format!(
                "route {}: speed must be positive, got {}",
                self.route_id, self.speed_mps
            )));
        }
        for w in self.waypoints.windows(2) {
            if w[0].dist(w[1]) < 1e-9 {
                return Err(Error::Routes(format!(
                    "route {}: consecutive duplicate waypoints",
                    self.route_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RouteSpec {
    id: u32,
    speed_mps: f64,
    waypoints: Vec<[f64; 2]>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RoutesFile {
    routes: Vec<RouteSpec>,
}

/// Read and validate a routes file.
pub fn ingest_routes(path: &Path) -> Result<Vec<Route>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Routes(format!("cannot read {}: {e}", path.display())))?;
    let file: RoutesFile = serde_json::from_str(&text)
        .map_err(|e| Error::Routes(format!("parse {}: {e}", path.display())))?;
    let routes: Vec<Route> = file
        .routes
        .into_iter()
        .map(|r| Route {
            route_id: r.id,
            waypoints: r.waypoints.iter().map(|&[x, y]| Vec3::new(x, y, 0.0)).collect(),
            speed_mps: r.speed_mps,
        })
        .collect();
    for r in &routes {
        r.validate()?;
    }
    Ok(routes)
}

pub(crate) fn routes_to_file(routes: &[Route]) -> RoutesFile {
    RoutesFile {
        routes: routes
            .iter()
            .map(|r| RouteSpec {
                id: r.route_id,
                speed_mps: r.speed_mps,
                waypoints: r.waypoints.iter().map(|w| [w.x, w.y]).collect(),
            })
            .collect(),
    }
}

/// One time sample of a vehicle's pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseSample {
    pub time_s: f64,
    pub position: Vec3,
    /// Planar unit heading along the current segment.
    pub heading: Vec3,
}

/// Position and heading at arc length `s` along the route, holding at the
/// final waypoint once the route is complete.
fn pose_at_arc_length(route: &Route, s: f64) -> (Vec3, Vec3) {
    let mut remaining = s.max(0.0);
    for w in route.waypoints.windows(2) {
        let seg = w[1] - w[0];
        let len = seg.norm();
        if remaining <= len {
            let dir = seg / len;
            return (w[0] + dir * remaining, dir);
        }
        remaining -= len;
    }
    let n = route.waypoints.len();
    let last_dir = (route.waypoints[n - 1] - route.waypoints[n - 2]).normalized();
    (route.waypoints[n - 1], last_dir)
}

/// Sample the route at k * t_sam for k = 0..=floor(duration / t_sam).
pub fn sample_trajectory(route: &Route, t_sam: f64, duration: f64) -> Result<Vec<PoseSample>> {
    sample_trajectory_from(route, t_sam, duration, 0.0)
}

/// Like [`sample_trajectory`] but starting `start_offset_m` along the route,
/// which staggers several vehicles sharing one route.
pub fn sample_trajectory_from(
    route: &Route,
    t_sam: f64,
    duration: f64,
    start_offset_m: f64,
) -> Result<Vec<PoseSample>> {
    if t_sam <= 0.0 || !t_sam.is_finite() {
        return Err(Error::Config(format!("t_sam must be positive, got {t_sam}")));
    }
    route.validate()?;
    let steps = (duration / t_sam + 1e-9).floor() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let time_s = k as f64 * t_sam;
        let (position, heading) = pose_at_arc_length(route, start_offset_m + route.speed_mps * time_s);
        samples.push(PoseSample { time_s, position, heading });
    }
    Ok(samples)
}

/// A UAV inserted into one scene: body box pose plus the antenna point.
#[derive(Clone, Debug)]
pub struct Placement {
    pub uav_id: u32,
    pub body_center: Vec3,
    /// Body dimensions in meters (length, width, height).
    pub body_dims: Vec3,
    pub yaw: f64,
    pub rx_position: Vec3,
    pub material_id: String,
}

impl Placement {
    /// Body box triangles (12), heading-aligned.
    pub fn body_triangles(&self) -> Vec<[Vec3; 3]> {
        oriented_box_triangles(self.body_center, self.body_dims, self.yaw)
    }
}

/// Place a UAV body at episode altitude with the receiver antenna hanging
/// [`RX_OFFSET_M`] below the underside.
pub fn place_uav(
    uav_id: u32,
    pose: &PoseSample,
    model: &VehicleModel,
    altitude_m: f64,
) -> Result<Placement> {
    if altitude_m <= model.height_m() {
        return Err(Error::Config(format!(
            "uav {uav_id}: altitude {altitude_m} m below clearance for body height {} m",
            model.height_m()
        )));
    }
    let center = Vec3::new(pose.position.x, pose.position.y, altitude_m);
    let yaw = pose.heading.y.atan2(pose.heading.x);
    let rx_z = altitude_m - model.height_m() / 2.0 - RX_OFFSET_M;
    Ok(Placement {
        uav_id,
        body_center: center,
        body_dims: model.dims_m(),
        yaw,
        rx_position: Vec3::new(pose.position.x, pose.position.y, rx_z),
        material_id: model.material_id.clone(),
    })
}

/// Deterministic pseudo-random model assignment: same seed, same result.
pub fn assign_models(n_uavs: usize, models: &[VehicleModel], seed: u64) -> Vec<VehicleModel> {
    assert!(!models.is_empty(), "need at least one vehicle model");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_uavs).map(|_| models[rng.random_range(0..models.len())].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn straight_route(len: f64, speed: f64) -> Route {
        Route {
            route_id: 0,
            waypoints: vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(len, 0.0, 0.0)],
            speed_mps: speed,
        }
    }

    #[test]
    fn ingest_routes_file_roundtrip() {
        let json = r#"{"routes":[
            {"id":0,"speed_mps":10.0,"waypoints":[[0,0],[10,0]]},
            {"id":1,"speed_mps":12.0,"waypoints":[[0,0],[0,10],[10,10]]},
            {"id":2,"speed_mps":8.0,"waypoints":[[5,5],[15,5]]},
            {"id":3,"speed_mps":9.0,"waypoints":[[0,0],[3,4]]},
            {"id":4,"speed_mps":7.0,"waypoints":[[1,1],[2,2]]},
            {"id":5,"speed_mps":6.0,"waypoints":[[9,9],[0,9]]}
        ]}"#;
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        tmp.write_all(json.as_bytes()).unwrap();
        let routes = ingest_routes(tmp.path()).unwrap();
        assert_eq!(routes.len(), 6);
        assert_eq!(routes[1].waypoints.len(), 3);
        // 2 waypoints 10 m apart at 20 m/s -> 0.5 s to traverse
        let r = straight_route(10.0, 20.0);
        assert_relative_eq!(r.total_length() / r.speed_mps, 0.5);
    }

    #[test]
    fn negative_speed_rejected() {
        let json = r#"{"routes":[{"id":0,"speed_mps":-1.0,"waypoints":[[0,0],[10,0]]}]}"#;
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        tmp.write_all(json.as_bytes()).unwrap();
        assert!(matches!(ingest_routes(tmp.path()), Err(Error::Routes(_))));
    }

    #[test]
    fn straight_segment_sampling() {
        let r = straight_route(10.0, 20.0);
        let samples = sample_trajectory(&r, 0.1, 0.5).unwrap();
        assert_eq!(samples.len(), 6);
        for (k, s) in samples.iter().enumerate() {
            assert_relative_eq!(s.position.x, 2.0 * k as f64, epsilon = 1e-12);
            assert_eq!(s.position.y, 0.0);
        }
    }

    #[test]
    fn position_held_after_route_end() {
        let r = straight_route(10.0, 20.0);
        let samples = sample_trajectory(&r, 0.1, 2.0).unwrap();
        let last = samples.last().unwrap();
        assert_eq!(last.position, Vec3::new(10.0, 0.0, 0.0));
        assert_eq!(samples[10].position, Vec3::new(10.0, 0.0, 0.0));
    }

    #[test]
    fn l_shaped_route_arc_length_matches_brute_force() {
        let r = Route {
            route_id: 7,
            waypoints: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(7.0, 0.0, 0.0),
                Vec3::new(7.0, 5.0, 0.0),
            ],
            speed_mps: 4.0,
        };
        let samples = sample_trajectory(&r, 0.25, 2.5).unwrap();
        // Brute-force fine-step integration of traveled distance: 1024
        // fine steps per coarse step.
        let fine = sample_trajectory(&r, 0.25 / 1024.0, 2.5).unwrap();
        let mut prefix = vec![0.0];
        for w in fine.windows(2) {
            prefix.push(prefix.last().unwrap() + w[0].position.dist(w[1].position));
        }
        for (k, s) in samples.iter().enumerate() {
            let cum = prefix[k * 1024];
            let expected = (r.speed_mps * s.time_s).min(r.total_length());
            assert_relative_eq!(cum, expected, epsilon = 1e-9);
            // no overshoot at the corner
            assert!(s.position.x <= 7.0 + 1e-12 && s.position.y <= 5.0 + 1e-12);
        }
    }

    #[test]
    fn halved_step_reproduces_samples_on_straight_segments() {
        let r = straight_route(50.0, 11.0);
        let coarse = sample_trajectory(&r, 0.1, 1.0).unwrap();
        let fine = sample_trajectory(&r, 0.05, 1.0).unwrap();
        for (k, s) in coarse.iter().enumerate() {
            assert_eq!(s.position, fine[2 * k].position);
        }
    }

    #[test]
    fn sampled_speed_never_exceeds_route_speed() {
        let r = Route {
            route_id: 1,
            waypoints: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(3.0, 0.0, 0.0),
                Vec3::new(3.0, 3.0, 0.0),
                Vec3::new(0.0, 3.0, 0.0),
            ],
            speed_mps: 6.0,
        };
        let samples = sample_trajectory(&r, 0.07, 3.0).unwrap();
        for w in samples.windows(2) {
            let v = w[0].position.dist(w[1].position) / 0.07;
            assert!(v <= r.speed_mps + 1e-9, "sampled speed {v} exceeds limit");
        }
    }

    #[test]
    fn placement_matches_hand_values() {
        let models = builtin_models();
        let domestico = &models[1];
        let pose = PoseSample {
            time_s: 0.0,
            position: Vec3::new(3.0, 4.0, 0.0),
            heading: Vec3::new(1.0, 0.0, 0.0),
        };
        let p = place_uav(2, &pose, domestico, 100.0).unwrap();
        assert_eq!(p.body_center, Vec3::new(3.0, 4.0, 100.0));
        assert_relative_eq!(p.body_dims.z, 0.196);
        assert_relative_eq!(p.rx_position.z, 100.0 - 0.098 - 0.05, epsilon = 1e-12);
        // same xy at a different altitude, shifted z only
        let p50 = place_uav(2, &pose, domestico, 50.0).unwrap();
        assert_eq!(p50.rx_position.x, p.rx_position.x);
        assert_eq!(p50.rx_position.y, p.rx_position.y);
        assert_relative_eq!(p.rx_position.z - p50.rx_position.z, 50.0);
        // body never touches ground, antenna strictly below underside
        assert!(p.body_center.z - p.body_dims.z / 2.0 > 0.0);
        assert!(p.rx_position.z < p.body_center.z - p.body_dims.z / 2.0);
    }

    #[test]
    fn placement_rejects_low_altitude() {
        let models = builtin_models();
        let pose = PoseSample {
            time_s: 0.0,
            position: Vec3::new(0.0, 0.0, 0.0),
            heading: Vec3::new(1.0, 0.0, 0.0),
        };
        assert!(place_uav(0, &pose, &models[1], 0.1).is_err());
    }

    #[test]
    fn model_assignment_is_deterministic() {
        let models = builtin_models();
        let a = assign_models(10, &models, 42);
        let b = assign_models(10, &models, 42);
        assert_eq!(a, b);
        let names: std::collections::BTreeSet<&str> =
            a.iter().map(|m| m.name.as_str()).collect();
        assert!(!names.is_empty() && names.len() <= 3);
        let single = assign_models(10, &models[..1], 9);
        assert!(single.iter().all(|m| m.name == "entregas"));
    }
}
