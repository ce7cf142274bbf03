use super::vec3::Vec3;

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn of_points(points: &[Vec3]) -> Self {
        let mut b = Aabb::empty();
        for &p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.min_by_component(p);
        self.max = self.max.max_by_component(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn longest_axis(&self) -> usize {
        let d = self.max - self.min;
        if d.x >= d.y && d.x >= d.z {
            0
        } else if d.y >= d.z {
            1
        } else {
            2
        }
    }

    /// Slab test. Returns true when the ray segment [t0, t1] overlaps the box.
    pub fn hit_by(&self, origin: Vec3, inv_dir: Vec3, t0: f64, t1: f64) -> bool {
        let mut tmin = t0;
        let mut tmax = t1;
        for axis in 0..3 {
            let o = origin.component(axis);
            let inv = inv_dir.component(axis);
            let mut a = (self.min.component(axis) - o) * inv;
            let mut b = (self.max.component(axis) - o) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            // inv may be +-inf; NaN from 0*inf means the origin sits on the
            // slab boundary, treat as overlapping.
            if !a.is_nan() {
                tmin = tmin.max(a);
            }
            if !b.is_nan() {
                tmax = tmax.min(b);
            }
            if tmin > tmax {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_test_basics() {
        let b = Aabb::of_points(&[Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0)]);
        let o = Vec3::new(-1.0, 0.5, 0.5);
        let d = Vec3::new(1.0, 0.0, 0.0);
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        assert!(b.hit_by(o, inv, 0.0, 10.0));
        assert!(!b.hit_by(o, inv, 0.0, 0.5));
        let miss = Vec3::new(-1.0, 2.5, 0.5);
        assert!(!b.hit_by(miss, inv, 0.0, 10.0));
    }
}
