//! Exact 2D primitives for specular ray tracing: points, directed segments,
//! ray–segment intersection, mirroring, specular reflection, and segment
//! rotation. All angles at the public surface are degrees.

/// Point-coincidence tolerance in meters.
pub const GEOM_EPS: f64 = 1e-9;

/// Minimum ray parameter for "intersection ahead of origin". Keeps a
/// reflected ray from re-hitting the surface it just bounced off.
pub const RAY_T_EPS: f64 = 1e-6;

/// A point in the plane, coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_to(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A direction or displacement in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn between(from: Point, to: Point) -> Self {
        Vec2::new(to.x - from.x, to.y - from.y)
    }

    pub fn dot(&self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product (signed parallelogram area).
    pub fn cross(&self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    /// Unit vector in the same direction. Returns `None` for near-zero input.
    pub fn normalized(&self) -> Option<Vec2> {
        let n = self.norm();
        if n < GEOM_EPS {
            None
        } else {
            Some(self.scaled(1.0 / n))
        }
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(&self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() < 1e-9
    }
}

/// A directed line segment with distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance_to(self.b)
    }

    pub fn midpoint(&self) -> Point {
        Point::new((self.a.x + self.b.x) / 2.0, (self.a.y + self.b.y) / 2.0)
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::between(self.a, self.b)
    }

    /// Unit normal of the carrying line (left of the a→b direction).
    pub fn unit_normal(&self) -> Vec2 {
        self.direction()
            .perp()
            .normalized()
            .expect("degenerate segment has no normal")
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to_point(&self, p: Point) -> f64 {
        let d = self.direction();
        let len2 = d.dot(d);
        let t = if len2 < GEOM_EPS * GEOM_EPS {
            0.0
        } else {
            (Vec2::between(self.a, p).dot(d) / len2).clamp(0.0, 1.0)
        };
        let closest = Point::new(self.a.x + t * d.x, self.a.y + t * d.y);
        p.distance_to(closest)
    }
}

/// A ray with unit direction.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Point,
    pub dir: Vec2,
}

impl Ray {
    /// Builds a ray, normalizing `dir`. Returns `None` for a near-zero direction.
    pub fn new(origin: Point, dir: Vec2) -> Option<Self> {
        dir.normalized().map(|dir| Ray { origin, dir })
    }

    pub fn point_at(&self, t: f64) -> Point {
        Point::new(self.origin.x + t * self.dir.x, self.origin.y + t * self.dir.y)
    }
}

/// Result of a ray–segment intersection: distance along the ray and the hit point.
#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    pub t: f64,
    pub point: Point,
}

/// Intersects a ray with a segment. Returns the smallest `t > RAY_T_EPS` such
/// that `origin + t·dir` lies on the segment, endpoints inclusive within
/// [`GEOM_EPS`]. A ray collinear with the segment reports the nearest
/// endpoint ahead of the origin (the grazing contact). Absence of an
/// intersection is a value, not an error.
pub fn intersect_ray_segment(ray: &Ray, seg: &Segment) -> Option<RayHit> {
    let e = seg.direction();
    let denom = ray.dir.cross(e);
    let ao = Vec2::between(ray.origin, seg.a);

    if denom.abs() < GEOM_EPS {
        // Parallel. Only collinear rays can still touch the segment.
        if ao.cross(ray.dir).abs() >= GEOM_EPS {
            return None;
        }
        let ta = ao.dot(ray.dir);
        let tb = Vec2::between(ray.origin, seg.b).dot(ray.dir);
        let t = match (ta > RAY_T_EPS, tb > RAY_T_EPS) {
            (true, true) => ta.min(tb),
            (true, false) => ta,
            (false, true) => tb,
            (false, false) => return None,
        };
        return Some(RayHit { t, point: ray.point_at(t) });
    }

    let t = ao.cross(e) / denom;
    let u = ao.cross(ray.dir) / denom;
    let u_eps = GEOM_EPS / seg.length().max(GEOM_EPS);
    if t > RAY_T_EPS && u >= -u_eps && u <= 1.0 + u_eps {
        Some(RayHit { t, point: ray.point_at(t) })
    } else {
        None
    }
}

/// Reflects `p` across the infinite line through `seg`. Applying it twice
/// returns the input (within [`GEOM_EPS`]).
pub fn mirror_point(p: Point, seg: &Segment) -> Point {
    let d = seg
        .direction()
        .normalized()
        .expect("degenerate segment has no mirror line");
    let ap = Vec2::between(seg.a, p);
    let along = ap.dot(d);
    let foot = Point::new(seg.a.x + along * d.x, seg.a.y + along * d.y);
    Point::new(2.0 * foot.x - p.x, 2.0 * foot.y - p.y)
}

/// Specular reflection of unit direction `dir` off a surface with unit
/// normal `normal`: d' = d − 2(d·n)n.
pub fn reflect_dir(dir: Vec2, normal: Vec2) -> Vec2 {
    let k = 2.0 * dir.dot(normal);
    Vec2::new(dir.x - k * normal.x, dir.y - k * normal.y)
}

/// Rotates `p` by `angle_deg` degrees counter-clockwise about `pivot`.
pub fn rotate_point(p: Point, angle_deg: f64, pivot: Point) -> Point {
    if angle_deg == 0.0 {
        return p;
    }
    let rad = angle_deg.to_radians();
    let (sin, cos) = rad.sin_cos();
    let dx = p.x - pivot.x;
    let dy = p.y - pivot.y;
    Point::new(
        pivot.x + dx * cos - dy * sin,
        pivot.y + dx * sin + dy * cos,
    )
}

/// Rotates both endpoints of `seg` about `pivot`. Length is preserved.
pub fn rotate_segment(seg: &Segment, angle_deg: f64, pivot: Point) -> Segment {
    Segment::new(
        rotate_point(seg.a, angle_deg, pivot),
        rotate_point(seg.b, angle_deg, pivot),
    )
}
