//! Shared test support: a brute-force ray-launching tracer (the independent
//! oracle for the image method) and a generator of random well-separated
//! scenes it can be trusted on.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ris_sim_core::geometry::{
    intersect_ray_segment, mirror_point, reflect_dir, Point, Ray, Segment, Vec2, RAY_T_EPS,
};
use ris_sim_core::scene::{AppliedScene, Rect, Transmitter};

/// One launched-path family: all rays that reached the receiver after the
/// same bounce sequence. `length_m` comes from the best-aligned member.
#[derive(Debug, Clone)]
pub struct LaunchedFamily {
    pub order: usize,
    pub walls: Vec<usize>,
    pub length_m: f64,
    pub miss_m: f64,
}

/// Launches `n_rays` uniformly spaced rays from `tx`, follows specular
/// bounces up to `max_order`, and records every pass within
/// `capture_radius` of `rx`.
pub fn launch_oracle(
    walls: &[Segment],
    tx: Point,
    rx: Point,
    n_rays: usize,
    max_order: usize,
    capture_radius: f64,
) -> Vec<LaunchedFamily> {
    let mut families: Vec<LaunchedFamily> = Vec::new();
    for k in 0..n_rays {
        let theta = std::f64::consts::TAU * (k as f64) / (n_rays as f64);
        let mut pos = tx;
        let mut dir = Vec2::new(theta.cos(), theta.sin());
        let mut seq: Vec<usize> = Vec::new();
        let mut travelled = 0.0;

        for bounce in 0..=max_order {
            let ray = Ray { origin: pos, dir };
            let mut hit: Option<(usize, f64, Point)> = None;
            for (w, wall) in walls.iter().enumerate() {
                if let Some(h) = intersect_ray_segment(&ray, wall) {
                    if hit.as_ref().is_none_or(|(_, t, _)| h.t < *t) {
                        hit = Some((w, h.t, h.point));
                    }
                }
            }
            let t_end = hit.as_ref().map_or(10_000.0, |(_, t, _)| *t);

            // Closest approach to the receiver along this leg.
            let to_rx = Vec2::between(pos, rx);
            let t_ca = to_rx.dot(dir).clamp(0.0, t_end);
            let closest = ray.point_at(t_ca);
            let miss = closest.distance_to(rx);
            if miss <= capture_radius {
                let length_m = travelled + t_ca;
                match families
                    .iter_mut()
                    .find(|f| f.order == bounce && f.walls == seq)
                {
                    Some(f) => {
                        if miss < f.miss_m {
                            f.miss_m = miss;
                            f.length_m = length_m;
                        }
                    }
                    None => families.push(LaunchedFamily {
                        order: bounce,
                        walls: seq.clone(),
                        length_m,
                        miss_m: miss,
                    }),
                }
            }

            let Some((w, t, point)) = hit else { break };
            let mut normal = walls[w].unit_normal();
            if dir.dot(normal) > 0.0 {
                normal = normal.scaled(-1.0);
            }
            dir = reflect_dir(dir, normal);
            travelled += t;
            pos = point;
            seq.push(w);
        }
    }
    families
}

// ---------------------------------------------------------------------------
// Random scene generation with margin-based rejection
// ---------------------------------------------------------------------------

fn segment_distance(a: &Segment, b: &Segment) -> f64 {
    let crossing = {
        let d1 = a.direction();
        let d2 = b.direction();
        let denom = d1.cross(d2);
        if denom.abs() < 1e-12 {
            false
        } else {
            let ao = Vec2::between(a.a, b.a);
            let t = ao.cross(d2) / denom;
            let u = ao.cross(d1) / denom;
            (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
        }
    };
    if crossing {
        return 0.0;
    }
    a.distance_to_point(b.a)
        .min(a.distance_to_point(b.b))
        .min(b.distance_to_point(a.a))
        .min(b.distance_to_point(a.b))
}

/// Walks one image-method candidate with configurable slack. Returns the
/// path vertices when every bounce lands on its (slack-extended) wall and
/// every leg clears the (slack-shrunk) occluders.
fn image_candidate(
    walls: &[Segment],
    tx: Point,
    rx: Point,
    seq: &[usize],
    endpoint_slack_m: f64,
    occlusion_slack_m: f64,
) -> Option<Vec<Point>> {
    let mut images = Vec::with_capacity(seq.len());
    let mut from = tx;
    for &w in seq {
        from = mirror_point(from, &walls[w]);
        images.push(from);
    }

    let mut vertices = vec![rx];
    let mut cur = rx;
    for i in (0..seq.len()).rev() {
        let wall = &walls[seq[i]];
        let img = images[i];
        let to_img = Vec2::between(cur, img);
        let dist = to_img.norm();
        if dist < 1e-6 {
            return None;
        }
        let dir = to_img.scaled(1.0 / dist);
        let e = wall.direction();
        let denom = dir.cross(e);
        if denom.abs() < 1e-12 {
            return None;
        }
        let ao = Vec2::between(cur, wall.a);
        let t = ao.cross(e) / denom;
        let u = ao.cross(dir) / denom;
        let u_slack = endpoint_slack_m / wall.length();
        if !(t > RAY_T_EPS && t < dist - RAY_T_EPS) {
            return None;
        }
        if !(u >= -u_slack && u <= 1.0 + u_slack) {
            return None;
        }
        let bounce = Point::new(cur.x + t * dir.x, cur.y + t * dir.y);
        vertices.push(bounce);
        cur = bounce;
    }
    vertices.push(tx);
    vertices.reverse();

    for leg in vertices.windows(2) {
        let (p, q) = (leg[0], leg[1]);
        let d = Vec2::between(p, q);
        let len = d.norm();
        if len < 1e-6 {
            return None;
        }
        let ray = Ray { origin: p, dir: d.scaled(1.0 / len) };
        for wall in walls {
            if let Some(hit) = intersect_ray_segment(&ray, wall) {
                let interior = hit.t > occlusion_slack_m.max(RAY_T_EPS)
                    && hit.t < len - occlusion_slack_m.max(RAY_T_EPS);
                let deep = wall.a.distance_to(hit.point) > occlusion_slack_m
                    && wall.b.distance_to(hit.point) > occlusion_slack_m;
                if interior && (occlusion_slack_m == 0.0 || deep) {
                    return None;
                }
            }
        }
    }
    Some(vertices)
}

fn sequences(n_walls: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for seq in &frontier {
            for w in 0..n_walls {
                if seq.last() == Some(&w) {
                    continue;
                }
                let mut s = seq.clone();
                s.push(w);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub struct OracleScene {
    pub walls: Vec<Segment>,
    pub tx: Point,
    pub rx: Point,
}

impl OracleScene {
    pub fn applied(&self) -> AppliedScene {
        AppliedScene {
            bounds: Rect { min: Point::new(-50.0, -50.0), max: Point::new(70.0, 70.0) },
            walls: self.walls.clone(),
            tx: Transmitter { position: self.tx, power_dbm: 0.0, frequency_hz: 2.4e9 },
            angle_deg: 0.0,
        }
    }
}

/// Draws random scenes until one is well-separated: walls keep their
/// distance, endpoints stay apart, and no order-<=2 candidate sits close to
/// a validity boundary (where launching and the image method could
/// legitimately disagree).
pub fn random_clean_scene(rng: &mut ChaCha8Rng, max_order: usize) -> OracleScene {
    'outer: for _ in 0..5000 {
        let n_walls = rng.random_range(2..=4);
        let mut walls = Vec::with_capacity(n_walls);
        for _ in 0..n_walls {
            let a = Point::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
            let b = Point::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
            let seg = Segment::new(a, b);
            if seg.length() < 3.0 {
                continue 'outer;
            }
            walls.push(seg);
        }
        for i in 0..walls.len() {
            for j in i + 1..walls.len() {
                if segment_distance(&walls[i], &walls[j]) < 0.5 {
                    continue 'outer;
                }
            }
        }
        let tx = Point::new(rng.random_range(1.0..19.0), rng.random_range(1.0..19.0));
        let rx = Point::new(rng.random_range(1.0..19.0), rng.random_range(1.0..19.0));
        if tx.distance_to(rx) < 3.0 {
            continue 'outer;
        }
        for w in &walls {
            if w.distance_to_point(tx) < 0.5 || w.distance_to_point(rx) < 0.5 {
                continue 'outer;
            }
        }

        // Reject boundary-sitting candidates: a sequence must classify the
        // same way under strict and slackened validation.
        let slack = 0.15;
        let mut bounce_paths = 0usize;
        for seq in sequences(walls.len(), max_order) {
            let strict = image_candidate(&walls, tx, rx, &seq, 0.0, 0.0);
            let loose = image_candidate(&walls, tx, rx, &seq, slack, slack);
            match (&strict, &loose) {
                (Some(_), Some(_)) => {
                    // Valid either way; additionally require bounce points
                    // to sit well inside their walls.
                    let vertices = strict.as_ref().unwrap();
                    for (i, &w) in seq.iter().enumerate() {
                        let b = vertices[i + 1];
                        if walls[w].a.distance_to(b) < slack || walls[w].b.distance_to(b) < slack {
                            continue 'outer;
                        }
                    }
                    if !seq.is_empty() {
                        bounce_paths += 1;
                    }
                }
                (None, None) => {}
                _ => continue 'outer,
            }
        }
        // A scene with no reflected path exercises nothing worth checking.
        if bounce_paths == 0 {
            continue 'outer;
        }
        return OracleScene { walls, tx, rx };
    }
    panic!("could not draw a clean random scene");
}
