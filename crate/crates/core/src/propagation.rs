//! Image-method specular ray tracer with occlusion validation, free-space
//! path loss with a per-bounce reflection penalty, power aggregation, and
//! coverage-grid rendering.
//!
//! The tracer mirrors the transmitter across wall lines (recursively for
//! higher orders), then validates each candidate: every bounce point must
//! lie on its finite wall segment and every leg must be unobstructed.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    intersect_ray_segment, mirror_point, Point, Ray, Segment, Vec2, GEOM_EPS, RAY_T_EPS,
};
use crate::scene::{AppliedScene, Rect};

/// Shortest physically meaningful path length in meters.
pub const MIN_PATH_LENGTH_M: f64 = 1e-3;

const MAX_GRID_CELLS: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("DegeneratePath: length {0} m is below {MIN_PATH_LENGTH_M} m")]
    DegeneratePath(f64),
    #[error("GridTooLarge: {0} cells exceed the {MAX_GRID_CELLS} cell limit")]
    GridTooLarge(usize),
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
}

/// How multipath contributions combine into one received power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summation {
    /// Non-coherent sum of linear powers (default; no phase modeling).
    PowerSum,
    /// Keep only the strongest path.
    StrongestPath,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationParams {
    pub max_order: usize,
    pub reflection_loss_db: f64,
    pub summation: Summation,
    pub noise_floor_dbm: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            max_order: 3,
            reflection_loss_db: 3.0,
            summation: Summation::PowerSum,
            noise_floor_dbm: -200.0,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<(), PropagationError> {
        if self.max_order > 4 {
            return Err(PropagationError::InvalidParams(format!(
                "max_order {} exceeds 4",
                self.max_order
            )));
        }
        if !self.reflection_loss_db.is_finite() || self.reflection_loss_db < 0.0 {
            return Err(PropagationError::InvalidParams(
                "reflection_loss_db must be finite and >= 0".into(),
            ));
        }
        if !self.noise_floor_dbm.is_finite() {
            return Err(PropagationError::InvalidParams("noise_floor_dbm must be finite".into()));
        }
        Ok(())
    }
}

/// One specular multipath component from the transmitter to a receive point.
#[derive(Debug, Clone)]
pub struct RayPath {
    /// tx, bounce points in order, rx.
    pub vertices: Vec<Point>,
    /// Indices into the applied scene's wall list, one per bounce.
    pub bounce_walls: Vec<usize>,
    pub length_m: f64,
    pub order: usize,
}

/// Free-space path loss in dB for distance `d_m` meters at `freq_hz`.
pub fn fspl_db(d_m: f64, freq_hz: f64) -> f64 {
    20.0 * d_m.log10() + 20.0 * freq_hz.log10() - 147.55
}

/// Total path gain in dB (negative): free-space loss over the unfolded
/// length plus a fixed penalty per bounce.
pub fn path_gain_db(
    path: &RayPath,
    freq_hz: f64,
    params: &PropagationParams,
) -> Result<f64, PropagationError> {
    if path.length_m < MIN_PATH_LENGTH_M {
        return Err(PropagationError::DegeneratePath(path.length_m));
    }
    Ok(-(fspl_db(path.length_m, freq_hz) + path.order as f64 * params.reflection_loss_db))
}

/// Combines per-path gains into a received power, clamped below at the
/// noise floor. No paths means the noise floor.
pub fn aggregate_power_dbm(tx_power_dbm: f64, gains_db: &[f64], params: &PropagationParams) -> f64 {
    if gains_db.is_empty() {
        return params.noise_floor_dbm;
    }
    let combined = match params.summation {
        Summation::PowerSum => {
            let lin: f64 = gains_db
                .iter()
                .map(|g| 10f64.powf((tx_power_dbm + g) / 10.0))
                .sum();
            10.0 * lin.log10()
        }
        Summation::StrongestPath => {
            tx_power_dbm + gains_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        }
    };
    combined.max(params.noise_floor_dbm)
}

// ---------------------------------------------------------------------------
// Image-method enumeration
// ---------------------------------------------------------------------------

/// Transmitter images for every wall sequence up to a maximum order,
/// reusable across receive points.
struct ImageSet {
    /// Per sequence: the bounce wall indices and the cumulative images
    /// I_1..I_k (I_i is tx mirrored across the first i walls).
    entries: Vec<(Vec<usize>, Vec<Point>)>,
}

fn build_images(walls: &[Segment], tx: Point, max_order: usize) -> ImageSet {
    let mut entries = Vec::new();
    let mut frontier: Vec<(Vec<usize>, Vec<Point>)> = vec![(Vec::new(), Vec::new())];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for (seq, images) in &frontier {
            let from = *images.last().unwrap_or(&tx);
            for (w, wall) in walls.iter().enumerate() {
                if seq.last() == Some(&w) {
                    continue;
                }
                let mut seq2 = seq.clone();
                seq2.push(w);
                let mut images2 = images.clone();
                images2.push(mirror_point(from, wall));
                next.push((seq2, images2));
            }
        }
        entries.extend(next.iter().cloned());
        frontier = next;
    }
    ImageSet { entries }
}

/// True when the open segment p→q is interrupted by any wall. Hits within
/// `RAY_T_EPS` of either endpoint do not count, so legs that start or end
/// on a wall (and shared-corner bounces) stay valid.
fn leg_blocked(p: Point, q: Point, walls: &[Segment]) -> bool {
    let d = Vec2::between(p, q);
    let len = d.norm();
    if len < 2.0 * RAY_T_EPS {
        return true;
    }
    let ray = Ray { origin: p, dir: d.scaled(1.0 / len) };
    for wall in walls {
        if let Some(hit) = intersect_ray_segment(&ray, wall) {
            if hit.t < len - RAY_T_EPS {
                return true;
            }
        }
    }
    false
}

/// Walks the candidate backwards from the receive point through each image,
/// producing bounce points. Returns `None` when any bounce misses its wall
/// segment or any physical leg is obstructed.
fn validate_candidate(
    walls: &[Segment],
    tx: Point,
    rx: Point,
    seq: &[usize],
    images: &[Point],
) -> Option<RayPath> {
    let mut bounces = vec![Point::new(0.0, 0.0); seq.len()];
    let mut cur = rx;
    for i in (0..seq.len()).rev() {
        let wall = &walls[seq[i]];
        let img = images[i];
        let to_img = Vec2::between(cur, img);
        let dist = to_img.norm();
        if dist < 2.0 * RAY_T_EPS {
            return None;
        }
        let ray = Ray { origin: cur, dir: to_img.scaled(1.0 / dist) };
        // Grazing (ray collinear with the wall) has no specular meaning.
        if ray.dir.cross(wall.direction()).abs() < GEOM_EPS {
            return None;
        }
        let hit = intersect_ray_segment(&ray, wall)?;
        if hit.t >= dist - RAY_T_EPS {
            return None;
        }
        bounces[i] = hit.point;
        cur = hit.point;
    }

    let mut vertices = Vec::with_capacity(seq.len() + 2);
    vertices.push(tx);
    vertices.extend(bounces);
    vertices.push(rx);
    for pair in vertices.windows(2) {
        if leg_blocked(pair[0], pair[1], walls) {
            return None;
        }
    }
    let length_m = vertices.windows(2).map(|p| p[0].distance_to(p[1])).sum();
    Some(RayPath { vertices, bounce_walls: seq.to_vec(), length_m, order: seq.len() })
}

fn paths_for_point(walls: &[Segment], tx: Point, rx: Point, images: &ImageSet) -> Vec<RayPath> {
    let mut paths = Vec::new();
    if tx.distance_to(rx) > GEOM_EPS && !leg_blocked(tx, rx, walls) {
        let length_m = tx.distance_to(rx);
        paths.push(RayPath {
            vertices: vec![tx, rx],
            bounce_walls: Vec::new(),
            length_m,
            order: 0,
        });
    }
    for (seq, imgs) in &images.entries {
        if let Some(path) = validate_candidate(walls, tx, rx, seq, imgs) {
            // Collinear wall extensions can re-derive one physical path;
            // keep the first of any vertex-identical pair.
            let dup = paths.iter().any(|p| {
                p.order == path.order
                    && p.vertices
                        .iter()
                        .zip(&path.vertices)
                        .all(|(a, b)| a.distance_to(*b) < 1e-6)
            });
            if !dup {
                paths.push(path);
            }
        }
    }
    paths
}

/// Enumerates every valid specular path from the transmitter to `rx_pos`
/// up to `params.max_order` bounces. An empty result means no path.
pub fn trace_paths(scene: &AppliedScene, rx_pos: Point, params: &PropagationParams) -> Vec<RayPath> {
    let images = build_images(&scene.walls, scene.tx.position, params.max_order);
    paths_for_point(&scene.walls, scene.tx.position, rx_pos, &images)
}

/// Received power at a point in dBm under the configured summation.
pub fn received_power_dbm(scene: &AppliedScene, rx_pos: Point, params: &PropagationParams) -> f64 {
    let paths = trace_paths(scene, rx_pos, params);
    power_from_paths(scene, &paths, params)
}

fn power_from_paths(scene: &AppliedScene, paths: &[RayPath], params: &PropagationParams) -> f64 {
    let gains: Vec<f64> = paths
        .iter()
        .filter_map(|p| path_gain_db(p, scene.tx.frequency_hz, params).ok())
        .collect();
    aggregate_power_dbm(scene.tx.power_dbm, &gains, params)
}

// ---------------------------------------------------------------------------
// Coverage grid
// ---------------------------------------------------------------------------

/// Received power sampled at the centers of a regular grid. Values are
/// stored row-major with row 0 at the top of the area (maximum y).
#[derive(Debug, Clone)]
pub struct CoverageGrid {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub values_dbm: Vec<f64>,
}

impl CoverageGrid {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values_dbm[row * self.cols + col]
    }

    /// Row-major CSV, one line per row, two decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|col| format!("{:.2}", self.value(row, col)))
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Binary 8-bit PGM mapping [noise_floor, tx_power] linearly to [0,255].
    pub fn to_pgm(&self, noise_floor_dbm: f64, tx_power_dbm: f64) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        let span = (tx_power_dbm - noise_floor_dbm).max(f64::MIN_POSITIVE);
        out.extend(self.values_dbm.iter().map(|v| {
            let scaled = (v - noise_floor_dbm) / span * 255.0;
            scaled.round().clamp(0.0, 255.0) as u8
        }));
        out
    }
}

/// Computes received power over a grid covering the scene bounds. Cells are
/// independent and evaluated in parallel; the result is identical to a
/// sequential scan. Cell centers that fall on a wall report the noise floor.
pub fn coverage_grid(
    scene: &AppliedScene,
    spacing_m: f64,
    params: &PropagationParams,
) -> Result<CoverageGrid, PropagationError> {
    coverage_grid_over(scene, scene.bounds, spacing_m, params)
}

/// [`coverage_grid`] over an explicit region instead of the scene bounds.
pub fn coverage_grid_over(
    scene: &AppliedScene,
    region: Rect,
    spacing_m: f64,
    params: &PropagationParams,
) -> Result<CoverageGrid, PropagationError> {
    if !spacing_m.is_finite() || spacing_m <= 0.0 {
        return Err(PropagationError::InvalidParams("spacing must be positive".into()));
    }
    if !(region.min.x < region.max.x && region.min.y < region.max.y) {
        return Err(PropagationError::InvalidParams("empty grid region".into()));
    }
    params.validate()?;
    let cols = ((region.width() / spacing_m) - 1e-9).ceil().max(1.0) as usize;
    let rows = ((region.height() / spacing_m) - 1e-9).ceil().max(1.0) as usize;
    let cells = rows.checked_mul(cols).ok_or(PropagationError::GridTooLarge(usize::MAX))?;
    if cells > MAX_GRID_CELLS {
        return Err(PropagationError::GridTooLarge(cells));
    }

    let images = build_images(&scene.walls, scene.tx.position, params.max_order);
    let values_dbm: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let row = idx / cols;
            let col = idx % cols;
            let center = Point::new(
                region.min.x + (col as f64 + 0.5) * spacing_m,
                region.max.y - (row as f64 + 0.5) * spacing_m,
            );
            if scene.walls.iter().any(|w| w.distance_to_point(center) < GEOM_EPS) {
                return params.noise_floor_dbm;
            }
            let paths = paths_for_point(&scene.walls, scene.tx.position, center, &images);
            power_from_paths(scene, &paths, params)
        })
        .collect();

    Ok(CoverageGrid { rows, cols, spacing_m, values_dbm })
}
