//! World model: walls, one rotatable RIS panel, a transmitter, and named
//! receivers with roles. Scenes are immutable after construction; loading
//! validates every invariant and reports the offending field path.
//!
//! Scene files are TOML with sections `bounds`, `tx`, `ris`, `walls[]`,
//! `receivers[]`. All lengths are meters, powers dBm, frequencies Hz,
//! angles degrees. See `data/canonical.scene` for the reference layout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotate_segment, Point, Segment, GEOM_EPS};

/// The default RIS rotation set: -20° to 20° in 5° steps.
pub const DEFAULT_ALLOWED_ANGLES: [f64; 9] =
    [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("ValidationError: {path}: {message}")]
    Validation { path: String, message: String },
    #[error("AngleNotAllowed: {0} deg is not in the allowed angle set")]
    AngleNotAllowed(f64),
}

impl SceneError {
    fn validation(path: &str, message: impl Into<String>) -> Self {
        SceneError::Validation { path: path.to_string(), message: message.into() }
    }
}

/// Axis-aligned bounding rectangle of the analysis area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains_strict(&self, p: Point) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmitter {
    pub position: Point,
    pub power_dbm: f64,
    pub frequency_hz: f64,
}

/// What a receiver wants from the channel: sensors and desired receivers
/// need power at or above their threshold, interfered receivers need to
/// stay below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverRole {
    Sensor,
    Desired,
    Interfered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub name: String,
    pub position: Point,
    pub role: ReceiverRole,
    pub threshold_dbm: f64,
}

/// The RIS panel: a wall segment at its 0° reference pose, rotatable about
/// its midpoint through a discrete, strictly increasing angle set.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    pub segment: Segment,
    pub pivot: Point,
    pub allowed_angles: Vec<f64>,
}

impl RisPanel {
    pub fn is_angle_allowed(&self, angle_deg: f64) -> bool {
        self.allowed_angles.iter().any(|a| (a - angle_deg).abs() < GEOM_EPS)
    }
}

/// Immutable world: static walls, one RIS panel, transmitter, receivers.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub bounds: Rect,
    pub walls: Vec<Segment>,
    pub ris: RisPanel,
    pub tx: Transmitter,
    pub receivers: Vec<Receiver>,
}

/// A scene with the RIS rotated to a specific angle: the effective wall set
/// is the static walls plus the rotated panel (always the last element).
#[derive(Debug, Clone)]
pub struct AppliedScene {
    pub bounds: Rect,
    pub walls: Vec<Segment>,
    pub tx: Transmitter,
    pub angle_deg: f64,
}

impl Scene {
    /// Rotates the RIS to `angle_deg` and returns the resulting world.
    /// The original scene is unchanged.
    pub fn apply_ris_angle(&self, angle_deg: f64) -> Result<AppliedScene, SceneError> {
        if !self.ris.is_angle_allowed(angle_deg) {
            return Err(SceneError::AngleNotAllowed(angle_deg));
        }
        let mut walls = self.walls.clone();
        walls.push(rotate_segment(&self.ris.segment, angle_deg, self.ris.pivot));
        Ok(AppliedScene { bounds: self.bounds, walls, tx: self.tx, angle_deg })
    }

    pub fn receiver(&self, name: &str) -> Option<&Receiver> {
        self.receivers.iter().find(|r| r.name == name)
    }

    pub fn receiver_names(&self) -> Vec<String> {
        self.receivers.iter().map(|r| r.name.clone()).collect()
    }

    /// Checks every scene invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.bounds.min.x < self.bounds.max.x && self.bounds.min.y < self.bounds.max.y) {
            return Err(SceneError::validation("bounds", "min must be strictly below max"));
        }
        for (i, w) in self.walls.iter().enumerate() {
            if !w.a.is_finite() || !w.b.is_finite() {
                return Err(SceneError::validation(&format!("walls[{i}]"), "non-finite coordinates"));
            }
            if w.length() <= GEOM_EPS {
                return Err(SceneError::validation(&format!("walls[{i}]"), "degenerate segment"));
            }
        }
        if !self.ris.segment.a.is_finite()
            || !self.ris.segment.b.is_finite()
            || !self.ris.pivot.is_finite()
        {
            return Err(SceneError::validation("ris", "non-finite coordinates"));
        }
        if self.ris.segment.length() <= GEOM_EPS {
            return Err(SceneError::validation("ris.segment", "degenerate segment"));
        }
        if self.ris.pivot.distance_to(self.ris.segment.midpoint()) > GEOM_EPS {
            return Err(SceneError::validation("ris.pivot", "pivot must be the segment midpoint"));
        }
        if self.ris.allowed_angles.is_empty() {
            return Err(SceneError::validation("ris.allowed_angles_deg", "must be non-empty"));
        }
        if !self.ris.allowed_angles.windows(2).all(|w| w[0] < w[1]) {
            return Err(SceneError::validation(
                "ris.allowed_angles_deg",
                "must be strictly increasing",
            ));
        }
        if !self.ris.allowed_angles.iter().all(|a| a.is_finite()) {
            return Err(SceneError::validation("ris.allowed_angles_deg", "non-finite angle"));
        }
        // At its 0° pose the panel sits parallel to a reference wall.
        let rd = self.ris.segment.direction();
        let parallel = self.walls.iter().any(|w| {
            let cross = rd.cross(w.direction());
            cross.abs() < 1e-9 * rd.norm() * w.direction().norm()
        });
        if !parallel {
            return Err(SceneError::validation(
                "ris.segment",
                "at 0 deg the panel must be parallel to one of the walls",
            ));
        }
        if !self.tx.power_dbm.is_finite() {
            return Err(SceneError::validation("tx.power_dbm", "must be finite"));
        }
        if !self.tx.frequency_hz.is_finite() || self.tx.frequency_hz <= 0.0 {
            return Err(SceneError::validation("tx.frequency_hz", "must be positive"));
        }
        if !self.bounds.contains_strict(self.tx.position) {
            return Err(SceneError::validation("tx.position", "outside bounds"));
        }
        for (i, r) in self.receivers.iter().enumerate() {
            let path = format!("receivers[{i}]");
            if r.name.is_empty() {
                return Err(SceneError::validation(&format!("{path}.name"), "empty name"));
            }
            if self.receivers[..i].iter().any(|o| o.name == r.name) {
                return Err(SceneError::validation(
                    &format!("{path}.name"),
                    format!("duplicate receiver name {:?}", r.name),
                ));
            }
            if !r.threshold_dbm.is_finite() {
                return Err(SceneError::validation(&format!("{path}.threshold_dbm"), "must be finite"));
            }
            if !self.bounds.contains_strict(r.position) {
                return Err(SceneError::validation(
                    &format!("{path}.position"),
                    format!("receiver {:?} outside bounds", r.name),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Scene file schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SceneFile {
    bounds: BoundsFile,
    tx: TxFile,
    ris: RisFile,
    #[serde(default)]
    walls: Vec<SegmentFile>,
    #[serde(default)]
    receivers: Vec<ReceiverFile>,
}

#[derive(Serialize, Deserialize)]
struct BoundsFile {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct TxFile {
    position: [f64; 2],
    power_dbm: f64,
    frequency_hz: f64,
}

#[derive(Serialize, Deserialize)]
struct RisFile {
    a: [f64; 2],
    b: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pivot: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    allowed_angles_deg: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SegmentFile {
    a: [f64; 2],
    b: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ReceiverFile {
    name: String,
    position: [f64; 2],
    role: ReceiverRole,
    threshold_dbm: f64,
}

fn pt(xy: [f64; 2]) -> Point {
    Point::new(xy[0], xy[1])
}

/// Parses and fully validates a scene file.
pub fn load_scene(text: &str) -> Result<Scene, SceneError> {
    let file: SceneFile = toml::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    let ris_segment = Segment::new(pt(file.ris.a), pt(file.ris.b));
    let scene = Scene {
        bounds: Rect { min: pt(file.bounds.min), max: pt(file.bounds.max) },
        walls: file.walls.iter().map(|w| Segment::new(pt(w.a), pt(w.b))).collect(),
        ris: RisPanel {
            segment: ris_segment,
            pivot: file.ris.pivot.map(pt).unwrap_or_else(|| ris_segment.midpoint()),
            allowed_angles: file
                .ris
                .allowed_angles_deg
                .unwrap_or_else(|| DEFAULT_ALLOWED_ANGLES.to_vec()),
        },
        tx: Transmitter {
            position: pt(file.tx.position),
            power_dbm: file.tx.power_dbm,
            frequency_hz: file.tx.frequency_hz,
        },
        receivers: file
            .receivers
            .into_iter()
            .map(|r| Receiver {
                name: r.name,
                position: pt(r.position),
                role: r.role,
                threshold_dbm: r.threshold_dbm,
            })
            .collect(),
    };
    scene.validate()?;
    Ok(scene)
}

/// Serializes a scene back into the file schema. `load_scene` round-trips
/// the result to an equal scene.
pub fn scene_to_string(scene: &Scene) -> String {
    let file = SceneFile {
        bounds: BoundsFile {
            min: [scene.bounds.min.x, scene.bounds.min.y],
            max: [scene.bounds.max.x, scene.bounds.max.y],
        },
        tx: TxFile {
            position: [scene.tx.position.x, scene.tx.position.y],
            power_dbm: scene.tx.power_dbm,
            frequency_hz: scene.tx.frequency_hz,
        },
        ris: RisFile {
            a: [scene.ris.segment.a.x, scene.ris.segment.a.y],
            b: [scene.ris.segment.b.x, scene.ris.segment.b.y],
            pivot: Some([scene.ris.pivot.x, scene.ris.pivot.y]),
            allowed_angles_deg: Some(scene.ris.allowed_angles.clone()),
        },
        walls: scene
            .walls
            .iter()
            .map(|w| SegmentFile { a: [w.a.x, w.a.y], b: [w.b.x, w.b.y] })
            .collect(),
        receivers: scene
            .receivers
            .iter()
            .map(|r| ReceiverFile {
                name: r.name.clone(),
                position: [r.position.x, r.position.y],
                role: r.role,
                threshold_dbm: r.threshold_dbm,
            })
            .collect(),
    };
    toml::to_string(&file).expect("scene serialization cannot fail")
}

/// The repository's reference layout, embedded from `data/canonical.scene`.
pub fn canonical_scene() -> Scene {
    load_scene(CANONICAL_SCENE_TEXT).expect("embedded canonical scene must be valid")
}

/// Raw contents of the committed canonical scene fixture.
pub const CANONICAL_SCENE_TEXT: &str = include_str!("../data/canonical.scene");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_scene_is_valid() {
        let scene = canonical_scene();
        assert!(scene.validate().is_ok());
        assert_eq!(scene.receiver_names(), vec!["A", "B", "C"]);
        assert_eq!(scene.ris.allowed_angles.len(), 9);
    }

    #[test]
    fn apply_angle_zero_keeps_reference_pose() {
        let scene = canonical_scene();
        let applied = scene.apply_ris_angle(0.0).unwrap();
        assert_eq!(applied.walls.len(), scene.walls.len() + 1);
        let panel = applied.walls.last().unwrap();
        assert_eq!(*panel, scene.ris.segment);
    }

    #[test]
    fn apply_angle_twenty_rotates_about_midpoint() {
        let scene = canonical_scene();
        let applied = scene.apply_ris_angle(20.0).unwrap();
        let panel = applied.walls.last().unwrap();
        let expected = rotate_segment(&scene.ris.segment, 20.0, scene.ris.pivot);
        assert!(panel.a.distance_to(expected.a) < 1e-12);
        assert!(panel.b.distance_to(expected.b) < 1e-12);
        assert!((panel.length() - scene.ris.segment.length()).abs() < 1e-9);
    }

    #[test]
    fn apply_disallowed_angle_is_rejected() {
        let scene = canonical_scene();
        let err = scene.apply_ris_angle(7.0).unwrap_err();
        assert!(matches!(err, SceneError::AngleNotAllowed(a) if a == 7.0));
    }

    #[test]
    fn apply_is_pure() {
        let scene = canonical_scene();
        let w1 = scene.apply_ris_angle(15.0).unwrap().walls;
        let w2 = scene.apply_ris_angle(15.0).unwrap().walls;
        assert_eq!(w1, w2);
    }

    #[test]
    fn omitted_angle_set_falls_back_to_the_default_sweep() {
        let text = r#"
            [bounds]
            min = [0.0, 0.0]
            max = [10.0, 10.0]

            [tx]
            position = [1.0, 5.0]
            power_dbm = 20.0
            frequency_hz = 3.5e9

            [ris]
            a = [9.0, 4.0]
            b = [9.0, 6.0]

            [[walls]]
            a = [10.0, 0.0]
            b = [10.0, 10.0]
        "#;
        let scene = load_scene(text).unwrap();
        assert_eq!(scene.ris.allowed_angles, DEFAULT_ALLOWED_ANGLES.to_vec());
        assert!(scene.ris.pivot.distance_to(Point::new(9.0, 5.0)) < 1e-12);
    }

    #[test]
    fn missing_tx_is_a_parse_error() {
        let text = r#"
            [bounds]
            min = [0.0, 0.0]
            max = [10.0, 10.0]

            [ris]
            a = [9.0, 4.0]
            b = [9.0, 6.0]
        "#;
        let err = load_scene(text).unwrap_err();
        assert!(matches!(err, SceneError::Parse(_)), "got {err:?}");
        assert!(err.to_string().contains("tx"));
    }

    #[test]
    fn receiver_outside_bounds_is_named() {
        let mut scene = canonical_scene();
        scene.receivers[1].position = Point::new(500.0, 5.0);
        let text = scene_to_string(&scene);
        let err = load_scene(&text).unwrap_err();
        match err {
            SceneError::Validation { path, message } => {
                assert_eq!(path, "receivers[1].position");
                assert!(message.contains("B"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_receiver_names_rejected() {
        let mut scene = canonical_scene();
        scene.receivers[2].name = "A".to_string();
        let err = load_scene(&scene_to_string(&scene)).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    // Calibration: the committed layout must make the RIS setting decisive.
    mod calibration {
        use super::*;
        use crate::propagation::{received_power_dbm, PropagationParams};

        fn powers_at_a() -> Vec<f64> {
            let scene = canonical_scene();
            let params = PropagationParams::default();
            let a = scene.receiver("A").unwrap().position;
            scene
                .ris
                .allowed_angles
                .iter()
                .map(|&angle| {
                    received_power_dbm(&scene.apply_ris_angle(angle).unwrap(), a, &params)
                })
                .collect()
        }

        #[test]
        fn receiver_a_is_below_threshold_at_zero() {
            let scene = canonical_scene();
            let threshold = scene.receiver("A").unwrap().threshold_dbm;
            let at_zero = powers_at_a()[4];
            assert!(at_zero < threshold, "A at 0 deg: {at_zero} dBm vs {threshold}");
        }

        #[test]
        fn some_angle_serves_receiver_a() {
            let scene = canonical_scene();
            let threshold = scene.receiver("A").unwrap().threshold_dbm;
            assert!(powers_at_a().iter().any(|p| *p >= threshold));
        }

        #[test]
        fn power_at_a_varies_with_the_angle() {
            let powers = powers_at_a();
            let min = powers.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = powers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(max - min > 1.0, "angle sweep must matter at A: {powers:?}");
        }
    }

    #[test]
    fn scene_round_trips_through_serialization() {
        let scene = canonical_scene();
        let reloaded = load_scene(&scene_to_string(&scene)).unwrap();
        assert_eq!(scene.walls.len(), reloaded.walls.len());
        for (a, b) in scene.walls.iter().zip(&reloaded.walls) {
            assert!(a.a.distance_to(b.a) < 1e-9 && a.b.distance_to(b.b) < 1e-9);
        }
        assert!(scene.tx.position.distance_to(reloaded.tx.position) < 1e-9);
        assert!((scene.tx.power_dbm - reloaded.tx.power_dbm).abs() < 1e-9);
        assert!((scene.tx.frequency_hz - reloaded.tx.frequency_hz).abs() < 1e-9);
        assert_eq!(scene.receivers, reloaded.receivers);
        assert_eq!(scene.ris.allowed_angles, reloaded.ris.allowed_angles);
        assert!(scene.ris.pivot.distance_to(reloaded.ris.pivot) < 1e-9);
    }

    mod roundtrip_properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_scene() -> impl Strategy<Value = Scene> {
            (
                2.0..28.0f64,
                1.0..9.0f64,
                -30.0..30.0f64,
                proptest::collection::vec((0.5..29.5f64, 0.5..9.5f64), 0..4),
            )
                .prop_map(|(rx_x, rx_y, power, extra_rx)| {
                    let mut scene = canonical_scene();
                    scene.tx.power_dbm = power;
                    scene.receivers[0].position = Point::new(rx_x, rx_y);
                    for (i, (x, y)) in extra_rx.into_iter().enumerate() {
                        scene.receivers.push(Receiver {
                            name: format!("X{i}"),
                            position: Point::new(x, y),
                            role: ReceiverRole::Desired,
                            threshold_dbm: -60.0 - i as f64 * 3.5,
                        });
                    }
                    scene
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn serialization_round_trips(scene in arb_scene()) {
                let reloaded = load_scene(&scene_to_string(&scene)).unwrap();
                prop_assert_eq!(&scene.receivers, &reloaded.receivers);
                prop_assert_eq!(scene.walls.len(), reloaded.walls.len());
                for (a, b) in scene.walls.iter().zip(&reloaded.walls) {
                    prop_assert!(a.a.distance_to(b.a) < 1e-9);
                    prop_assert!(a.b.distance_to(b.b) < 1e-9);
                }
                prop_assert!((scene.tx.power_dbm - reloaded.tx.power_dbm).abs() < 1e-9);
                prop_assert!(scene.tx.position.distance_to(reloaded.tx.position) < 1e-9);
                prop_assert_eq!(&scene.ris.allowed_angles, &reloaded.ris.allowed_angles);
            }
        }
    }
}
