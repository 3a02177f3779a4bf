//! Slotted-time RIS control. Three policies drive the panel: a fixed angle,
//! a periodic sweep over the allowed set, and a context-aware controller
//! that probes every angle once and then round-robins over a selected
//! subset (all per-receiver best angles, or a minimal covering set).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::propagation::{received_power_dbm, PropagationParams};
use crate::scene::{Receiver, ReceiverRole, Scene, SceneError};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("InvalidTimeline: {0}")]
    InvalidTimeline(String),
}

/// Slot structure of a run. `dwell_slots` is how long the panel holds one
/// angle in the exploit/periodic phases; `probe_dwell` the same for the
/// probe sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineConfig {
    pub total_slots: usize,
    pub dwell_slots: usize,
    pub probe_dwell: usize,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        TimelineConfig { total_slots: 96, dwell_slots: 2, probe_dwell: 1 }
    }
}

impl TimelineConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.total_slots == 0 {
            return Err(PolicyError::InvalidTimeline("total_slots must be positive".into()));
        }
        if self.dwell_slots == 0 || self.probe_dwell == 0 {
            return Err(PolicyError::InvalidTimeline("dwell lengths must be >= 1".into()));
        }
        Ok(())
    }
}

/// How the context-aware controller picks its exploit-phase angle set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Every receiver's individually best angle.
    AllBest,
    /// Smallest angle subset meeting every receiver's requirement.
    MinimalCover,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Static(f64),
    Periodic,
    ContextAware(SelectionMode),
}

/// Per-angle, per-receiver powers gathered during the probe sweep. Rows
/// follow the allowed-angle order, columns the receiver order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub angles_deg: Vec<f64>,
    pub receivers: Vec<String>,
    /// powers_dbm[angle_index][receiver_index]
    pub powers_dbm: Vec<Vec<f64>>,
}

/// The angle subset a context-aware controller exploits. `feasible` is
/// false when no subset met every requirement and the per-receiver best
/// angles were used as a fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSelection {
    pub angles_deg: Vec<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub angle_deg: f64,
    /// One power per receiver, in trace receiver order.
    pub powers_dbm: Vec<f64>,
}

/// Per-slot record of the applied angle and every receiver's power.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub receivers: Vec<String>,
    pub slots: Vec<SlotRecord>,
}

impl SimulationTrace {
    pub fn receiver_index(&self, name: &str) -> Option<usize> {
        self.receivers.iter().position(|r| r == name)
    }

    pub fn powers_for(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.receiver_index(name)?;
        Some(self.slots.iter().map(|s| s.powers_dbm[idx]).collect())
    }

    /// A sub-trace over a slot range, keeping original slot indices.
    pub fn restricted(&self, range: std::ops::Range<usize>) -> SimulationTrace {
        SimulationTrace { receivers: self.receivers.clone(), slots: self.slots[range].to_vec() }
    }

    /// CSV with header `slot,angle_deg,<receiver names...>`, powers to two
    /// decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot,angle_deg");
        for name in &self.receivers {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for rec in &self.slots {
            out.push_str(&format!("{},{}", rec.slot, rec.angle_deg));
            for p in &rec.powers_dbm {
                out.push_str(&format!(",{p:.2}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Everything `angle_for_slot` needs besides the policy: the allowed set,
/// the timeline, and (for exploit-phase context policies) the selection.
#[derive(Debug, Clone)]
pub struct ScheduleContext<'a> {
    pub allowed_angles: &'a [f64],
    pub timeline: TimelineConfig,
    pub selection: Option<&'a AngleSelection>,
}

/// Angle the panel holds during `slot`.
///
/// Static policies hold their angle; the periodic sweep cycles through the
/// allowed set one dwell at a time; context-aware policies sweep every
/// angle once during the probe phase, then round-robin over the selected
/// set in ascending order, one dwell block per angle.
pub fn angle_for_slot(policy: &Policy, slot: usize, ctx: &ScheduleContext<'_>) -> f64 {
    let n = ctx.allowed_angles.len();
    match policy {
        Policy::Static(angle) => *angle,
        Policy::Periodic => ctx.allowed_angles[(slot / ctx.timeline.dwell_slots) % n],
        Policy::ContextAware(_) => {
            let probe_len = n * ctx.timeline.probe_dwell;
            if slot < probe_len {
                ctx.allowed_angles[slot / ctx.timeline.probe_dwell]
            } else {
                let selected = ctx
                    .selection
                    .expect("exploit phase requires a selection")
                    .angles_deg
                    .as_slice();
                let exploit_slot = slot - probe_len;
                selected[(exploit_slot / ctx.timeline.dwell_slots) % selected.len()]
            }
        }
    }
}

/// Per-angle, per-receiver powers for the whole allowed set. This is both
/// the probe-phase measurement and the cache behind `run_simulation`.
pub fn probe_report(scene: &Scene, params: &PropagationParams) -> Result<ProbeReport, PolicyError> {
    let mut powers_dbm = Vec::with_capacity(scene.ris.allowed_angles.len());
    for &angle in &scene.ris.allowed_angles {
        let applied = scene.apply_ris_angle(angle)?;
        powers_dbm.push(
            scene
                .receivers
                .iter()
                .map(|r| received_power_dbm(&applied, r.position, params))
                .collect(),
        );
    }
    Ok(ProbeReport {
        angles_deg: scene.ris.allowed_angles.clone(),
        receivers: scene.receiver_names(),
        powers_dbm,
    })
}

fn requirement_met(role: ReceiverRole, power_dbm: f64, threshold_dbm: f64) -> bool {
    match role {
        ReceiverRole::Sensor | ReceiverRole::Desired => power_dbm >= threshold_dbm,
        ReceiverRole::Interfered => power_dbm < threshold_dbm,
    }
}

/// Each receiver's best angle: argmax power for sensors and desired
/// receivers, argmin for interfered ones. Ties go to the angle closest to
/// 0°, then to the smaller angle.
pub fn select_best_angles(report: &ProbeReport, receivers: &[Receiver]) -> BTreeMap<String, f64> {
    let mut best = BTreeMap::new();
    for rx in receivers {
        let Some(col) = report.receivers.iter().position(|n| n == &rx.name) else {
            continue;
        };
        let mut chosen = 0usize;
        for i in 1..report.angles_deg.len() {
            let (p, a) = (report.powers_dbm[i][col], report.angles_deg[i]);
            let (bp, ba) = (report.powers_dbm[chosen][col], report.angles_deg[chosen]);
            let better = match rx.role {
                ReceiverRole::Sensor | ReceiverRole::Desired => p > bp,
                ReceiverRole::Interfered => p < bp,
            };
            let tie = p == bp && (a.abs() < ba.abs() || (a.abs() == ba.abs() && a < ba));
            if better || tie {
                chosen = i;
            }
        }
        best.insert(rx.name.clone(), report.angles_deg[chosen]);
    }
    best
}

fn cover_satisfies(
    report: &ProbeReport,
    receivers: &[(usize, &Receiver)],
    subset: &[usize],
) -> bool {
    receivers.iter().all(|(col, rx)| match rx.role {
        ReceiverRole::Sensor | ReceiverRole::Desired => subset
            .iter()
            .any(|&i| requirement_met(rx.role, report.powers_dbm[i][*col], rx.threshold_dbm)),
        // Interference harm is per-slot: every dwelled angle must stay safe.
        ReceiverRole::Interfered => subset
            .iter()
            .all(|&i| requirement_met(rx.role, report.powers_dbm[i][*col], rx.threshold_dbm)),
    })
}

/// Advances `subset` to the next k-combination of 0..n in lexicographic
/// order. Returns false when the last combination has been passed.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < i + n - k {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Smallest angle subset such that every sensor/desired receiver is served
/// at some angle in it while every interfered receiver stays below its
/// threshold at all of them. Equal-cardinality ties resolve to the
/// lexicographically smallest angle list. When no subset works, the
/// per-receiver best angles are returned flagged infeasible.
pub fn minimal_angle_cover(report: &ProbeReport, receivers: &[Receiver]) -> AngleSelection {
    let cols: Vec<(usize, &Receiver)> = receivers
        .iter()
        .filter_map(|rx| report.receivers.iter().position(|n| n == &rx.name).map(|c| (c, rx)))
        .collect();
    let n = report.angles_deg.len();

    for size in 1..=n {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            if cover_satisfies(report, &cols, &subset) {
                return AngleSelection {
                    angles_deg: subset.iter().map(|&i| report.angles_deg[i]).collect(),
                    feasible: true,
                };
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }

    let mut fallback: Vec<f64> =
        select_best_angles(report, receivers).into_values().collect();
    fallback.sort_by(|a, b| a.partial_cmp(b).unwrap());
    fallback.dedup_by(|a, b| a == b);
    AngleSelection { angles_deg: fallback, feasible: false }
}

/// Selection a context-aware policy would exploit for this scene.
pub fn context_selection(
    scene: &Scene,
    mode: SelectionMode,
    params: &PropagationParams,
) -> Result<AngleSelection, PolicyError> {
    let report = probe_report(scene, params)?;
    Ok(match mode {
        SelectionMode::AllBest => {
            let mut angles: Vec<f64> =
                select_best_angles(&report, &scene.receivers).into_values().collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            angles.dedup_by(|a, b| a == b);
            AngleSelection { angles_deg: angles, feasible: true }
        }
        SelectionMode::MinimalCover => minimal_angle_cover(&report, &scene.receivers),
    })
}

/// Runs a policy over the timeline, recording every receiver's power in
/// each slot. Context-aware policies compute their selection exactly once,
/// at the probe/exploit boundary, from the probe-phase powers.
pub fn run_simulation(
    scene: &Scene,
    policy: &Policy,
    timeline: &TimelineConfig,
    params: &PropagationParams,
) -> Result<SimulationTrace, PolicyError> {
    timeline.validate()?;
    let allowed = scene.ris.allowed_angles.clone();

    if let Policy::Static(angle) = policy {
        if !scene.ris.is_angle_allowed(*angle) {
            return Err(SceneError::AngleNotAllowed(*angle).into());
        }
    }
    let selection = match policy {
        Policy::ContextAware(mode) => {
            let probe_len = allowed.len() * timeline.probe_dwell;
            if timeline.total_slots < probe_len {
                return Err(PolicyError::InvalidTimeline(format!(
                    "total_slots {} is shorter than the {probe_len}-slot probe phase",
                    timeline.total_slots
                )));
            }
            Some(context_selection(scene, *mode, params)?)
        }
        _ => None,
    };
    let ctx = ScheduleContext {
        allowed_angles: &allowed,
        timeline: *timeline,
        selection: selection.as_ref(),
    };

    // The scene is time-invariant, so each angle's powers are computed once.
    let mut cache: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut slots = Vec::with_capacity(timeline.total_slots);
    for slot in 0..timeline.total_slots {
        let angle = angle_for_slot(policy, slot, &ctx);
        let key = (angle * 1e6).round() as i64;
        if let std::collections::btree_map::Entry::Vacant(entry) = cache.entry(key) {
            let applied = scene.apply_ris_angle(angle)?;
            entry.insert(
                scene
                    .receivers
                    .iter()
                    .map(|r| received_power_dbm(&applied, r.position, params))
                    .collect(),
            );
        }
        slots.push(SlotRecord { slot, angle_deg: angle, powers_dbm: cache[&key].clone() });
    }
    Ok(SimulationTrace { receivers: scene.receiver_names(), slots })
}
