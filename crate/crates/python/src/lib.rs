//! Python bindings for the ris-sim core: scene loading, point power
//! queries, coverage grids, and policy runs, driven in-process.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use ris_sim_core::geometry::Point;
use ris_sim_core::metrics::{power_stats, satisfaction_fraction, MeanDomain, Requirement};
use ris_sim_core::policy::{
    context_selection, run_simulation, Policy, SimulationTrace, TimelineConfig,
};
use ris_sim_core::propagation::{
    coverage_grid, received_power_dbm, trace_paths, PropagationParams, Summation,
};
use ris_sim_core::scene as core_scene;

fn parse_params(
    max_order: usize,
    reflection_loss_db: f64,
    summation: &str,
    noise_floor_dbm: f64,
) -> PyResult<PropagationParams> {
    let summation = match summation {
        "power-sum" => Summation::PowerSum,
        "strongest" => Summation::StrongestPath,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown summation {other:?}; expected 'power-sum' or 'strongest'"
            )))
        }
    };
    let params =
        PropagationParams { max_order, reflection_loss_db, summation, noise_floor_dbm };
    params.validate().map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(params)
}

fn parse_policy(spec: &str) -> PyResult<Policy> {
    ris_sim_core::cli::parse_policy(spec).map_err(PyValueError::new_err)
}

/// (order, length_m, vertices) of one traced path.
type PathTuple = (usize, f64, Vec<(f64, f64)>);

/// An immutable world: walls, one rotatable RIS panel, a transmitter and
/// named receivers.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Scene {
    inner: core_scene::Scene,
}

#[pymethods]
impl Scene {
    /// Parse a scene from file contents.
    #[staticmethod]
    fn from_str(text: &str) -> PyResult<Self> {
        let inner =
            core_scene::load_scene(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Scene { inner })
    }

    /// Load and validate a scene file from disk.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Scene::from_str(&text)
    }

    /// The repository's reference layout.
    #[staticmethod]
    fn canonical() -> Self {
        Scene { inner: core_scene::canonical_scene() }
    }

    fn receiver_names(&self) -> Vec<String> {
        self.inner.receiver_names()
    }

    fn allowed_angles(&self) -> Vec<f64> {
        self.inner.ris.allowed_angles.clone()
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let b = self.inner.bounds;
        ((b.min.x, b.min.y), (b.max.x, b.max.y))
    }

    fn tx_power_dbm(&self) -> f64 {
        self.inner.tx.power_dbm
    }

    fn receiver_position(&self, name: &str) -> PyResult<(f64, f64)> {
        let rx = self
            .inner
            .receiver(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown receiver {name:?}")))?;
        Ok((rx.position.x, rx.position.y))
    }

    fn receiver_threshold_dbm(&self, name: &str) -> PyResult<f64> {
        let rx = self
            .inner
            .receiver(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown receiver {name:?}")))?;
        Ok(rx.threshold_dbm)
    }

    /// Received power in dBm at a point with the RIS at `angle_deg`.
    #[pyo3(signature = (angle_deg, x, y, max_order=3, reflection_loss_db=3.0,
                        summation="power-sum", noise_floor_dbm=-200.0))]
    #[allow(clippy::too_many_arguments)]
    fn received_power_dbm(
        &self,
        angle_deg: f64,
        x: f64,
        y: f64,
        max_order: usize,
        reflection_loss_db: f64,
        summation: &str,
        noise_floor_dbm: f64,
    ) -> PyResult<f64> {
        let params = parse_params(max_order, reflection_loss_db, summation, noise_floor_dbm)?;
        let applied = self
            .inner
            .apply_ris_angle(angle_deg)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(received_power_dbm(&applied, Point::new(x, y), &params))
    }

    /// Every specular path to a point as (order, length_m, vertices).
    #[pyo3(signature = (angle_deg, x, y, max_order=3))]
    fn trace_paths(
        &self,
        angle_deg: f64,
        x: f64,
        y: f64,
        max_order: usize,
    ) -> PyResult<Vec<PathTuple>> {
        let params = PropagationParams { max_order, ..Default::default() };
        params.validate().map_err(|e| PyValueError::new_err(e.to_string()))?;
        let applied = self
            .inner
            .apply_ris_angle(angle_deg)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let paths = trace_paths(&applied, Point::new(x, y), &params);
        Ok(paths
            .into_iter()
            .map(|p| {
                (p.order, p.length_m, p.vertices.iter().map(|v| (v.x, v.y)).collect())
            })
            .collect())
    }

    /// Row-major coverage grid in dBm (row 0 at the top of the area).
    #[pyo3(signature = (angle_deg, spacing_m, max_order=3, reflection_loss_db=3.0,
                        summation="power-sum", noise_floor_dbm=-200.0))]
    #[allow(clippy::too_many_arguments)]
    fn coverage_grid(
        &self,
        angle_deg: f64,
        spacing_m: f64,
        max_order: usize,
        reflection_loss_db: f64,
        summation: &str,
        noise_floor_dbm: f64,
    ) -> PyResult<Vec<Vec<f64>>> {
        let params = parse_params(max_order, reflection_loss_db, summation, noise_floor_dbm)?;
        let applied = self
            .inner
            .apply_ris_angle(angle_deg)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let grid = coverage_grid(&applied, spacing_m, &params)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((0..grid.rows)
            .map(|r| (0..grid.cols).map(|c| grid.value(r, c)).collect())
            .collect())
    }

    /// Run a control policy over the slotted timeline.
    ///
    /// `policy` uses the CLI grammar: "static:<angle>", "periodic",
    /// "context:all-best" or "context:minimal-cover".
    #[pyo3(signature = (policy, total_slots=96, dwell_slots=2, probe_dwell=1,
                        max_order=3, reflection_loss_db=3.0, summation="power-sum",
                        noise_floor_dbm=-200.0))]
    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        policy: &str,
        total_slots: usize,
        dwell_slots: usize,
        probe_dwell: usize,
        max_order: usize,
        reflection_loss_db: f64,
        summation: &str,
        noise_floor_dbm: f64,
    ) -> PyResult<RunResult> {
        let params = parse_params(max_order, reflection_loss_db, summation, noise_floor_dbm)?;
        let policy = parse_policy(policy)?;
        let timeline = TimelineConfig { total_slots, dwell_slots, probe_dwell };
        let trace = run_simulation(&self.inner, &policy, &timeline, &params)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let selected = match policy {
            Policy::ContextAware(mode) => Some(
                context_selection(&self.inner, mode, &params)
                    .map_err(|e| PyValueError::new_err(e.to_string()))?
                    .angles_deg,
            ),
            _ => None,
        };
        Ok(RunResult { scene: self.inner.clone(), trace, selected })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene(receivers={:?}, walls={}, angles={})",
            self.inner.receiver_names(),
            self.inner.walls.len(),
            self.inner.ris.allowed_angles.len()
        )
    }
}

/// A finished policy run: the per-slot trace plus metric queries.
#[pyclass]
struct RunResult {
    scene: core_scene::Scene,
    trace: SimulationTrace,
    selected: Option<Vec<f64>>,
}

#[pymethods]
impl RunResult {
    fn receivers(&self) -> Vec<String> {
        self.trace.receivers.clone()
    }

    /// Applied RIS angle per slot.
    fn angles(&self) -> Vec<f64> {
        self.trace.slots.iter().map(|s| s.angle_deg).collect()
    }

    /// Per-slot received power for one receiver.
    fn powers(&self, receiver: &str) -> PyResult<Vec<f64>> {
        self.trace
            .powers_for(receiver)
            .ok_or_else(|| PyValueError::new_err(format!("unknown receiver {receiver:?}")))
    }

    /// Share of slots in which the receiver's role requirement holds.
    fn satisfaction_fraction(&self, receiver: &str) -> PyResult<f64> {
        let rx = self
            .scene
            .receiver(receiver)
            .ok_or_else(|| PyValueError::new_err(format!("unknown receiver {receiver:?}")))?;
        satisfaction_fraction(&self.trace, &Requirement::for_receiver(rx))
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// (mean, median, p10, p90) of the receiver's power in dBm.
    fn power_stats(&self, receiver: &str) -> PyResult<(f64, f64, f64, f64)> {
        let s = power_stats(&self.trace, receiver, MeanDomain::Db)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((s.mean_dbm, s.median_dbm, s.p10_dbm, s.p90_dbm))
    }

    /// Exploit-phase angle set of a context-aware run, None otherwise.
    fn selected_angles(&self) -> Option<Vec<f64>> {
        self.selected.clone()
    }

    /// The trace in the CLI's CSV format.
    fn trace_csv(&self) -> String {
        self.trace.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(slots={}, receivers={:?})",
            self.trace.slots.len(),
            self.trace.receivers
        )
    }
}

#[pymodule]
fn ris_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Scene>()?;
    m.add_class::<RunResult>()?;
    Ok(())
}
