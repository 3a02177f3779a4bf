//! Trace post-processing: per-receiver satisfaction time fractions,
//! interference statistics (mean, median, p10, p90), and inter-policy
//! deltas.
//!
//! Statistics are computed over dBm samples (the report labels the mean
//! "dB-domain"); a linear-milliwatt mean is available behind a flag for
//! sensitivity checks. Percentiles use the nearest-rank rule with no
//! interpolation.

use thiserror::Error;

use crate::policy::SimulationTrace;
use crate::scene::{Receiver, ReceiverRole};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("UnknownReceiver: {0:?} is not in the trace")]
    UnknownReceiver(String),
    #[error("ReceiverSetMismatch: {0}")]
    ReceiverSetMismatch(String),
}

/// Which side of the threshold satisfies a receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtLeast,
    Below,
}

/// A per-receiver requirement on received power.
#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    pub receiver: String,
    pub direction: Direction,
    pub threshold_dbm: f64,
}

impl Requirement {
    /// The requirement implied by a receiver's role and threshold.
    pub fn for_receiver(rx: &Receiver) -> Requirement {
        let direction = match rx.role {
            ReceiverRole::Sensor | ReceiverRole::Desired => Direction::AtLeast,
            ReceiverRole::Interfered => Direction::Below,
        };
        Requirement { receiver: rx.name.clone(), direction, threshold_dbm: rx.threshold_dbm }
    }

    pub fn met_by(&self, power_dbm: f64) -> bool {
        match self.direction {
            Direction::AtLeast => power_dbm >= self.threshold_dbm,
            Direction::Below => power_dbm < self.threshold_dbm,
        }
    }
}

/// Domain in which the mean statistic is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanDomain {
    /// Arithmetic mean of the dBm samples.
    #[default]
    Db,
    /// Mean of linear milliwatts, converted back to dBm.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerStats {
    pub mean_dbm: f64,
    pub median_dbm: f64,
    pub p10_dbm: f64,
    pub p90_dbm: f64,
}

/// Share of slots in which the requirement holds.
pub fn satisfaction_fraction(
    trace: &SimulationTrace,
    requirement: &Requirement,
) -> Result<f64, MetricsError> {
    let powers = trace
        .powers_for(&requirement.receiver)
        .ok_or_else(|| MetricsError::UnknownReceiver(requirement.receiver.clone()))?;
    if powers.is_empty() {
        return Ok(0.0);
    }
    let met = powers.iter().filter(|p| requirement.met_by(**p)).count();
    Ok(met as f64 / powers.len() as f64)
}

/// Nearest-rank percentile of sorted samples: the value at index
/// ceil(q·N) − 1 (0-based).
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Mean, median, p10 and p90 of one receiver's power samples.
pub fn power_stats(
    trace: &SimulationTrace,
    receiver: &str,
    mean_domain: MeanDomain,
) -> Result<PowerStats, MetricsError> {
    let powers = trace
        .powers_for(receiver)
        .ok_or_else(|| MetricsError::UnknownReceiver(receiver.to_string()))?;
    assert!(!powers.is_empty(), "power_stats requires at least one slot");
    let mean_dbm = match mean_domain {
        MeanDomain::Db => powers.iter().sum::<f64>() / powers.len() as f64,
        MeanDomain::Linear => {
            let mw: f64 = powers.iter().map(|p| 10f64.powf(p / 10.0)).sum();
            10.0 * (mw / powers.len() as f64).log10()
        }
    };
    let mut sorted = powers;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(PowerStats {
        mean_dbm,
        median_dbm: nearest_rank(&sorted, 0.5),
        p10_dbm: nearest_rank(&sorted, 0.1),
        p90_dbm: nearest_rank(&sorted, 0.9),
    })
}

/// Metrics for one receiver within a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverMetrics {
    pub name: String,
    pub role: ReceiverRole,
    pub threshold_dbm: f64,
    pub satisfaction_fraction: f64,
    /// Interference statistics; present for interfered receivers.
    pub stats: Option<PowerStats>,
}

/// Satisfaction fractions for every receiver plus interference statistics
/// for the interfered ones.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub receivers: Vec<ReceiverMetrics>,
    pub mean_domain: MeanDomain,
}

/// Builds the standard report for a trace, deriving each requirement from
/// the receiver's role and threshold.
pub fn build_report(
    trace: &SimulationTrace,
    receivers: &[Receiver],
    mean_domain: MeanDomain,
) -> Result<MetricsReport, MetricsError> {
    let mut out = Vec::with_capacity(receivers.len());
    for rx in receivers {
        let requirement = Requirement::for_receiver(rx);
        let fraction = satisfaction_fraction(trace, &requirement)?;
        let stats = if rx.role == ReceiverRole::Interfered {
            Some(power_stats(trace, &rx.name, mean_domain)?)
        } else {
            None
        };
        out.push(ReceiverMetrics {
            name: rx.name.clone(),
            role: rx.role,
            threshold_dbm: rx.threshold_dbm,
            satisfaction_fraction: fraction,
            stats,
        });
    }
    Ok(MetricsReport { receivers: out, mean_domain })
}

fn mean_label(domain: MeanDomain) -> &'static str {
    match domain {
        MeanDomain::Db => "dB-domain mean",
        MeanDomain::Linear => "linear-domain mean",
    }
}

fn role_label(role: ReceiverRole) -> &'static str {
    match role {
        ReceiverRole::Sensor => "sensor",
        ReceiverRole::Desired => "desired",
        ReceiverRole::Interfered => "interfered",
    }
}

impl MetricsReport {
    pub fn receiver(&self, name: &str) -> Option<&ReceiverMetrics> {
        self.receivers.iter().find(|r| r.name == name)
    }

    /// Machine-readable CSV: `receiver,statistic,value`, three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("receiver,statistic,value\n");
        for rx in &self.receivers {
            out.push_str(&format!(
                "{},satisfaction_fraction,{:.3}\n",
                rx.name, rx.satisfaction_fraction
            ));
            if let Some(stats) = &rx.stats {
                out.push_str(&format!("{},mean_dbm,{:.3}\n", rx.name, stats.mean_dbm));
                out.push_str(&format!("{},median_dbm,{:.3}\n", rx.name, stats.median_dbm));
                out.push_str(&format!("{},p10_dbm,{:.3}\n", rx.name, stats.p10_dbm));
                out.push_str(&format!("{},p90_dbm,{:.3}\n", rx.name, stats.p90_dbm));
            }
        }
        out
    }

    /// Human-readable table. Fractions are shown as percentages with two
    /// decimals; the mean column is labeled with its averaging domain.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:<11} {:>10} {:>12}   interference stats ({})\n",
            "receiver", "role", "threshold", "satisfied", mean_label(self.mean_domain)
        ));
        for rx in &self.receivers {
            let stats = match &rx.stats {
                Some(s) => format!(
                    "mean {:.3}  median {:.3}  p10 {:.3}  p90 {:.3}",
                    s.mean_dbm, s.median_dbm, s.p10_dbm, s.p90_dbm
                ),
                None => String::from("-"),
            };
            out.push_str(&format!(
                "{:<10} {:<11} {:>10} {:>11.2}%   {}\n",
                rx.name,
                role_label(rx.role),
                format!("{:.1} dBm", rx.threshold_dbm),
                rx.satisfaction_fraction * 100.0,
                stats
            ));
        }
        out
    }
}

/// Per-receiver differences between two reports (a − b).
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverDelta {
    pub name: String,
    pub fraction_delta: f64,
    pub stats_delta: Option<PowerStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub receivers: Vec<ReceiverDelta>,
}

/// Statistic-by-statistic differences between two reports over the same
/// receiver set.
pub fn compare_policies(a: &MetricsReport, b: &MetricsReport) -> Result<DeltaReport, MetricsError> {
    let names_a: Vec<&str> = a.receivers.iter().map(|r| r.name.as_str()).collect();
    let names_b: Vec<&str> = b.receivers.iter().map(|r| r.name.as_str()).collect();
    if names_a != names_b {
        return Err(MetricsError::ReceiverSetMismatch(format!(
            "receiver sets differ: {names_a:?} vs {names_b:?}"
        )));
    }
    let receivers = a
        .receivers
        .iter()
        .zip(&b.receivers)
        .map(|(ra, rb)| ReceiverDelta {
            name: ra.name.clone(),
            fraction_delta: ra.satisfaction_fraction - rb.satisfaction_fraction,
            stats_delta: match (&ra.stats, &rb.stats) {
                (Some(sa), Some(sb)) => Some(PowerStats {
                    mean_dbm: sa.mean_dbm - sb.mean_dbm,
                    median_dbm: sa.median_dbm - sb.median_dbm,
                    p10_dbm: sa.p10_dbm - sb.p10_dbm,
                    p90_dbm: sa.p90_dbm - sb.p90_dbm,
                }),
                _ => None,
            },
        })
        .collect();
    Ok(DeltaReport { receivers })
}

impl DeltaReport {
    pub fn receiver(&self, name: &str) -> Option<&ReceiverDelta> {
        self.receivers.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("receiver,statistic,delta\n");
        for rx in &self.receivers {
            out.push_str(&format!(
                "{},satisfaction_fraction,{:.3}\n",
                rx.name, rx.fraction_delta
            ));
            if let Some(s) = &rx.stats_delta {
                out.push_str(&format!("{},mean_dbm,{:.3}\n", rx.name, s.mean_dbm));
                out.push_str(&format!("{},median_dbm,{:.3}\n", rx.name, s.median_dbm));
                out.push_str(&format!("{},p10_dbm,{:.3}\n", rx.name, s.p10_dbm));
                out.push_str(&format!("{},p90_dbm,{:.3}\n", rx.name, s.p90_dbm));
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("receiver   fraction-delta   interference stat deltas (dB)\n");
        for rx in &self.receivers {
            let stats = match &rx.stats_delta {
                Some(s) => format!(
                    "mean {:+.3}  median {:+.3}  p10 {:+.3}  p90 {:+.3}",
                    s.mean_dbm, s.median_dbm, s.p10_dbm, s.p90_dbm
                ),
                None => String::from("-"),
            };
            out.push_str(&format!(
                "{:<10} {:>+13.2}%   {}\n",
                rx.name,
                rx.fraction_delta * 100.0,
                stats
            ));
        }
        out
    }
}
