use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Point;
use crate::model::{MipInstance, Sense};
use crate::potential::{Configuration, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    GapLimit,
    TimeLimit,
}

/// Result of solving one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `min_p (Wᵀy)_p` for the reported `y`.
    pub value: f64,
    pub y: Vec<u32>,
    /// Candidate sites with nonzero multiplicity (empty for custom instances).
    pub configuration: Vec<(Point, u32)>,
    /// Probability vector over Γ; empty when no certificate was computed.
    pub dual_lambda: Vec<f64>,
    /// Sort-based bound certified by `dual_lambda`.
    pub dual_bound: f64,
    pub gap: f64,
    pub nodes_explored: u64,
    pub wall_time: Duration,
    pub status: Status,
}

impl BoundReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        inst: &MipInstance,
        value: f64,
        y: Vec<u32>,
        dual_lambda: Vec<f64>,
        dual_bound: f64,
        gap: f64,
        nodes_explored: u64,
        wall_time: Duration,
        status: Status,
    ) -> BoundReport {
        let configuration = if inst.lambda_points.len() == y.len() {
            y.iter()
                .zip(&inst.lambda_points)
                .filter(|(k, _)| **k > 0)
                .map(|(k, p)| (*p, *k))
                .collect()
        } else {
            Vec::new()
        };
        BoundReport {
            value,
            y,
            configuration,
            dual_lambda,
            dual_bound,
            gap,
            nodes_explored,
            wall_time,
            status,
        }
    }

    pub fn to_configuration(&self) -> Result<Configuration> {
        Configuration::from_counts(&self.configuration)
    }
}

/// On-disk form of a [`BoundReport`] plus the instance metadata needed to
/// recompute its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    pub value: f64,
    pub gap: f64,
    pub status: Status,
    pub nodes: u64,
    pub wall_ms: u64,
    /// `[x, y, count]` per selected candidate site.
    pub configuration: Vec<[f64; 3]>,
    pub dual_lambda: Vec<f64>,
    pub dual_bound: f64,
    pub sense: Sense,
    #[serde(rename = "N")]
    pub n: u32,
    pub binary: bool,
    pub epsilon_used: f64,
    pub potential: Option<PotentialSpec>,
    pub n_lambda: usize,
    pub n_gamma: usize,
}

impl ReportRecord {
    pub fn new(report: &BoundReport, inst: &MipInstance) -> ReportRecord {
        ReportRecord {
            value: report.value,
            gap: report.gap,
            status: report.status,
            nodes: report.nodes_explored,
            wall_ms: report.wall_time.as_millis() as u64,
            configuration: report
                .configuration
                .iter()
                .map(|(p, k)| [p.x, p.y, *k as f64])
                .collect(),
            dual_lambda: report.dual_lambda.clone(),
            dual_bound: report.dual_bound,
            sense: inst.sense,
            n: inst.n,
            binary: inst.binary,
            epsilon_used: inst.epsilon_used,
            potential: inst.potential,
            n_lambda: inst.n_lambda(),
            n_gamma: inst.n_gamma(),
        }
    }

    pub fn configuration_counts(&self) -> Vec<(Point, u32)> {
        self.configuration
            .iter()
            .map(|&[x, y, k]| (Point::new(x, y), k as u32))
            .collect()
    }

    pub fn to_configuration(&self) -> Result<Configuration> {
        Configuration::from_counts(&self.configuration_counts())
    }
}
