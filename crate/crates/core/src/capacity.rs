//! Capacity region membership via a linear program over schedule mixtures.
//!
//! The load of a traffic vector is `1 / theta*` where `theta*` is the largest
//! scaling such that `theta * rho` is achievable by time-sharing feasible
//! schedules.

use crate::error::{Error, Result};
use crate::graph::{ConflictGraph, ScheduleSet};
use crate::lp;

/// `|load - 1|` at or below this is classified as boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Per-link flow arrival rates and mean flow sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficProfile {
    arrival_rates: Vec<f64>,
    mean_sizes: Vec<f64>,
}

impl TrafficProfile {
    pub fn new(arrival_rates: Vec<f64>, mean_sizes: Vec<f64>) -> Result<Self> {
        if arrival_rates.len() != mean_sizes.len() || arrival_rates.is_empty() {
            return Err(Error::Config(format!(
                "{} arrival rates for {} mean sizes",
                arrival_rates.len(),
                mean_sizes.len()
            )));
        }
        for (k, (&l, &s)) in arrival_rates.iter().zip(&mean_sizes).enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Config(format!(
                    "link {} arrival rate must be positive, got {l}",
                    k + 1
                )));
            }
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Config(format!(
                    "link {} mean flow size must be positive, got {s}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            arrival_rates,
            mean_sizes,
        })
    }

    /// Traffic with the given intensities and unit mean flow sizes.
    pub fn from_intensities(rho: &[f64]) -> Result<Self> {
        Self::new(rho.to_vec(), vec![1.0; rho.len()])
    }

    /// Same intensity on every link, unit mean flow sizes.
    pub fn symmetric(num_links: usize, rho: f64) -> Result<Self> {
        Self::from_intensities(&vec![rho; num_links])
    }

    pub fn num_links(&self) -> usize {
        self.arrival_rates.len()
    }

    pub fn arrival_rates(&self) -> &[f64] {
        &self.arrival_rates
    }

    pub fn mean_sizes(&self) -> &[f64] {
        &self.mean_sizes
    }

    /// Traffic intensity `lambda_k * sigma_k` (bit/s).
    pub fn intensity(&self, k: usize) -> f64 {
        self.arrival_rates[k] * self.mean_sizes[k]
    }

    pub fn intensities(&self) -> Vec<f64> {
        (0..self.num_links()).map(|k| self.intensity(k)).collect()
    }

    /// Maximum departure rate of link `k` given its physical rate:
    /// `phi_k / sigma_k`.
    pub fn service_rate(&self, k: usize, physical_rate: f64) -> f64 {
        physical_rate / self.mean_sizes[k]
    }

    /// All arrival rates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.arrival_rates.iter().map(|l| l * factor).collect(),
            self.mean_sizes.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVerdict {
    /// `1 / theta*`; below one means strictly inside the capacity region.
    pub load: f64,
    pub region: Region,
    /// `(1 - load) / 2` for interior points.
    pub margin: Option<f64>,
    /// Optimal schedule mixture, aligned with the schedule set.
    pub witness: Vec<f64>,
}

/// Solves the capacity LP for `traffic` on `graph`.
pub fn capacity_verdict(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
) -> Result<CapacityVerdict> {
    let k = graph.num_links();
    if traffic.num_links() != k || schedules.num_links() != k {
        return Err(Error::Input(format!(
            "traffic has {} links, graph has {k}",
            traffic.num_links()
        )));
    }
    let n = schedules.len();
    // Variables: q_1..q_N, theta.
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut a = Vec::with_capacity(k + 1);
    let mut b = Vec::with_capacity(k + 1);
    for link in 0..k {
        let mut row = vec![0.0; n + 1];
        for (i, m) in schedules.iter().enumerate() {
            if m & (1 << link) != 0 {
                row[i] = -graph.rates()[link];
            }
        }
        row[n] = traffic.intensity(link);
        a.push(row);
        b.push(0.0);
    }
    let mut simplex = vec![1.0; n + 1];
    simplex[n] = 0.0;
    a.push(simplex);
    b.push(1.0);

    let sol = lp::maximize(&c, &a, &b)?;
    let theta = sol.objective;
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::Numerical(format!(
            "capacity LP returned non-positive scaling {theta} after {} pivots",
            sol.pivots
        )));
    }
    let mut witness = sol.x[..n].to_vec();
    // Unused probability mass goes to the idle schedule.
    let slack = 1.0 - witness.iter().sum::<f64>();
    if slack > 0.0 {
        witness[0] += slack;
    }
    let load = 1.0 / theta;
    let region = classify_load(load);
    let margin = (region == Region::Interior).then(|| (1.0 - load) / 2.0);
    Ok(CapacityVerdict {
        load,
        region,
        margin,
        witness,
    })
}

pub fn classify_load(load: f64) -> Region {
    if (load - 1.0).abs() <= BOUNDARY_TOL {
        Region::Boundary
    } else if load < 1.0 {
        Region::Interior
    } else {
        Region::Exterior
    }
}

/// Rescales arrival rates so that the load becomes `target_load`.
pub fn scale_to_load(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
    target_load: f64,
) -> Result<TrafficProfile> {
    if !(target_load.is_finite() && target_load > 0.0) {
        return Err(Error::Input(format!("target load must be positive, got {target_load}")));
    }
    let current = capacity_verdict(graph, schedules, traffic)?.load;
    traffic.scaled(target_load / current)
}
