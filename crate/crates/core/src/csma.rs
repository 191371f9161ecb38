//! Schedule weights, selection probabilities and link throughputs under
//! standard and flow-aware CSMA.
//!
//! For a finite attempt ratio the active-link process is reversible and its
//! stationary law on feasible schedules is proportional to
//!
//! * standard CSMA: `w(S) = prod_{k in S} alpha_k * 1(x_k > 0)`
//! * flow-aware CSMA: `w(S) = prod_{k in S} alpha_k * x_k`
//!
//! with `w(empty) = 1`. The `alpha -> infinity` limit is handled as its own
//! mode rather than as a large finite value.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{ConflictGraph, ScheduleSet};

/// Above this value of `max alpha_k * x_k` weights are formed in log space.
const LOG_SPACE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Discipline {
    /// One backoff timer per link.
    Standard,
    /// One backoff timer per active flow.
    FlowAware,
}

/// Ratio of mean packet transmission time to mean backoff time.
#[derive(Debug, Clone, PartialEq)]
pub enum Alpha {
    /// Per-link finite ratios, indexed from 0.
    Finite(Vec<f64>),
    /// The limit of vanishing backoff, uniform across links.
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessParams {
    pub discipline: Discipline,
    pub alpha: Alpha,
}

impl AccessParams {
    pub fn new(discipline: Discipline, alpha: Alpha) -> Result<Self> {
        if let Alpha::Finite(a) = &alpha {
            if let Some((k, v)) = a.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::Config(format!(
                    "alpha for link {} must be positive and finite, got {v}",
                    k + 1
                )));
            }
        }
        Ok(Self { discipline, alpha })
    }

    /// Same finite ratio on each of `num_links` links.
    pub fn uniform(discipline: Discipline, alpha: f64, num_links: usize) -> Result<Self> {
        Self::new(discipline, Alpha::Finite(vec![alpha; num_links]))
    }

    pub fn limit(discipline: Discipline) -> Self {
        Self {
            discipline,
            alpha: Alpha::Infinite,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.alpha, Alpha::Infinite)
    }

    fn finite_alpha(&self, num_links: usize) -> Result<&[f64]> {
        match &self.alpha {
            Alpha::Finite(a) if a.len() == num_links => Ok(a),
            Alpha::Finite(a) => Err(Error::Input(format!(
                "{} alpha values for {num_links} links",
                a.len()
            ))),
            Alpha::Infinite => Err(Error::Input(
                "weights are undefined in the alpha -> infinity mode".into(),
            )),
        }
    }
}

/// Number of active flows on each link.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NetworkState(pub Vec<u64>);

impl NetworkState {
    pub fn zeros(num_links: usize) -> Self {
        Self(vec![0; num_links])
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of all flow counts.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Mask of links with at least one active flow.
    pub fn busy_mask(&self) -> u32 {
        busy_mask(&self.0)
    }

    /// State with one more flow on the 0-based link `k`.
    pub fn incremented(&self, k: usize) -> Self {
        let mut x = self.clone();
        x.0[k] += 1;
        x
    }

    /// State with one fewer flow on the 0-based link `k`; `None` if it is idle.
    pub fn decremented(&self, k: usize) -> Option<Self> {
        let mut x = self.clone();
        x.0[k] = x.0[k].checked_sub(1)?;
        Some(x)
    }
}

impl From<Vec<u64>> for NetworkState {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

pub(crate) fn busy_mask(x: &[u64]) -> u32 {
    x.iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .fold(0, |m, (k, _)| m | 1 << k)
}

/// Selection probability of each schedule, aligned with [`ScheduleSet`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDistribution(pub Vec<f64>);

impl ScheduleDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    /// Fraction of time each link is active, indexed from 0.
    pub fn activity(&self, schedules: &ScheduleSet) -> Vec<f64> {
        let mut act = vec![0.0; schedules.num_links()];
        accumulate_activity(schedules.masks(), &self.0, &mut act);
        act
    }
}

fn accumulate_activity(masks: &[u32], p: &[f64], act: &mut [f64]) {
    act.iter_mut().for_each(|a| *a = 0.0);
    for (&m, &pi) in masks.iter().zip(p) {
        let mut rest = m;
        while rest != 0 {
            act[rest.trailing_zeros() as usize] += pi;
            rest &= rest - 1;
        }
    }
}

fn check_state(schedules: &ScheduleSet, state: &NetworkState) -> Result<()> {
    if state.len() != schedules.num_links() {
        return Err(Error::Input(format!(
            "state has {} entries for {} links",
            state.len(),
            schedules.num_links()
        )));
    }
    Ok(())
}

/// Attempt intensity of each link: `alpha_k * 1(x_k > 0)` or `alpha_k * x_k`.
fn intensities(discipline: Discipline, alpha: &[f64], x: &[u64], out: &mut [f64]) {
    for ((o, &a), &n) in out.iter_mut().zip(alpha).zip(x) {
        *o = match discipline {
            Discipline::Standard if n > 0 => a,
            Discipline::Standard => 0.0,
            Discipline::FlowAware => a * n as f64,
        };
    }
}

fn mask_product(mask: u32, factors: &[f64]) -> f64 {
    let mut w = 1.0;
    let mut rest = mask;
    while rest != 0 {
        w *= factors[rest.trailing_zeros() as usize];
        rest &= rest - 1;
    }
    w
}

/// Normalized schedule probabilities from per-link intensities, switching
/// to log space when intensities are large.
fn normalized_from_intensities(masks: &[u32], intensity: &[f64], out: &mut [f64]) {
    let max_intensity = intensity.iter().copied().fold(0.0, f64::max);
    if max_intensity > LOG_SPACE_THRESHOLD {
        let mut max_log = f64::NEG_INFINITY;
        for (o, &m) in out.iter_mut().zip(masks) {
            let mut lw = 0.0;
            let mut rest = m;
            while rest != 0 {
                lw += intensity[rest.trailing_zeros() as usize].ln();
                rest &= rest - 1;
            }
            *o = lw;
            max_log = max_log.max(lw);
        }
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max_log).exp();
            total += *o;
        }
        out.iter_mut().for_each(|o| *o /= total);
    } else {
        let mut total = 0.0;
        for (o, &m) in out.iter_mut().zip(masks) {
            *o = mask_product(m, intensity);
            total += *o;
        }
        out.iter_mut().for_each(|o| *o /= total);
    }
}

/// Unnormalized stationary weight of each feasible schedule.
pub fn schedule_weights(
    schedules: &ScheduleSet,
    state: &NetworkState,
    params: &AccessParams,
) -> Result<Vec<f64>> {
    check_state(schedules, state)?;
    let alpha = params.finite_alpha(schedules.num_links())?;
    let mut intensity = vec![0.0; alpha.len()];
    intensities(params.discipline, alpha, state.counts(), &mut intensity);
    Ok(schedules.iter().map(|m| mask_product(m, &intensity)).collect())
}

/// Probability that each schedule is active in `state`.
pub fn schedule_distribution(
    schedules: &ScheduleSet,
    state: &NetworkState,
    params: &AccessParams,
) -> Result<ScheduleDistribution> {
    check_state(schedules, state)?;
    if params.is_limit() {
        return limit_distribution(schedules, state, params.discipline);
    }
    let alpha = params.finite_alpha(schedules.num_links())?;
    let mut intensity = vec![0.0; alpha.len()];
    intensities(params.discipline, alpha, state.counts(), &mut intensity);
    let mut p = vec![0.0; schedules.len()];
    normalized_from_intensities(schedules.masks(), &intensity, &mut p);
    Ok(ScheduleDistribution(p))
}

/// Schedule distribution in the limit of vanishing backoff times: only the
/// largest schedules made of busy links survive. Standard CSMA picks among
/// them uniformly; flow-aware CSMA in proportion to the product of flow
/// counts.
pub fn limit_distribution(
    schedules: &ScheduleSet,
    state: &NetworkState,
    discipline: Discipline,
) -> Result<ScheduleDistribution> {
    check_state(schedules, state)?;
    let mut p = vec![0.0; schedules.len()];
    limit_into(schedules.masks(), state.counts(), discipline, &mut p);
    Ok(ScheduleDistribution(p))
}

fn limit_into(masks: &[u32], x: &[u64], discipline: Discipline, out: &mut [f64]) {
    let busy = busy_mask(x);
    let best = masks
        .iter()
        .filter(|&&m| m & !busy == 0)
        .map(|m| m.count_ones())
        .max()
        .unwrap_or(0);
    // Flow-aware ties are broken by prod x_k; rescale by the largest count
    // so that the products stay finite for huge states.
    let scale = x.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut total = 0.0;
    for (o, &m) in out.iter_mut().zip(masks) {
        *o = if m & !busy == 0 && m.count_ones() == best {
            match discipline {
                Discipline::Standard => 1.0,
                Discipline::FlowAware => {
                    let mut w = 1.0;
                    let mut rest = m;
                    while rest != 0 {
                        w *= x[rest.trailing_zeros() as usize] as f64 / scale;
                        rest &= rest - 1;
                    }
                    w
                }
            }
        } else {
            0.0
        };
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Throughput of each link in `state` (bit/s): physical rate times the
/// probability that the link is scheduled.
pub fn link_throughputs(
    schedules: &ScheduleSet,
    state: &NetworkState,
    params: &AccessParams,
    graph: &ConflictGraph,
) -> Result<Vec<f64>> {
    if graph.num_links() != schedules.num_links() {
        return Err(Error::Input("schedule set does not match the graph".into()));
    }
    let dist = schedule_distribution(schedules, state, params)?;
    Ok(dist
        .activity(schedules)
        .into_iter()
        .zip(graph.rates())
        .map(|(a, r)| a * r)
        .collect())
}

/// Reusable evaluator of `state -> link throughputs` for the inner loops of
/// simulators and solvers.
///
/// Under standard CSMA the throughputs depend only on the busy set, so they
/// are memoized per busy mask.
#[derive(Debug, Clone)]
pub struct ThroughputModel {
    masks: Vec<u32>,
    rates: Vec<f64>,
    discipline: Discipline,
    alpha: Option<Vec<f64>>,
    intensity: Vec<f64>,
    probs: Vec<f64>,
    activity: Vec<f64>,
    by_busy_set: HashMap<u32, Vec<f64>>,
}

impl ThroughputModel {
    pub fn new(graph: &ConflictGraph, schedules: &ScheduleSet, params: &AccessParams) -> Result<Self> {
        let k = graph.num_links();
        if schedules.num_links() != k {
            return Err(Error::Input("schedule set does not match the graph".into()));
        }
        let alpha = match &params.alpha {
            Alpha::Infinite => None,
            Alpha::Finite(_) => Some(params.finite_alpha(k)?.to_vec()),
        };
        Ok(Self {
            masks: schedules.masks().to_vec(),
            rates: graph.rates().to_vec(),
            discipline: params.discipline,
            alpha,
            intensity: vec![0.0; k],
            probs: vec![0.0; schedules.len()],
            activity: vec![0.0; k],
            by_busy_set: HashMap::new(),
        })
    }

    pub fn num_links(&self) -> usize {
        self.rates.len()
    }

    /// Writes the throughput of every link in state `x` into `out`.
    pub fn throughputs(&mut self, x: &[u64], out: &mut [f64]) {
        if self.discipline == Discipline::Standard {
            let busy = busy_mask(x);
            if let Some(cached) = self.by_busy_set.get(&busy) {
                out.copy_from_slice(cached);
                return;
            }
            self.evaluate(x, out);
            self.by_busy_set.insert(busy, out.to_vec());
        } else {
            self.evaluate(x, out);
        }
    }

    fn evaluate(&mut self, x: &[u64], out: &mut [f64]) {
        match &self.alpha {
            Some(alpha) => {
                intensities(self.discipline, alpha, x, &mut self.intensity);
                normalized_from_intensities(&self.masks, &self.intensity, &mut self.probs);
            }
            None => limit_into(&self.masks, x, self.discipline, &mut self.probs),
        }
        accumulate_activity(&self.masks, &self.probs, &mut self.activity);
        for ((o, a), r) in out.iter_mut().zip(&self.activity).zip(&self.rates) {
            *o = a * r;
        }
    }
}
