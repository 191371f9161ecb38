//! Flow-level Markov process: simulation, empirical stability and the
//! Lyapunov drift of flow-aware CSMA.
//!
//! In state `x` flows arrive on link `k` at rate `lambda_k` and complete at
//! rate `phi_k(x) / sigma_k`, where `phi_k(x)` is the link throughput under
//! the access discipline.
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based generator: a run is fully determined by its seed, and
//! independent replicas of one seed use distinct ChaCha streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::TrafficProfile;
use crate::csma::{link_throughputs, AccessParams, Alpha, Discipline, NetworkState, ThroughputModel};
use crate::error::{Error, Result};
use crate::graph::{ConflictGraph, ScheduleSet};
use crate::stats::{fit_slope, mean_half_width};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.95;

/// How the time spent in each visited state is accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoldingTime {
    /// Weight each state by its expected holding time `1 / total rate`.
    Expected,
    /// Draw exponential holding times.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Jumps over which statistics are collected, after the warm-up.
    pub jumps: u64,
    pub warmup_jumps: u64,
    pub seed: u64,
    pub num_batches: usize,
    /// Starting state; all links idle when `None`.
    pub initial_state: Option<Vec<u64>>,
    /// Arrivals to a link holding this many flows are suppressed.
    pub state_cap: Option<u64>,
    pub holding: HoldingTime,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            jumps: 10_000_000,
            warmup_jumps: 100_000,
            seed: 0,
            num_batches: 20,
            initial_state: None,
            state_cap: None,
            holding: HoldingTime::Expected,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_jumps >= self.jumps {
            return Err(Error::Config(format!(
                "warm-up ({}) must be shorter than the run ({})",
                self.warmup_jumps, self.jumps
            )));
        }
        if self.num_batches < 2 {
            return Err(Error::Config("at least two batches are needed".into()));
        }
        if self.jumps < self.num_batches as u64 {
            return Err(Error::Config("fewer jumps than batches".into()));
        }
        if self.state_cap == Some(0) {
            return Err(Error::Config("state cap must be positive".into()));
        }
        Ok(())
    }
}

/// Time-averaged statistics of one run (or a pool of replicas).
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    /// Time-weighted mean number of flows per link.
    pub mean_flow_count: Vec<f64>,
    pub flow_count_ci: Vec<f64>,
    /// Mean flow throughput `rho_k / E[x_k]`.
    pub mean_throughput: Vec<f64>,
    pub throughput_ci: Vec<f64>,
    /// Completed volume per unit time on each link, counted from departures.
    pub departure_rate: Vec<f64>,
    pub departure_rate_ci: Vec<f64>,
    /// Simulated time after warm-up.
    pub horizon: f64,
    pub jumps: u64,
    /// Fraction of measured time with some link at the state cap.
    pub capped_fraction: f64,
    /// Number of jumps into the all-idle state after warm-up.
    pub empty_visits: u64,
    pub final_state: Vec<u64>,
    pub seed: u64,
}

impl SimEstimate {
    pub fn capped(&self) -> bool {
        self.capped_fraction > 0.0
    }
}

/// Running sums over a stretch of the trajectory.
#[derive(Debug, Clone, Default)]
struct Tally {
    time: f64,
    flow_time: Vec<f64>,
    total_flow_time: f64,
    departures: Vec<u64>,
    capped_time: f64,
    empty_visits: u64,
}

impl Tally {
    fn new(k: usize) -> Self {
        Self {
            flow_time: vec![0.0; k],
            departures: vec![0; k],
            ..Default::default()
        }
    }

    fn mean_flow_count(&self, k: usize) -> f64 {
        self.flow_time[k] / self.time
    }

    fn mean_total(&self) -> f64 {
        self.total_flow_time / self.time
    }

    fn absorb(&mut self, other: &Tally) {
        self.time += other.time;
        self.total_flow_time += other.total_flow_time;
        self.capped_time += other.capped_time;
        self.empty_visits += other.empty_visits;
        for (a, b) in self.flow_time.iter_mut().zip(&other.flow_time) {
            *a += b;
        }
        for (a, b) in self.departures.iter_mut().zip(&other.departures) {
            *a += b;
        }
    }
}

/// The jump process itself. A run is strictly sequential.
pub struct Simulator {
    model: ThroughputModel,
    arrival_rates: Vec<f64>,
    /// `1 / sigma_k`: departures per unit of throughput.
    completion_factor: Vec<f64>,
    cap: Option<u64>,
    holding: HoldingTime,
    state: Vec<u64>,
    total: u64,
    throughput: Vec<f64>,
    rates: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(
        graph: &ConflictGraph,
        schedules: &ScheduleSet,
        traffic: &TrafficProfile,
        params: &AccessParams,
        config: &SimConfig,
    ) -> Result<Self> {
        Self::with_stream(graph, schedules, traffic, params, config, 0)
    }

    /// Simulator drawing from ChaCha stream `stream` of the configured seed.
    pub fn with_stream(
        graph: &ConflictGraph,
        schedules: &ScheduleSet,
        traffic: &TrafficProfile,
        params: &AccessParams,
        config: &SimConfig,
        stream: u64,
    ) -> Result<Self> {
        let k = graph.num_links();
        if traffic.num_links() != k {
            return Err(Error::Input(format!(
                "traffic has {} links, graph has {k}",
                traffic.num_links()
            )));
        }
        let state = match &config.initial_state {
            Some(s) if s.len() != k => {
                return Err(Error::Input(format!(
                    "initial state has {} entries for {k} links",
                    s.len()
                )))
            }
            Some(s) => s.clone(),
            None => vec![0; k],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        Ok(Self {
            model: ThroughputModel::new(graph, schedules, params)?,
            arrival_rates: traffic.arrival_rates().to_vec(),
            completion_factor: traffic.mean_sizes().iter().map(|s| 1.0 / s).collect(),
            cap: config.state_cap,
            holding: config.holding,
            total: state.iter().sum(),
            state,
            throughput: vec![0.0; k],
            rates: vec![0.0; 2 * k],
            rng,
        })
    }

    pub fn state(&self) -> &[u64] {
        &self.state
    }

    /// Advances `jumps` transitions, adding statistics to `tally` if given.
    fn advance(&mut self, jumps: u64, mut tally: Option<&mut Tally>) {
        let k = self.state.len();
        for _ in 0..jumps {
            self.model.throughputs(&self.state, &mut self.throughput);
            let mut at_cap = false;
            let mut total_rate = 0.0;
            for j in 0..k {
                let arrival = match self.cap {
                    Some(c) if self.state[j] >= c => {
                        at_cap = true;
                        0.0
                    }
                    _ => self.arrival_rates[j],
                };
                let departure = if self.state[j] > 0 {
                    self.throughput[j] * self.completion_factor[j]
                } else {
                    0.0
                };
                self.rates[j] = arrival;
                self.rates[k + j] = departure;
                total_rate += arrival + departure;
            }
            let dt = match self.holding {
                HoldingTime::Expected => 1.0 / total_rate,
                HoldingTime::Sampled => {
                    let u: f64 = self.rng.random();
                    -(1.0 - u).ln() / total_rate
                }
            };
            if let Some(t) = tally.as_deref_mut() {
                t.time += dt;
                t.total_flow_time += self.total as f64 * dt;
                for (acc, &x) in t.flow_time.iter_mut().zip(&self.state) {
                    *acc += x as f64 * dt;
                }
                if at_cap {
                    t.capped_time += dt;
                }
            }
            let target = self.rng.random::<f64>() * total_rate;
            let mut acc = 0.0;
            // Fall back to the last positive rate against rounding at the top end.
            let mut event = self.rates.iter().rposition(|&r| r > 0.0).unwrap_or(0);
            for (e, &r) in self.rates.iter().enumerate() {
                acc += r;
                if target < acc {
                    event = e;
                    break;
                }
            }
            if event < k {
                self.state[event] += 1;
                self.total += 1;
            } else {
                let link = event - k;
                self.state[link] -= 1;
                self.total -= 1;
                if let Some(t) = tally.as_deref_mut() {
                    t.departures[link] += 1;
                    if self.total == 0 {
                        t.empty_visits += 1;
                    }
                }
            }
        }
    }
}

fn check_positive_rates(traffic: &TrafficProfile) -> Result<()> {
    // TrafficProfile already guarantees lambda_k > 0, so every state has a
    // positive total rate.
    debug_assert!(traffic.arrival_rates().iter().all(|&l| l > 0.0));
    Ok(())
}

/// Simulates the flow-level process and returns time-averaged statistics
/// with batch-means confidence intervals.
pub fn simulate(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
    params: &AccessParams,
    config: &SimConfig,
) -> Result<SimEstimate> {
    simulate_stream(graph, schedules, traffic, params, config, 0)
}

fn simulate_stream(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
    params: &AccessParams,
    config: &SimConfig,
    stream: u64,
) -> Result<SimEstimate> {
    config.validate()?;
    check_positive_rates(traffic)?;
    let k = graph.num_links();
    let mut sim = Simulator::with_stream(graph, schedules, traffic, params, config, stream)?;
    sim.advance(config.warmup_jumps, None);

    let b = config.num_batches as u64;
    let mut batches = Vec::with_capacity(config.num_batches);
    for i in 0..b {
        // Spread the remainder over the first batches.
        let len = config.jumps / b + u64::from(i < config.jumps % b);
        let mut t = Tally::new(k);
        sim.advance(len, Some(&mut t));
        batches.push(t);
    }
    let mut all = Tally::new(k);
    for t in &batches {
        all.absorb(t);
    }

    let rho = traffic.intensities();
    let mut est = SimEstimate {
        mean_flow_count: Vec::with_capacity(k),
        flow_count_ci: Vec::with_capacity(k),
        mean_throughput: Vec::with_capacity(k),
        throughput_ci: Vec::with_capacity(k),
        departure_rate: Vec::with_capacity(k),
        departure_rate_ci: Vec::with_capacity(k),
        horizon: all.time,
        jumps: config.jumps,
        capped_fraction: all.capped_time / all.time,
        empty_visits: all.empty_visits,
        final_state: sim.state.clone(),
        seed: config.seed,
    };
    for j in 0..k {
        let mean = all.mean_flow_count(j);
        let per_batch: Vec<f64> = batches.iter().map(|t| t.mean_flow_count(j)).collect();
        let (_, hw) = mean_half_width(&per_batch, CONFIDENCE);
        est.mean_flow_count.push(mean);
        est.flow_count_ci.push(hw);
        if mean > 0.0 {
            est.mean_throughput.push(rho[j] / mean);
            // Delta method for rho / E[x].
            est.throughput_ci.push(rho[j] * hw / (mean * mean));
        } else {
            est.mean_throughput.push(f64::NAN);
            est.throughput_ci.push(f64::INFINITY);
        }
        let sigma = traffic.mean_sizes()[j];
        let dep: Vec<f64> = batches
            .iter()
            .map(|t| t.departures[j] as f64 * sigma / t.time)
            .collect();
        let (_, dep_hw) = mean_half_width(&dep, CONFIDENCE);
        est.departure_rate.push(all.departures[j] as f64 * sigma / all.time);
        est.departure_rate_ci.push(dep_hw);
    }
    Ok(est)
}

/// Runs `replicas` independent copies of `config` on distinct ChaCha streams,
/// concurrently, and pools them with [`merge_estimates`].
pub fn simulate_replicas(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
    params: &AccessParams,
    config: &SimConfig,
    replicas: usize,
) -> Result<SimEstimate> {
    if replicas == 0 {
        return Err(Error::Config("at least one replica is needed".into()));
    }
    let runs: Vec<Result<SimEstimate>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..replicas as u64)
            .map(|r| {
                scope.spawn(move || simulate_stream(graph, schedules, traffic, params, config, r))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replica thread panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge_estimates(&runs, &traffic.intensities()))
}

/// Pools replica estimates: means are weighted by simulated time, and with
/// two or more replicas the intervals come from the between-replica spread.
pub fn merge_estimates(runs: &[SimEstimate], intensities: &[f64]) -> SimEstimate {
    assert!(!runs.is_empty(), "nothing to merge");
    if runs.len() == 1 {
        return runs[0].clone();
    }
    let k = runs[0].mean_flow_count.len();
    let horizon: f64 = runs.iter().map(|r| r.horizon).sum();
    let pooled = |f: &dyn Fn(&SimEstimate) -> f64| -> f64 {
        runs.iter().map(|r| f(r) * r.horizon).sum::<f64>() / horizon
    };
    let mut out = SimEstimate {
        mean_flow_count: vec![],
        flow_count_ci: vec![],
        mean_throughput: vec![],
        throughput_ci: vec![],
        departure_rate: vec![],
        departure_rate_ci: vec![],
        horizon,
        jumps: runs.iter().map(|r| r.jumps).sum(),
        capped_fraction: pooled(&|r| r.capped_fraction),
        empty_visits: runs.iter().map(|r| r.empty_visits).sum(),
        final_state: runs[runs.len() - 1].final_state.clone(),
        seed: runs[0].seed,
    };
    for j in 0..k {
        let mean = pooled(&|r| r.mean_flow_count[j]);
        let (_, hw) = mean_half_width(
            &runs.iter().map(|r| r.mean_flow_count[j]).collect::<Vec<_>>(),
            CONFIDENCE,
        );
        out.mean_flow_count.push(mean);
        out.flow_count_ci.push(hw);
        out.mean_throughput.push(intensities[j] / mean);
        out.throughput_ci.push(intensities[j] * hw / (mean * mean));
        let (_, dep_hw) = mean_half_width(
            &runs.iter().map(|r| r.departure_rate[j]).collect::<Vec<_>>(),
            CONFIDENCE,
        );
        out.departure_rate.push(pooled(&|r| r.departure_rate[j]));
        out.departure_rate_ci.push(dep_hw);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Inconclusive,
}

/// Windowed growth test standing in for positive recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRule {
    /// Length of the first window; each later window is twice as long.
    pub first_window_jumps: u64,
    pub doublings: u32,
    /// Minimum t-statistic of the growth slope to call a run unstable.
    pub t_threshold: f64,
}

impl Default for StabilityRule {
    fn default() -> Self {
        Self {
            first_window_jumps: 1_000_000,
            doublings: 6,
            t_threshold: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub stability: Stability,
    /// Slope of the window means of `|x|` against window mid-time.
    pub slope: f64,
    pub t_statistic: f64,
    pub window_means: Vec<f64>,
    /// Returns to the all-idle state in each window.
    pub regenerations: Vec<u64>,
    pub final_state: Vec<u64>,
}

impl StabilityVerdict {
    pub fn final_window_regenerations(&self) -> u64 {
        *self.regenerations.last().unwrap_or(&0)
    }
}

/// Classifies a configuration as stable or unstable from the growth of the
/// total flow count over doubling windows.
///
/// After `config.warmup_jumps`, windows of `w, 2w, ..., 2^d w` jumps are
/// simulated and a line is fitted to the time-averaged `|x|` of each window
/// against its mid-time. The run is unstable if the slope is positive with
/// t-statistic above the threshold and the last window never visits the idle
/// state; stable if the slope is not significantly positive and the last
/// window regenerates at least once; inconclusive otherwise.
pub fn classify_stability(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
    params: &AccessParams,
    config: &SimConfig,
    rule: &StabilityRule,
) -> Result<StabilityVerdict> {
    if rule.first_window_jumps == 0 || rule.doublings < 1 {
        return Err(Error::Config("stability rule needs at least two non-empty windows".into()));
    }
    check_positive_rates(traffic)?;
    let k = graph.num_links();
    let mut sim = Simulator::new(graph, schedules, traffic, params, config)?;
    sim.advance(config.warmup_jumps, None);

    let mut clock = 0.0;
    let mut mid_times = Vec::new();
    let mut window_means = Vec::new();
    let mut regenerations = Vec::new();
    for w in 0..=rule.doublings {
        let mut t = Tally::new(k);
        sim.advance(rule.first_window_jumps << w, Some(&mut t));
        mid_times.push(clock + t.time / 2.0);
        clock += t.time;
        window_means.push(t.mean_total());
        regenerations.push(t.empty_visits);
    }
    let fit = fit_slope(&mid_times, &window_means);
    let t_stat = fit.t_statistic();
    let last_regen = *regenerations.last().unwrap();
    let growing = fit.slope > 0.0 && t_stat > rule.t_threshold;
    let stability = if growing && last_regen == 0 {
        Stability::Unstable
    } else if !growing && last_regen >= 1 {
        Stability::Stable
    } else {
        Stability::Inconclusive
    };
    Ok(StabilityVerdict {
        stability,
        slope: fit.slope,
        t_statistic: t_stat,
        window_means,
        regenerations,
        final_state: sim.state.clone(),
    })
}

fn flow_aware_alpha<'a>(params: &'a AccessParams, k: usize) -> Result<&'a [f64]> {
    match (&params.discipline, &params.alpha) {
        (Discipline::FlowAware, Alpha::Finite(a)) if a.len() == k => Ok(a),
        (Discipline::FlowAware, Alpha::Finite(a)) => Err(Error::Input(format!(
            "{} alpha values for {k} links",
            a.len()
        ))),
        _ => Err(Error::Input(
            "the Lyapunov function is defined for flow-aware CSMA with finite alpha".into(),
        )),
    }
}

/// `F(x) = sum_{k: x_k > 0} (sigma_k / phi_k) x_k (ln(alpha_k x_k) - 1)`.
pub fn lyapunov_value(
    state: &NetworkState,
    traffic: &TrafficProfile,
    graph: &ConflictGraph,
    params: &AccessParams,
) -> Result<f64> {
    let k = graph.num_links();
    if state.len() != k || traffic.num_links() != k {
        return Err(Error::Input("state, traffic and graph sizes differ".into()));
    }
    let alpha = flow_aware_alpha(params, k)?;
    Ok(state
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0)
        .map(|(j, &x)| {
            let x = x as f64;
            traffic.mean_sizes()[j] / graph.rates()[j] * x * ((alpha[j] * x).ln() - 1.0)
        })
        .sum())
}

/// Generator applied to `F` at `x`:
/// `sum_k lambda_k (F(x + e_k) - F(x)) + sum_{k: x_k > 0} mu_k(x) (F(x - e_k) - F(x))`
/// with `mu_k(x) = phi_k(x) / sigma_k`.
pub fn lyapunov_drift(
    state: &NetworkState,
    traffic: &TrafficProfile,
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    params: &AccessParams,
) -> Result<f64> {
    let f = lyapunov_value(state, traffic, graph, params)?;
    let phi = link_throughputs(schedules, state, params, graph)?;
    let mut drift = 0.0;
    for j in 0..graph.num_links() {
        let up = lyapunov_value(&state.incremented(j), traffic, graph, params)?;
        drift += traffic.arrival_rates()[j] * (up - f);
        if let Some(down) = state.decremented(j) {
            let down = lyapunov_value(&down, traffic, graph, params)?;
            drift += phi[j] / traffic.mean_sizes()[j] * (down - f);
        }
    }
    Ok(drift)
}

/// Every state with exactly `total` flows spread over `num_links` links.
pub fn shell_states(num_links: usize, total: u64) -> Vec<NetworkState> {
    fn fill(prefix: &mut Vec<u64>, left: u64, remaining_links: usize, out: &mut Vec<NetworkState>) {
        if remaining_links == 1 {
            prefix.push(left);
            out.push(NetworkState(prefix.clone()));
            prefix.pop();
            return;
        }
        for v in 0..=left {
            prefix.push(v);
            fill(prefix, left - v, remaining_links - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if num_links > 0 {
        fill(&mut Vec::with_capacity(num_links), total, num_links, &mut out);
    }
    out
}

/// Largest drift over a shell and the state attaining it.
pub fn max_drift_on_shell(
    total: u64,
    traffic: &TrafficProfile,
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    params: &AccessParams,
) -> Result<(f64, NetworkState)> {
    let mut best: Option<(f64, NetworkState)> = None;
    for x in shell_states(graph.num_links(), total) {
        let d = lyapunov_drift(&x, traffic, graph, schedules, params)?;
        if best.as_ref().is_none_or(|(b, _)| d > *b) {
            best = Some((d, x));
        }
    }
    best.ok_or_else(|| Error::Input("empty shell".into()))
}
