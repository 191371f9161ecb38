//! Numerical ground truth for the flow-level process.
//!
//! * [`solve_stationary`] solves global balance on the box `{0..B}^K` with
//!   arrivals suppressed at the cap.
//! * [`single_link_throughput`] sums the product-form series of a single
//!   link with state-dependent service `alpha n / (1 + alpha n)`.
//! * [`saturation_constants`] solves the two-queue subsystems that appear
//!   on the 3-link line under standard CSMA in the `alpha -> infinity`
//!   limit when one link is saturated.
//!
//! Box chains are solved by symmetric Gauss-Seidel sweeps on the sparse
//! generator until the L1 norm of the balance residual drops below the
//! requested tolerance.

use std::fmt::Write as _;

use crate::capacity::TrafficProfile;
use crate::csma::{AccessParams, ThroughputModel};
use crate::error::{Error, Result};
use crate::graph::{ConflictGraph, ScheduleSet};

/// Largest box handled by [`solve_stationary`].
pub const MAX_BOX_STATES: usize = 1_000_000;
/// Default L1 residual target of the balance equations.
pub const BALANCE_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 500_000;
const RESIDUAL_EVERY: usize = 8;
/// Successive over-relaxation factor of the sweeps.
const RELAXATION: f64 = 1.7;

/// Stationary distribution of a chain truncated to `{0..cap}^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDistribution {
    pub cap: u64,
    pub num_links: usize,
    /// Row-major probabilities, link 0 varying slowest.
    pub probabilities: Vec<f64>,
    /// L1 norm of the balance residual at the returned distribution.
    pub residual: f64,
    pub sweeps: usize,
    /// Probability of states with some link at the cap.
    pub boundary_mass: f64,
}

impl TruncatedDistribution {
    fn index(&self, x: &[u64]) -> Option<usize> {
        if x.len() != self.num_links || x.iter().any(|&v| v > self.cap) {
            return None;
        }
        Some(x.iter().fold(0usize, |s, &v| s * (self.cap as usize + 1) + v as usize))
    }

    /// Probability of state `x`; zero outside the box.
    pub fn probability(&self, x: &[u64]) -> f64 {
        self.index(x).map_or(0.0, |i| self.probabilities[i])
    }

    /// `E[x_k]` for every link.
    pub fn mean_flow_counts(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.num_links];
        for_each_state(self.num_links, self.cap, |s, x| {
            let p = self.probabilities[s];
            for (m, &v) in means.iter_mut().zip(x) {
                *m += p * v as f64;
            }
        });
        means
    }

    /// Marginal distribution of link `k`.
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cap as usize + 1];
        for_each_state(self.num_links, self.cap, |s, x| out[x[k] as usize] += self.probabilities[s]);
        out
    }
}

/// Calls `f(index, state)` for every state of the box in index order.
fn for_each_state(k: usize, cap: u64, mut f: impl FnMut(usize, &[u64])) {
    let mut x = vec![0u64; k];
    let total = (cap as usize + 1).pow(k as u32);
    for s in 0..total {
        f(s, &x);
        for j in (0..k).rev() {
            if x[j] < cap {
                x[j] += 1;
                break;
            }
            x[j] = 0;
        }
    }
}

/// Solution of a box chain before it is dressed up for callers.
struct BoxSolution {
    pi: Vec<f64>,
    residual: f64,
    sweeps: usize,
}

/// Birth-death-like chain on a box: link `j` gains a flow at rate
/// `arrivals[j]` (unless at the cap) and loses one at `departures(x)[j]`.
struct BoxChain {
    k: usize,
    cap: u64,
    strides: Vec<usize>,
    arrivals: Vec<f64>,
    /// `departure[s * k + j]`, zero when `x_j = 0`.
    departure: Vec<f64>,
    out_rate: Vec<f64>,
    /// Bit `j`: `x_j > 0`. Bit `k + j`: `x_j < cap`.
    flags: Vec<u64>,
}

impl BoxChain {
    fn new(
        k: usize,
        cap: u64,
        arrivals: &[f64],
        mut departures: impl FnMut(&[u64], &mut [f64]),
    ) -> Result<Self> {
        let side = cap as usize + 1;
        let states = side
            .checked_pow(k as u32)
            .filter(|&n| n <= MAX_BOX_STATES)
            .ok_or_else(|| {
                Error::Input(format!(
                    "box with cap {cap} on {k} links exceeds {MAX_BOX_STATES} states"
                ))
            })?;
        let mut strides = vec![1usize; k];
        for j in (0..k.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * side;
        }
        let mut departure = vec![0.0; states * k];
        let mut out_rate = vec![0.0; states];
        let mut flags = vec![0u64; states];
        let mut buf = vec![0.0; k];
        for_each_state(k, cap, |s, x| {
            departures(x, &mut buf);
            let mut out = 0.0;
            let mut f = 0u64;
            for j in 0..k {
                if x[j] > 0 {
                    f |= 1 << j;
                    departure[s * k + j] = buf[j];
                    out += buf[j];
                }
                if x[j] < cap {
                    f |= 1 << (k + j);
                    out += arrivals[j];
                }
            }
            out_rate[s] = out;
            flags[s] = f;
        });
        Ok(Self {
            k,
            cap,
            strides,
            arrivals: arrivals.to_vec(),
            departure,
            out_rate,
            flags,
        })
    }

    fn inflow(&self, pi: &[f64], s: usize) -> f64 {
        let f = self.flags[s];
        let mut inflow = 0.0;
        for j in 0..self.k {
            if f & (1 << j) != 0 {
                inflow += pi[s - self.strides[j]] * self.arrivals[j];
            }
            if f & (1 << (self.k + j)) != 0 {
                let up = s + self.strides[j];
                inflow += pi[up] * self.departure[up * self.k + j];
            }
        }
        inflow
    }

    fn residual(&self, pi: &[f64]) -> f64 {
        (0..pi.len())
            .map(|s| (self.inflow(pi, s) - pi[s] * self.out_rate[s]).abs())
            .sum()
    }

    /// Solves balance, optionally starting from the solution `warm` of the
    /// same chain on a smaller box.
    fn solve(&self, tol: f64, warm: Option<(&[f64], u64)>) -> Result<BoxSolution> {
        let n = self.out_rate.len();
        if n == 1 {
            return Ok(BoxSolution {
                pi: vec![1.0],
                residual: 0.0,
                sweeps: 0,
            });
        }
        let mut pi = vec![0.0; n];
        match warm {
            Some((old, old_cap)) => {
                // Copy the old box and extend it geometrically beyond its edge.
                let old_side = old_cap as usize + 1;
                for_each_state(self.k, self.cap, |s, x| {
                    let mut idx = 0usize;
                    let mut excess = 0u64;
                    for &v in x {
                        let c = v.min(old_cap);
                        excess += v - c;
                        idx = idx * old_side + c as usize;
                    }
                    pi[s] = old[idx] * 0.5f64.powi(excess.min(1000) as i32);
                });
            }
            None => {
                for_each_state(self.k, self.cap, |s, x| {
                    pi[s] = 0.5f64.powi(x.iter().sum::<u64>().min(1000) as i32);
                });
            }
        }
        normalize(&mut pi);
        let mut residual = f64::INFINITY;
        for sweep in 1..=MAX_SWEEPS {
            if sweep % 2 == 1 {
                for s in 0..n {
                    self.relax(&mut pi, s);
                }
            } else {
                for s in (0..n).rev() {
                    self.relax(&mut pi, s);
                }
            }
            normalize(&mut pi);
            if sweep % RESIDUAL_EVERY == 0 {
                let previous = residual;
                residual = self.residual(&pi);
                // Aim well below the tolerance; accept anything under it once
                // round-off stops further progress.
                if residual < tol * 1e-2 || (residual < tol && residual > 0.5 * previous) {
                    return Ok(BoxSolution { pi, residual, sweeps: sweep });
                }
            }
        }
        Err(Error::Numerical(format!(
            "Gauss-Seidel stopped after {MAX_SWEEPS} sweeps with residual {residual:.3e} (target {tol:.1e})"
        )))
    }

    #[inline]
    fn relax(&self, pi: &mut [f64], s: usize) {
        let out = self.out_rate[s];
        if out > 0.0 {
            let gs = self.inflow(pi, s) / out;
            pi[s] += RELAXATION * (gs - pi[s]);
        }
    }
}

fn normalize(pi: &mut [f64]) {
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
}

/// Stationary distribution of the flow-level process truncated to
/// `{0..cap}^K`, with arrivals suppressed at the cap.
pub fn solve_stationary(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
    params: &AccessParams,
    cap: u64,
) -> Result<TruncatedDistribution> {
    solve_stationary_with_tol(graph, schedules, traffic, params, cap, BALANCE_TOL)
}

pub fn solve_stationary_with_tol(
    graph: &ConflictGraph,
    schedules: &ScheduleSet,
    traffic: &TrafficProfile,
    params: &AccessParams,
    cap: u64,
    tol: f64,
) -> Result<TruncatedDistribution> {
    let k = graph.num_links();
    if traffic.num_links() != k {
        return Err(Error::Input("traffic and graph sizes differ".into()));
    }
    if cap == 0 {
        return Err(Error::Input("cap must be positive".into()));
    }
    let mut model = ThroughputModel::new(graph, schedules, params)?;
    let sizes = traffic.mean_sizes().to_vec();
    let mut phi = vec![0.0; k];
    let chain = BoxChain::new(k, cap, traffic.arrival_rates(), |x, out| {
        model.throughputs(x, &mut phi);
        for j in 0..k {
            out[j] = phi[j] / sizes[j];
        }
    })?;
    let sol = chain.solve(tol, None)?;
    let mut dist = TruncatedDistribution {
        cap,
        num_links: k,
        probabilities: sol.pi,
        residual: sol.residual,
        sweeps: sol.sweeps,
        boundary_mass: 0.0,
    };
    let mut boundary = 0.0;
    for_each_state(k, cap, |s, x| {
        if x.contains(&cap) {
            boundary += dist.probabilities[s];
        }
    });
    dist.boundary_mass = boundary;
    Ok(dist)
}

/// Mean flow throughput `rho / E[x]` of an isolated unit-rate link.
///
/// `alpha = None` is the `alpha -> infinity` limit (an M/M/1 queue).
pub fn single_link_throughput(rho: f64, alpha: Option<f64>) -> Result<f64> {
    Ok(rho / single_link_mean_flows(rho, alpha)?)
}

/// `E[x]` of the single-link process, summed until the tail is below 1e-12
/// relative to the partial sums.
pub fn single_link_mean_flows(rho: f64, alpha: Option<f64>) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "single link is unstable or idle at rho = {rho}; need 0 < rho < 1"
        )));
    }
    let Some(alpha) = alpha else {
        return Ok(rho / (1.0 - rho));
    };
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    // pi(n) / pi(0) = prod_{m <= n} rho (1 + alpha m) / (alpha m)
    let mut term = 1.0;
    let mut mass = 1.0;
    let mut first_moment = 0.0;
    let mut n = 0u64;
    loop {
        n += 1;
        let ratio = rho * (1.0 + alpha * n as f64) / (alpha * n as f64);
        term *= ratio;
        mass += term;
        first_moment += n as f64 * term;
        // Ratios decrease towards rho, so once below one they bound the tail.
        let next = rho * (1.0 + alpha * (n + 1) as f64) / (alpha * (n + 1) as f64);
        if next < 1.0 {
            let r = next;
            let tail_mass = term * r / (1.0 - r);
            let tail_moment = term * (n as f64 * r / (1.0 - r) + r / (1.0 - r).powi(2));
            if tail_mass < 1e-12 * mass && tail_moment < 1e-12 * first_moment.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        if n > 100_000_000 {
            return Err(Error::Numerical("single-link series did not converge".into()));
        }
    }
    Ok(first_moment / mass)
}

/// Arrival and maximum service rates of the three queues of the 3-link line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineRates {
    pub lambda: [f64; 3],
    pub mu: [f64; 3],
}

impl LineRates {
    pub fn new(lambda: [f64; 3], mu: [f64; 3]) -> Result<Self> {
        if lambda.iter().any(|&l| !(l.is_finite() && l >= 0.0))
            || mu.iter().any(|&m| !(m.is_finite() && m > 0.0))
        {
            return Err(Error::Config(format!(
                "invalid queue rates lambda = {lambda:?}, mu = {mu:?}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    /// Unit service rates with `lambda = rho`.
    pub fn from_loads(rho: [f64; 3]) -> Result<Self> {
        Self::new(rho, [1.0; 3])
    }

    /// `mu_k = phi_k / sigma_k` from the traffic and the link rates.
    pub fn from_traffic(traffic: &TrafficProfile, graph: &ConflictGraph) -> Result<Self> {
        if traffic.num_links() != 3 || graph.num_links() != 3 {
            return Err(Error::Input("the saturated subsystems need exactly 3 links".into()));
        }
        let mut lambda = [0.0; 3];
        let mut mu = [0.0; 3];
        for k in 0..3 {
            lambda[k] = traffic.arrival_rates()[k];
            mu[k] = traffic.service_rate(k, graph.rates()[k]);
        }
        Self::new(lambda, mu)
    }

    /// Normalized load `lambda_k / mu_k` of the 0-based queue `k`.
    pub fn rho(&self, k: usize) -> f64 {
        self.lambda[k] / self.mu[k]
    }

    /// Exchanges links 1 and 3.
    pub fn mirrored(&self) -> Self {
        Self {
            lambda: [self.lambda[2], self.lambda[1], self.lambda[0]],
            mu: [self.mu[2], self.mu[1], self.mu[0]],
        }
    }
}

/// Idle probabilities of the outer queues when the middle link is saturated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledIdle {
    /// Both outer queues empty.
    pub both_idle: f64,
    /// Exactly one outer queue empty.
    pub one_idle: f64,
    pub residual: f64,
    pub boundary_mass: f64,
}

type Warm<'a> = Option<(&'a [f64], u64)>;

/// Outer queues of the line while the middle link always has flows: each is
/// served at full rate while the other is busy and at half rate otherwise.
pub fn coupled_outer_queues(rates: &LineRates, cap: u64) -> Result<CoupledIdle> {
    Ok(coupled_solve(rates, cap, None)?.0)
}

fn coupled_solve(rates: &LineRates, cap: u64, warm: Warm) -> Result<(CoupledIdle, Vec<f64>)> {
    let (r1, r3) = (rates.rho(0), rates.rho(2));
    if r1 >= (1.0 + r3) / 2.0 {
        return Err(Error::Domain(format!(
            "outer queues unstable: need rho1 < (1 + rho3) / 2, got rho1 = {r1}, rho3 = {r3}"
        )));
    }
    if r3 >= (1.0 + r1) / 2.0 {
        return Err(Error::Domain(format!(
            "outer queues unstable: need rho3 < (1 + rho1) / 2, got rho1 = {r1}, rho3 = {r3}"
        )));
    }
    let (mu1, mu3) = (rates.mu[0], rates.mu[2]);
    let chain = BoxChain::new(2, cap, &[rates.lambda[0], rates.lambda[2]], |x, out| {
        let both = x[0] > 0 && x[1] > 0;
        out[0] = if both { mu1 } else { mu1 / 2.0 };
        out[1] = if both { mu3 } else { mu3 / 2.0 };
    })?;
    let sol = chain.solve(BALANCE_TOL, warm)?;
    let side = cap as usize + 1;
    let at = |a: usize, b: usize| sol.pi[a * side + b];
    let both_idle = at(0, 0);
    let mut one_idle = 0.0;
    let mut boundary = 0.0;
    for a in 0..side {
        for b in 0..side {
            if (a == 0) != (b == 0) {
                one_idle += at(a, b);
            }
            if a == side - 1 || b == side - 1 {
                boundary += at(a, b);
            }
        }
    }
    let idle = CoupledIdle {
        both_idle,
        one_idle,
        residual: sol.residual,
        boundary_mass: boundary,
    };
    Ok((idle, sol.pi))
}

/// Conditional idle probability of the middle queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiddleIdle {
    /// `P(x2 = 0 | x1 = 0)`.
    pub value: f64,
    pub residual: f64,
    pub boundary_mass: f64,
}

/// `P(x2 = 0 | x1 = 0)` when link 3 is saturated: queue 1 is an M/M/1 queue
/// and queue 2 is served at half rate only while queue 1 is empty. Use
/// [`LineRates::mirrored`] for the symmetric constant.
pub fn middle_idle_given_outer_idle(rates: &LineRates, cap: u64) -> Result<MiddleIdle> {
    Ok(middle_solve(rates, cap, None)?.0)
}

fn middle_solve(rates: &LineRates, cap: u64, warm: Warm) -> Result<(MiddleIdle, Vec<f64>)> {
    let (r1, r2) = (rates.rho(0), rates.rho(1));
    if r1 >= 1.0 {
        return Err(Error::Domain(format!("need rho1 < 1, got rho1 = {r1}")));
    }
    if r2 >= (1.0 - r1) / 2.0 {
        return Err(Error::Domain(format!(
            "middle queue unstable: need rho2 < (1 - rho1) / 2, got rho1 = {r1}, rho2 = {r2}"
        )));
    }
    let (mu1, mu2) = (rates.mu[0], rates.mu[1]);
    let chain = BoxChain::new(2, cap, &[rates.lambda[0], rates.lambda[1]], |x, out| {
        out[0] = mu1;
        out[1] = if x[0] == 0 { mu2 / 2.0 } else { 0.0 };
    })?;
    let sol = chain.solve(BALANCE_TOL, warm)?;
    let side = cap as usize + 1;
    let outer_idle: f64 = sol.pi[..side].iter().sum();
    let mut boundary = 0.0;
    for a in 0..side {
        for b in 0..side {
            if a == side - 1 || b == side - 1 {
                boundary += sol.pi[a * side + b];
            }
        }
    }
    let m = MiddleIdle {
        value: sol.pi[0] / outer_idle,
        residual: sol.residual,
        boundary_mass: boundary,
    };
    Ok((m, sol.pi))
}

/// One constant evaluated over a ladder of caps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    /// Value at the largest cap.
    pub value: f64,
    /// `(cap, value)` for each cap of the ladder.
    pub ladder: Vec<(u64, f64)>,
    /// Change between the two largest caps.
    pub truncation_error: f64,
    /// Largest balance residual over the ladder.
    pub residual: f64,
}

impl ConstantEstimate {
    fn from_ladder(ladder: Vec<(u64, f64)>, residual: f64) -> Self {
        let value = ladder.last().expect("non-empty ladder").1;
        let truncation_error = if ladder.len() >= 2 {
            (value - ladder[ladder.len() - 2].1).abs()
        } else {
            f64::INFINITY
        };
        Self {
            value,
            ladder,
            truncation_error,
            residual,
        }
    }

    /// Value known in closed form.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            ladder: Vec::new(),
            truncation_error: 0.0,
            residual: 0.0,
        }
    }
}

/// Idle probabilities of the saturated subsystems of the 3-link line.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationConstants {
    pub rates: LineRates,
    /// Links 1 and 3 both idle while link 2 is saturated.
    pub pi0: Option<ConstantEstimate>,
    /// Exactly one of links 1 and 3 idle while link 2 is saturated.
    pub pi13: Option<ConstantEstimate>,
    /// Link 2 idle given link 1 idle while link 3 is saturated.
    pub pi21: Option<ConstantEstimate>,
    /// Link 2 idle given link 3 idle while link 1 is saturated.
    pub pi23: Option<ConstantEstimate>,
    pub caps: Vec<u64>,
    /// Why a constant is missing.
    pub notes: Vec<String>,
}

impl SaturationConstants {
    /// Computes every constant whose subsystem is stable; the others are
    /// left empty with a note.
    pub fn available(rates: &LineRates, caps: &[u64]) -> Result<Self> {
        if caps.is_empty() || caps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("caps must be a non-empty increasing ladder".into()));
        }
        let mut out = Self {
            rates: *rates,
            pi0: None,
            pi13: None,
            pi21: None,
            pi23: None,
            caps: caps.to_vec(),
            notes: Vec::new(),
        };
        match ladder(caps, |c, warm| coupled_solve(rates, c, warm)) {
            Ok(runs) => {
                let res = runs.iter().map(|(_, r)| r.residual).fold(0.0, f64::max);
                out.pi0 = Some(ConstantEstimate::from_ladder(
                    runs.iter().map(|(c, r)| (*c, r.both_idle)).collect(),
                    res,
                ));
                out.pi13 = Some(ConstantEstimate::from_ladder(
                    runs.iter().map(|(c, r)| (*c, r.one_idle)).collect(),
                    res,
                ));
            }
            Err(Error::Domain(msg)) => out.notes.push(format!("pi0, pi13: {msg}")),
            Err(e) => return Err(e),
        }
        for (mirror, name) in [(false, "pi21"), (true, "pi23")] {
            let r = if mirror { rates.mirrored() } else { *rates };
            match ladder(caps, |c, warm| middle_solve(&r, c, warm)) {
                Ok(runs) => {
                    let res = runs.iter().map(|(_, m)| m.residual).fold(0.0, f64::max);
                    let est = ConstantEstimate::from_ladder(
                        runs.iter().map(|(c, m)| (*c, m.value)).collect(),
                        res,
                    );
                    if mirror {
                        out.pi23 = Some(est);
                    } else {
                        out.pi21 = Some(est);
                    }
                }
                Err(Error::Domain(msg)) => out.notes.push(format!("{name}: {msg}")),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// The largest change between the two largest caps over all constants.
    pub fn max_truncation_error(&self) -> f64 {
        [&self.pi0, &self.pi13, &self.pi21, &self.pi23]
            .into_iter()
            .flatten()
            .map(|c| c.truncation_error)
            .fold(0.0, f64::max)
    }

    /// Serializes to the line-oriented fixture format.
    pub fn to_fixture(&self) -> String {
        let mut s = String::from("saturation-constants v1\n");
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "lambda {}", join(&self.rates.lambda));
        let _ = writeln!(s, "mu {}", join(&self.rates.mu));
        let _ = writeln!(
            s,
            "caps {}",
            self.caps.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
        );
        for (name, c) in self.named() {
            match c {
                Some(c) if c.ladder.is_empty() => {
                    let _ = writeln!(s, "{name} exact {:.17e}", c.value);
                }
                Some(c) => {
                    let values: Vec<f64> = c.ladder.iter().map(|(_, v)| *v).collect();
                    let _ = writeln!(s, "{name} ladder {} residual {:.17e}", join(&values), c.residual);
                }
                None => {
                    let _ = writeln!(s, "{name} unavailable");
                }
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note {n}");
        }
        s
    }

    /// Parses the format written by [`to_fixture`](Self::to_fixture).
    pub fn from_fixture(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::Input(format!("malformed fixture line `{line}`"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        if lines.next().map(str::trim) != Some("saturation-constants v1") {
            return Err(Error::Input("missing `saturation-constants v1` header".into()));
        }
        let mut lambda = None;
        let mut mu = None;
        let mut caps: Vec<u64> = Vec::new();
        let mut consts: [Option<ConstantEstimate>; 4] = Default::default();
        let mut notes = Vec::new();
        let floats = |it: &mut dyn Iterator<Item = &str>, n: usize, line: &str| -> Result<Vec<f64>> {
            let v: Vec<f64> = it
                .take(n)
                .map(|t| t.parse::<f64>().map_err(|_| bad(line)))
                .collect::<Result<_>>()?;
            if v.len() == n {
                Ok(v)
            } else {
                Err(bad(line))
            }
        };
        for line in lines {
            let mut tok = line.split_whitespace();
            let key = tok.next().ok_or_else(|| bad(line))?;
            match key {
                "lambda" | "mu" => {
                    let v = floats(&mut tok, 3, line)?;
                    let arr = [v[0], v[1], v[2]];
                    if key == "lambda" {
                        lambda = Some(arr);
                    } else {
                        mu = Some(arr);
                    }
                }
                "caps" => {
                    caps = tok
                        .map(|t| t.parse::<u64>().map_err(|_| bad(line)))
                        .collect::<Result<_>>()?;
                }
                "pi0" | "pi13" | "pi21" | "pi23" => {
                    let slot = ["pi0", "pi13", "pi21", "pi23"].iter().position(|n| *n == key).unwrap();
                    consts[slot] = match tok.next() {
                        Some("unavailable") => None,
                        Some("exact") => Some(ConstantEstimate::exact(floats(&mut tok, 1, line)?[0])),
                        Some("ladder") => {
                            let values = floats(&mut tok, caps.len(), line)?;
                            if tok.next() != Some("residual") {
                                return Err(bad(line));
                            }
                            let residual = floats(&mut tok, 1, line)?[0];
                            Some(ConstantEstimate::from_ladder(
                                caps.iter().copied().zip(values).collect(),
                                residual,
                            ))
                        }
                        _ => return Err(bad(line)),
                    };
                }
                "note" => notes.push(line["note".len()..].trim().to_string()),
                _ => return Err(bad(line)),
            }
        }
        let rates = LineRates::new(
            lambda.ok_or_else(|| Error::Input("fixture lacks `lambda`".into()))?,
            mu.ok_or_else(|| Error::Input("fixture lacks `mu`".into()))?,
        )?;
        let [pi0, pi13, pi21, pi23] = consts;
        Ok(Self {
            rates,
            pi0,
            pi13,
            pi21,
            pi23,
            caps,
            notes,
        })
    }

    fn named(&self) -> [(&'static str, &Option<ConstantEstimate>); 4] {
        [
            ("pi0", &self.pi0),
            ("pi13", &self.pi13),
            ("pi21", &self.pi21),
            ("pi23", &self.pi23),
        ]
    }
}

/// Solves at each cap of the ladder, warm-starting from the previous rung.
fn ladder<T>(
    caps: &[u64],
    mut solve: impl FnMut(u64, Warm) -> Result<(T, Vec<f64>)>,
) -> Result<Vec<(u64, T)>> {
    let mut out = Vec::with_capacity(caps.len());
    let mut prev: Option<(Vec<f64>, u64)> = None;
    for &c in caps {
        let (value, pi) = solve(c, prev.as_ref().map(|(p, pc)| (p.as_slice(), *pc)))?;
        out.push((c, value));
        prev = Some((pi, c));
    }
    Ok(out)
}

/// All four constants, evaluated at `cap` and `2 * cap`. Fails with a domain
/// error naming the violated inequality if any saturated subsystem is
/// unstable.
pub fn saturation_constants(rates: &LineRates, cap: u64) -> Result<SaturationConstants> {
    let r1 = rates.rho(0);
    let r2 = rates.rho(1);
    let r3 = rates.rho(2);
    // Check in a fixed order so the first violated inequality is reported.
    let checks = [
        (r1 < (1.0 + r3) / 2.0, "rho1 < (1 + rho3) / 2"),
        (r3 < (1.0 + r1) / 2.0, "rho3 < (1 + rho1) / 2"),
        (r1 < 1.0 && r2 < (1.0 - r1) / 2.0, "rho2 < (1 - rho1) / 2 with rho1 < 1"),
        (r3 < 1.0 && r2 < (1.0 - r3) / 2.0, "rho2 < (1 - rho3) / 2 with rho3 < 1"),
    ];
    if let Some((_, name)) = checks.iter().find(|(ok, _)| !ok) {
        return Err(Error::Domain(format!(
            "saturated subsystem unstable: {name} fails for rho = ({r1}, {r2}, {r3})"
        )));
    }
    SaturationConstants::available(rates, &[cap, 2 * cap])
}
