//! Stability of standard CSMA on the 3-link line in the `alpha -> infinity`
//! limit, and the piecewise-linear fluid dynamics behind it.
//!
//! Links are numbered 1 to 3 in messages and 0 to 2 in arrays. Link 2 (the
//! middle one) conflicts with both outer links. With saturation constants
//! `pi0, pi13, pi21, pi23` the process is positive recurrent iff one of
//!
//! 1. `rho1 < (1 + rho3)/2`, `rho3 < (1 + rho1)/2`, `rho2 < pi0 + pi13/2`
//! 2. `rho1 < (1 + rho3)/2`, `(1 + rho1)/2 <= rho3 < (1 + rho1)/2 + (1 - rho1)/2 pi21`,
//!    `rho2 < (1 - rho1)/2`
//! 3. the mirror image of 2 with links 1 and 3 exchanged
//!
//! holds, and transient outside the closure of that region.

use crate::error::{Error, Result};
use crate::oracle::{LineRates, SaturationConstants};

/// Inequalities within this distance of equality are treated as binding.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Drifts within this distance of zero are treated as zero.
const DRIFT_TOL: f64 = 1e-12;
const MAX_SWITCHES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionClass {
    PositiveRecurrent,
    Transient,
    Boundary,
}

/// Position of `rho` relative to the two outer-queue inequalities, as in the
/// case analysis of the fluid limit (cases 1 to 5, the rest by symmetry).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OuterCase {
    pub number: u8,
    /// True when the case applies with links 1 and 3 exchanged.
    pub mirrored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionVerdict {
    pub class: RegionClass,
    /// Which of the three disjunctive conditions holds (1 to 3), if any.
    pub branch: Option<u8>,
    pub case: OuterCase,
    /// Constants as used, after filling in limits on critical lines.
    pub pi0: Option<f64>,
    pub pi13: Option<f64>,
    pub pi21: Option<f64>,
    pub pi23: Option<f64>,
    pub notes: Vec<String>,
}

/// Outcome of checking one disjunctive condition.
#[derive(Debug, Clone, PartialEq)]
enum BranchCheck {
    Holds,
    Binding,
    Fails,
    Skipped(String),
}

/// `pi0` and `pi13` for the given rates: computed values when the outer
/// pair is stable, their limits `0` and `1 - rho_other` when it is critical.
fn outer_constants(rates: &LineRates, c: &SaturationConstants) -> Option<(f64, f64)> {
    if let (Some(p0), Some(p13)) = (&c.pi0, &c.pi13) {
        return Some((p0.value, p13.value));
    }
    let (r1, r3) = (rates.rho(0), rates.rho(2));
    let a1 = (1.0 + r3) / 2.0 - r1;
    let a3 = (1.0 + r1) / 2.0 - r3;
    if a1.abs() <= BOUNDARY_TOL && a3 >= -BOUNDARY_TOL {
        // Queue 1 is critical and never empties; queue 3 sees an M/M/1 server.
        Some((0.0, (1.0 - r3).max(0.0)))
    } else if a3.abs() <= BOUNDARY_TOL && a1 >= -BOUNDARY_TOL {
        Some((0.0, (1.0 - r1).max(0.0)))
    } else {
        None
    }
}

/// `pi21` (or `pi23` when `mirror`), with limits on critical lines.
fn middle_constant(rates: &LineRates, c: &SaturationConstants, mirror: bool) -> Option<f64> {
    let stored = if mirror { &c.pi23 } else { &c.pi21 };
    if let Some(p) = stored {
        return Some(p.value);
    }
    let outer = if mirror { rates.rho(2) } else { rates.rho(0) };
    let r2 = rates.rho(1);
    if (1.0 - outer).abs() <= BOUNDARY_TOL {
        // Only ever multiplied by (1 - rho_outer) / 2.
        Some(0.0)
    } else if outer < 1.0 && (r2 - (1.0 - outer) / 2.0).abs() <= BOUNDARY_TOL {
        // Critical middle queue: idle with vanishing probability.
        Some(0.0)
    } else {
        None
    }
}

fn check(strict: &[Option<f64>], non_strict: &[f64], what: &str) -> BranchCheck {
    if non_strict.iter().any(|&m| m < -BOUNDARY_TOL)
        || strict.iter().flatten().any(|&m| m < -BOUNDARY_TOL)
    {
        return BranchCheck::Fails;
    }
    if strict.iter().any(Option::is_none) {
        return BranchCheck::Skipped(format!("{what}: required constant unavailable"));
    }
    if strict.iter().flatten().all(|&m| m > BOUNDARY_TOL) {
        BranchCheck::Holds
    } else {
        BranchCheck::Binding
    }
}

fn outer_case(r1: f64, r3: f64) -> OuterCase {
    let a1 = (1.0 + r3) / 2.0 - r1;
    let a3 = (1.0 + r1) / 2.0 - r3;
    let pos = |a: f64| a > BOUNDARY_TOL;
    let zero = |a: f64| a.abs() <= BOUNDARY_TOL;
    let (number, mirrored) = if pos(a1) && pos(a3) {
        (1, false)
    } else if pos(a1) && zero(a3) {
        (3, false)
    } else if pos(a1) {
        (2, false)
    } else if pos(a3) && zero(a1) {
        (3, true)
    } else if pos(a3) {
        (2, true)
    } else if zero(a1) && zero(a3) {
        (5, false)
    } else if zero(a3) {
        // rho1 > (1 + rho3)/2 and rho3 = (1 + rho1)/2
        (4, true)
    } else {
        (4, false)
    };
    OuterCase { number, mirrored }
}

/// Evaluates the three conditions for `rates` with `constants` computed for
/// the same rates.
pub fn region3_verdict(rates: &LineRates, constants: &SaturationConstants) -> Result<RegionVerdict> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if !(0..3).all(|k| {
        close(rates.lambda[k], constants.rates.lambda[k]) && close(rates.mu[k], constants.rates.mu[k])
    }) {
        return Err(Error::Input(
            "saturation constants were computed for different rates".into(),
        ));
    }
    let (r1, r2, r3) = (rates.rho(0), rates.rho(1), rates.rho(2));
    let outer = outer_constants(rates, constants);
    let pi21 = middle_constant(rates, constants, false);
    let pi23 = middle_constant(rates, constants, true);

    let a1 = (1.0 + r3) / 2.0 - r1;
    let a3 = (1.0 + r1) / 2.0 - r3;
    let branches = [
        check(
            &[Some(a1), Some(a3), outer.map(|(p0, p13)| p0 + p13 / 2.0 - r2)],
            &[],
            "condition 1",
        ),
        check(
            &[
                Some(a1),
                pi21.map(|p| (1.0 + r1) / 2.0 + (1.0 - r1) / 2.0 * p - r3),
                Some((1.0 - r1) / 2.0 - r2),
            ],
            &[-a3],
            "condition 2",
        ),
        check(
            &[
                Some(a3),
                pi23.map(|p| (1.0 + r3) / 2.0 + (1.0 - r3) / 2.0 * p - r1),
                Some((1.0 - r3) / 2.0 - r2),
            ],
            &[-a1],
            "condition 3",
        ),
    ];

    let mut notes = constants.notes.clone();
    let mut branch = None;
    let mut binding = false;
    for (i, b) in branches.iter().enumerate() {
        match b {
            BranchCheck::Holds if branch.is_none() => branch = Some(i as u8 + 1),
            BranchCheck::Binding => binding = true,
            BranchCheck::Skipped(n) => notes.push(n.clone()),
            _ => {}
        }
    }
    let class = if branch.is_some() {
        RegionClass::PositiveRecurrent
    } else if binding {
        RegionClass::Boundary
    } else {
        RegionClass::Transient
    };
    Ok(RegionVerdict {
        class,
        branch,
        case: outer_case(r1, r3),
        pi0: outer.map(|o| o.0),
        pi13: outer.map(|o| o.1),
        pi21,
        pi23,
        notes,
    })
}

/// Largest `rho2` keeping the symmetric line stable when `rho1 = rho3`:
/// `pi0 + pi13 / 2`.
pub fn symmetric_boundary(constants: &SaturationConstants) -> Option<f64> {
    Some(constants.pi0.as_ref()?.value + constants.pi13.as_ref()?.value / 2.0)
}

/// Initial point of a fluid trajectory: nonnegative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidState {
    pub beta: [f64; 3],
}

impl FluidState {
    pub fn new(beta: [f64; 3]) -> Result<Self> {
        if beta.iter().any(|&b| !(b.is_finite() && b >= 0.0)) {
            return Err(Error::Input(format!("fluid state {beta:?} has negative entries")));
        }
        if (beta.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("fluid state {beta:?} does not sum to one")));
        }
        Ok(Self { beta })
    }

    /// Components equal to zero.
    pub fn zero_set(&self) -> [bool; 3] {
        self.beta.map(|b| b == 0.0)
    }

    /// Points `(i, j, n - i - j) / n` of the simplex.
    pub fn simplex_grid(n: usize) -> Vec<FluidState> {
        let mut out = Vec::new();
        for i in 0..=n {
            for j in 0..=n - i {
                let b = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
                out.push(FluidState { beta: b });
            }
        }
        out
    }
}

fn need<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Domain(format!("{what} is unavailable for these rates")))
}

/// Drift of the fluid limit started from `state`, for the regime fixed by
/// which components of `state` are zero. The side conditions under which
/// empty queues stay empty are enforced and reported by name.
pub fn fluid_drift(
    state: &FluidState,
    rates: &LineRates,
    constants: &SaturationConstants,
) -> Result<[f64; 3]> {
    let (l, m) = (rates.lambda, rates.mu);
    let (r1, r2, r3) = (rates.rho(0), rates.rho(1), rates.rho(2));
    let z = state.zero_set();
    match z {
        [false, false, false] | [false, true, false] => {
            Ok([l[0] - m[0], l[1], l[2] - m[2]])
        }
        [true, false, false] => {
            if r1 >= 1.0 {
                return Err(Error::Domain(format!("empty queue 1 needs rho1 < 1, got {r1}")));
            }
            Ok([0.0, l[1] - m[1] * (1.0 - r1) / 2.0, l[2] - m[2] * (1.0 + r1) / 2.0])
        }
        [false, false, true] => {
            if r3 >= 1.0 {
                return Err(Error::Domain(format!("empty queue 3 needs rho3 < 1, got {r3}")));
            }
            Ok([l[0] - m[0] * (1.0 + r3) / 2.0, l[1] - m[1] * (1.0 - r3) / 2.0, 0.0])
        }
        [true, true, false] => {
            if r1 >= 1.0 || r2 >= (1.0 - r1) / 2.0 {
                return Err(Error::Domain(format!(
                    "empty queues 1 and 2 need rho1 < 1 and rho2 < (1 - rho1) / 2, got rho1 = {r1}, rho2 = {r2}"
                )));
            }
            let p = need(constants.pi21.as_ref().map(|c| c.value), "pi21")?;
            Ok([0.0, 0.0, l[2] - m[2] * ((1.0 + r1) / 2.0 + (1.0 - r1) / 2.0 * p)])
        }
        [false, true, true] => {
            if r3 >= 1.0 || r2 >= (1.0 - r3) / 2.0 {
                return Err(Error::Domain(format!(
                    "empty queues 2 and 3 need rho3 < 1 and rho2 < (1 - rho3) / 2, got rho3 = {r3}, rho2 = {r2}"
                )));
            }
            let p = need(constants.pi23.as_ref().map(|c| c.value), "pi23")?;
            Ok([l[0] - m[0] * ((1.0 + r3) / 2.0 + (1.0 - r3) / 2.0 * p), 0.0, 0.0])
        }
        [true, false, true] => {
            if r1 >= (1.0 + r3) / 2.0 || r3 >= (1.0 + r1) / 2.0 {
                return Err(Error::Domain(format!(
                    "empty queues 1 and 3 need rho1 < (1 + rho3) / 2 and rho3 < (1 + rho1) / 2, got rho1 = {r1}, rho3 = {r3}"
                )));
            }
            let p0 = need(constants.pi0.as_ref().map(|c| c.value), "pi0")?;
            let p13 = need(constants.pi13.as_ref().map(|c| c.value), "pi13")?;
            Ok([0.0, l[1] - m[1] * (p0 + p13 / 2.0), 0.0])
        }
        [true, true, true] => Err(Error::Input("fluid state cannot be all zero".into())),
    }
}

/// Drift with the set of pinned (empty) components resolved: a pinned
/// component whose queue would grow is released, repeatedly, until the
/// remaining pinned components are stable. Returns the drift and the pinned set.
fn resolved_drift(
    x: &[f64; 3],
    rates: &LineRates,
    constants: &SaturationConstants,
) -> Result<([f64; 3], [bool; 3])> {
    let (l, m) = (rates.lambda, rates.mu);
    let (r1, r3) = (rates.rho(0), rates.rho(2));
    let c1 = r1.min(1.0);
    let c3 = r3.min(1.0);
    let mut pinned = x.map(|v| v <= 0.0);
    loop {
        // Drift each pinned queue would have if it were released.
        let escape = |k: usize, p: [bool; 3]| -> f64 {
            match (k, p) {
                (0, [_, _, false]) => l[0] - m[0],
                (0, [_, false, true]) => l[0] - m[0] * (1.0 + c3) / 2.0,
                (2, [false, _, _]) => l[2] - m[2],
                (2, [true, false, _]) => l[2] - m[2] * (1.0 + c1) / 2.0,
                (1, [false, _, false]) => l[1],
                (1, [true, _, false]) => l[1] - m[1] * (1.0 - c1) / 2.0,
                (1, [false, _, true]) => l[1] - m[1] * (1.0 - c3) / 2.0,
                _ => f64::NEG_INFINITY,
            }
        };
        if pinned == [true; 3] {
            return Ok(([0.0; 3], pinned));
        }
        let release = (0..3)
            .filter(|&k| pinned[k])
            .map(|k| (k, escape(k, pinned)))
            .filter(|&(_, e)| e > DRIFT_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, _)) = release {
            pinned[k] = false;
            continue;
        }
        let d = match pinned {
            [false, false, false] | [false, true, false] => [l[0] - m[0], l[1], l[2] - m[2]],
            [true, false, false] => [0.0, l[1] - m[1] * (1.0 - c1) / 2.0, l[2] - m[2] * (1.0 + c1) / 2.0],
            [false, false, true] => [l[0] - m[0] * (1.0 + c3) / 2.0, l[1] - m[1] * (1.0 - c3) / 2.0, 0.0],
            [true, true, false] => {
                let p = need(middle_constant(rates, constants, false), "pi21")?;
                [0.0, 0.0, l[2] - m[2] * ((1.0 + c1) / 2.0 + (1.0 - c1) / 2.0 * p)]
            }
            [false, true, true] => {
                let p = need(middle_constant(rates, constants, true), "pi23")?;
                [l[0] - m[0] * ((1.0 + c3) / 2.0 + (1.0 - c3) / 2.0 * p), 0.0, 0.0]
            }
            [true, false, true] => {
                let (p0, p13) = need(outer_constants(rates, constants), "pi0/pi13")?;
                [0.0, l[1] - m[1] * (p0 + p13 / 2.0), 0.0]
            }
            [true, true, true] => unreachable!(),
        };
        return Ok((d, pinned));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluidOutcome {
    /// Every component reached zero at this time.
    Empties(f64),
    /// No component will hit zero again and these components grow linearly.
    Diverges { drift: [f64; 3] },
    /// All drifts vanish away from zero.
    Stalls,
    /// The horizon was reached first.
    Horizon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidPath {
    /// `(time, state)` at the start and at every regime switch.
    pub breakpoints: Vec<(f64, [f64; 3])>,
    /// Drift in force after each breakpoint.
    pub drifts: Vec<[f64; 3]>,
    pub outcome: FluidOutcome,
}

impl FluidPath {
    pub fn empties(&self) -> bool {
        matches!(self.outcome, FluidOutcome::Empties(_))
    }

    pub fn diverges(&self) -> bool {
        matches!(self.outcome, FluidOutcome::Diverges { .. })
    }

    /// State at time `t` by linear interpolation.
    pub fn state_at(&self, t: f64) -> [f64; 3] {
        let i = self.breakpoints.partition_point(|(s, _)| *s <= t).saturating_sub(1);
        let (t0, x0) = self.breakpoints[i];
        let d = self.drifts.get(i).copied().unwrap_or([0.0; 3]);
        [0, 1, 2].map(|k| (x0[k] + d[k] * (t - t0)).max(0.0))
    }
}

/// Integrates the piecewise-linear fluid dynamics from `state` using exact
/// hitting times, until every queue is empty, the path settles into linear
/// growth, or `horizon` elapses.
pub fn fluid_trajectory(
    state: &FluidState,
    rates: &LineRates,
    constants: &SaturationConstants,
    horizon: f64,
) -> Result<FluidPath> {
    if !(horizon > 0.0) {
        return Err(Error::Input(format!("horizon must be positive, got {horizon}")));
    }
    let mut x = state.beta;
    let mut t = 0.0;
    let mut breakpoints = vec![(t, x)];
    let mut drifts = Vec::new();
    for _ in 0..=MAX_SWITCHES {
        let (d, pinned) = resolved_drift(&x, rates, constants)?;
        if pinned == [true; 3] {
            return Ok(FluidPath {
                breakpoints,
                drifts,
                outcome: FluidOutcome::Empties(t),
            });
        }
        drifts.push(d);
        let next_hit = (0..3)
            .filter(|&k| !pinned[k] && d[k] < -DRIFT_TOL)
            .map(|k| (k, x[k] / -d[k]))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((k, dt)) = next_hit else {
            let outcome = if (0..3).any(|k| !pinned[k] && d[k] > DRIFT_TOL) {
                FluidOutcome::Diverges { drift: d }
            } else {
                FluidOutcome::Stalls
            };
            return Ok(FluidPath {
                breakpoints,
                drifts,
                outcome,
            });
        };
        if t + dt > horizon {
            for j in 0..3 {
                x[j] = (x[j] + d[j] * (horizon - t)).max(0.0);
            }
            breakpoints.push((horizon, x));
            return Ok(FluidPath {
                breakpoints,
                drifts,
                outcome: FluidOutcome::Horizon,
            });
        }
        t += dt;
        for j in 0..3 {
            x[j] = if pinned[j] { 0.0 } else { (x[j] + d[j] * dt).max(0.0) };
        }
        x[k] = 0.0;
        // Components within round-off of zero hit at the same time.
        for j in 0..3 {
            if x[j] < 1e-14 {
                x[j] = 0.0;
            }
        }
        breakpoints.push((t, x));
    }
    Err(Error::Numerical(format!(
        "fluid trajectory from {:?} switched regime more than {MAX_SWITCHES} times",
        state.beta
    )))
}
