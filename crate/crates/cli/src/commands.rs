//! One function per subcommand, each producing a CSV table.

use anyhow::{bail, Context};
use flowcsma::dynamics::{simulate, simulate_replicas, SimEstimate};
use flowcsma::oracle::{LineRates, SaturationConstants};
use flowcsma::region3::{
    fluid_trajectory, region3_verdict, symmetric_boundary, FluidOutcome, FluidState, RegionClass,
};
use flowcsma::*;

use crate::config::{AlphaSetting, ExperimentConfig};
use crate::output::{link_set, num, Table};

pub fn schedules(cfg: &ExperimentConfig) -> anyhow::Result<Table> {
    let g = cfg.graph()?;
    let s = enumerate_schedules(&g);
    eprintln!("N = {} feasible schedules", s.len());
    let mut t = Table::new(&["schedule", "size", "links"]);
    for i in 0..s.len() {
        let links = s.links(i);
        t.push(vec![i.to_string(), links.len().to_string(), link_set(&links)]);
    }
    Ok(t)
}

/// `(load, traffic)` for every point of the sweep, or the single configured
/// point with its computed load.
fn load_points(cfg: &ExperimentConfig, g: &ConflictGraph, s: &ScheduleSet) -> anyhow::Result<Vec<(f64, TrafficProfile)>> {
    let base = cfg.base_traffic(g.num_links())?;
    match &cfg.traffic.loads {
        Some(loads) => loads
            .iter()
            .map(|&l| Ok((l, scale_to_load(g, s, &base, l)?)))
            .collect(),
        None => Ok(vec![(capacity_verdict(g, s, &base)?.load, base)]),
    }
}

pub fn capacity(cfg: &ExperimentConfig) -> anyhow::Result<Table> {
    let g = cfg.graph()?;
    let s = enumerate_schedules(&g);
    let mut t = Table::new(&["load", "region", "margin", "schedule", "links", "q"]);
    for (_, traffic) in load_points(cfg, &g, &s)? {
        let v = capacity_verdict(&g, &s, &traffic)?;
        let region = match v.region {
            Region::Interior => "interior",
            Region::Boundary => "boundary",
            Region::Exterior => "exterior",
        };
        for (i, q) in v.witness.iter().enumerate() {
            t.push(vec![
                num(v.load),
                region.into(),
                v.margin.map(num).unwrap_or_default(),
                i.to_string(),
                link_set(&s.links(i)),
                num(*q),
            ]);
        }
    }
    Ok(t)
}

struct SimPoint {
    alpha: AlphaSetting,
    load: f64,
    traffic: TrafficProfile,
    seed: u64,
}

pub fn simulate_cmd(cfg: &ExperimentConfig) -> anyhow::Result<Table> {
    let g = cfg.graph()?;
    let s = enumerate_schedules(&g);
    let k = g.num_links();
    let points = load_points(cfg, &g, &s)?;
    let mut jobs = Vec::new();
    for alpha in cfg.alphas() {
        for (load, traffic) in &points {
            jobs.push(SimPoint {
                alpha: alpha.clone(),
                load: *load,
                traffic: traffic.clone(),
                seed: cfg.simulation.seed + jobs.len() as u64,
            });
        }
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut results: Vec<anyhow::Result<SimEstimate>> = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(workers) {
        let done: Vec<anyhow::Result<SimEstimate>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|job| {
                    let (g, s) = (&g, &s);
                    scope.spawn(move || -> anyhow::Result<SimEstimate> {
                        let params = cfg.params_for(&job.alpha, k)?;
                        let mut sc = cfg.sim_config();
                        sc.seed = job.seed;
                        let est = if cfg.simulation.replicas > 1 {
                            simulate_replicas(g, s, &job.traffic, &params, &sc, cfg.simulation.replicas)?
                        } else {
                            simulate(g, s, &job.traffic, &params, &sc)?
                        };
                        Ok(est)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
        });
        results.extend(done);
    }
    let mut t = Table::new(&["alpha", "load", "link", "mean_flows", "gamma", "ci_half_width", "seed", "capped"]);
    for (job, est) in jobs.iter().zip(results) {
        let est = est?;
        for j in 0..k {
            t.push(vec![
                job.alpha.label(),
                num(job.load),
                (j + 1).to_string(),
                num(est.mean_flow_count[j]),
                num(est.mean_throughput[j]),
                num(est.throughput_ci[j]),
                job.seed.to_string(),
                u8::from(est.capped()).to_string(),
            ]);
        }
    }
    Ok(t)
}

fn require_line3(g: &ConflictGraph) -> anyhow::Result<()> {
    if g.num_links() != 3 || g.conflict_pairs() != vec![(1, 2), (2, 3)] {
        bail!(crate::config::ConfigError(
            "this command needs the 3-link line (preset line3)".into()
        ));
    }
    Ok(())
}

fn class_name(c: RegionClass) -> &'static str {
    match c {
        RegionClass::PositiveRecurrent => "positive_recurrent",
        RegionClass::Transient => "transient",
        RegionClass::Boundary => "boundary",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn region3(cfg: &ExperimentConfig) -> anyhow::Result<Table> {
    let g = cfg.graph()?;
    require_line3(&g)?;
    let section = cfg.region3.clone().unwrap_or_default();
    if let Some(outer) = &section.outer_loads {
        let mut t = Table::new(&["rho1", "rho2_boundary", "pi0", "pi13", "truncation_error"]);
        for &r in outer {
            let rates = LineRates::from_loads([r, 0.01, r])?;
            let c = SaturationConstants::available(&rates, &section.caps)?;
            let (b, err) = match symmetric_boundary(&c) {
                Some(b) => (Some(b), c.max_truncation_error()),
                None => {
                    // Outside the stable range of the outer pair, or on its edge.
                    let v = region3_verdict(&rates, &c)?;
                    (v.pi0.zip(v.pi13).map(|(a, b)| a + b / 2.0), 0.0)
                }
            };
            t.push(vec![
                num(r),
                opt(b),
                opt(c.pi0.as_ref().map(|e| e.value)),
                opt(c.pi13.as_ref().map(|e| e.value)),
                num(err),
            ]);
        }
        return Ok(t);
    }
    let s = enumerate_schedules(&g);
    let mut t = Table::new(&[
        "load", "rho1", "rho2", "rho3", "class", "branch", "case", "mirrored", "pi0", "pi13", "pi21", "pi23",
    ]);
    for (load, traffic) in load_points(cfg, &g, &s)? {
        let rates = LineRates::from_traffic(&traffic, &g)?;
        let c = SaturationConstants::available(&rates, &section.caps)?;
        let v = region3_verdict(&rates, &c)?;
        for n in &v.notes {
            eprintln!("note: {n}");
        }
        t.push(vec![
            num(load),
            num(rates.rho(0)),
            num(rates.rho(1)),
            num(rates.rho(2)),
            class_name(v.class).into(),
            v.branch.map(|b| b.to_string()).unwrap_or_default(),
            v.case.number.to_string(),
            u8::from(v.case.mirrored).to_string(),
            opt(v.pi0),
            opt(v.pi13),
            opt(v.pi21),
            opt(v.pi23),
        ]);
    }
    Ok(t)
}

pub fn fluid(cfg: &ExperimentConfig) -> anyhow::Result<Table> {
    let g = cfg.graph()?;
    require_line3(&g)?;
    let section = cfg
        .fluid
        .as_ref()
        .ok_or_else(|| crate::config::ConfigError("config has no [fluid] section".into()))?;
    let traffic = cfg.base_traffic(3)?;
    let rates = LineRates::from_traffic(&traffic, &g)?;
    let caps = section
        .caps
        .clone()
        .or_else(|| cfg.region3.as_ref().map(|r| r.caps.clone()))
        .unwrap_or_else(|| vec![50, 100, 200]);
    let c = SaturationConstants::available(&rates, &caps)?;
    let start = FluidState::new(section.beta).context("fluid.beta")?;
    let path = fluid_trajectory(&start, &rates, &c, section.horizon)?;
    let mut t = Table::new(&["time", "x1", "x2", "x3"]);
    for (time, x) in &path.breakpoints {
        t.push(vec![num(*time), num(x[0]), num(x[1]), num(x[2])]);
    }
    match path.outcome {
        FluidOutcome::Empties(at) => eprintln!("all queues empty at t = {}", num(at)),
        FluidOutcome::Diverges { drift } => {
            let x = path.state_at(section.horizon);
            t.push(vec![num(section.horizon), num(x[0]), num(x[1]), num(x[2])]);
            eprintln!("grows linearly with drift ({}, {}, {})", num(drift[0]), num(drift[1]), num(drift[2]));
        }
        FluidOutcome::Stalls => eprintln!("path settles at a nonzero state"),
        FluidOutcome::Horizon => eprintln!("horizon reached"),
    }
    Ok(t)
}
