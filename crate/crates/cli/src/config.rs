//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use flowcsma::csma::Alpha;
use flowcsma::dynamics::{HoldingTime, SimConfig};
use flowcsma::topology::Preset;
use flowcsma::{AccessParams, ConflictGraph, Discipline, Error, TrafficProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSection,
    #[serde(default)]
    pub access: AccessSection,
    #[serde(default)]
    pub traffic: TrafficSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region3: Option<Region3Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<FluidSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Either a named preset or an explicit graph.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<usize>,
    /// Physical rates; unit rates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    /// 1-based conflicting pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conflicts: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisciplineSetting {
    Standard,
    #[default]
    FlowAware,
}

/// `alpha = 1.0`, `alpha = [1.0, 0.5, 2.0]` or `alpha = "infinity"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    Value(f64),
    PerLink(Vec<f64>),
    Named(String),
}

impl Default for AlphaSetting {
    fn default() -> Self {
        AlphaSetting::Value(1.0)
    }
}

impl AlphaSetting {
    pub fn label(&self) -> String {
        match self {
            AlphaSetting::Value(v) if v.is_infinite() => "inf".into(),
            AlphaSetting::Value(v) => format!("{v}"),
            AlphaSetting::PerLink(v) => v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "),
            AlphaSetting::Named(_) => "inf".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessSection {
    #[serde(default)]
    pub discipline: DisciplineSetting,
    #[serde(default)]
    pub alpha: AlphaSetting,
    /// Runs the experiment once per entry, overriding `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_sweep: Option<Vec<AlphaSetting>>,
}

/// Traffic direction plus an optional sweep of network loads along it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_sizes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loads: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldingMode {
    #[default]
    Expected,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub jumps: u64,
    pub warmup: u64,
    pub seed: u64,
    pub batches: usize,
    pub replicas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_cap: Option<u64>,
    #[serde(default)]
    pub holding: HoldingMode,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            jumps: d.jumps,
            warmup: d.warmup_jumps,
            seed: d.seed,
            batches: d.num_batches,
            replicas: 1,
            state_cap: None,
            holding: HoldingMode::Expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Region3Section {
    /// Values of `rho1 = rho3` for a boundary sweep; without it the traffic
    /// section is evaluated as a single point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_loads: Option<Vec<f64>>,
    pub caps: Vec<u64>,
}

impl Default for Region3Section {
    fn default() -> Self {
        Self {
            outer_loads: None,
            caps: vec![50, 100, 200],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    pub beta: [f64; 3],
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<u64>>,
}

/// Error in the configuration itself, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configs always serialize")
    }

    /// Starting point for `preset`, as written by `init`.
    pub fn template(preset: Preset) -> Self {
        let k = preset.num_links();
        Self {
            network: NetworkSection {
                preset: Some(preset.name().to_string()),
                ..NetworkSection::default()
            },
            access: AccessSection::default(),
            traffic: TrafficSection {
                symmetric: Some(0.1),
                loads: Some((1..=19).map(|i| f64::from(i) * 0.05).map(|v| (v * 100.0).round() / 100.0).collect()),
                ..TrafficSection::default()
            },
            simulation: SimulationSection::default(),
            region3: (preset == Preset::Line3).then(|| Region3Section {
                outer_loads: Some((1..=9).map(|i| f64::from(i) / 10.0).collect()),
                ..Region3Section::default()
            }),
            fluid: (k == 3).then(|| FluidSection {
                beta: [0.5, 0.0, 0.5],
                horizon: 1000.0,
                caps: None,
            }),
            output: None,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let g = self.graph()?;
        let k = g.num_links();
        if let AlphaSetting::PerLink(v) = &self.access.alpha {
            if v.len() != k {
                return Err(bad(format!("alpha has {} entries for {k} links", v.len())));
            }
        }
        for a in std::iter::once(&self.access.alpha).chain(self.access.alpha_sweep.iter().flatten()) {
            self.params_for(a, k)?;
        }
        if let Some(s) = &self.access.alpha_sweep {
            if s.len() < 2 {
                return Err(bad("alpha_sweep needs at least 2 values"));
            }
        }
        if let Some(loads) = &self.traffic.loads {
            if loads.len() < 2 {
                return Err(bad("traffic.loads needs at least 2 points"));
            }
            if loads.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(bad("traffic loads must be positive"));
            }
        }
        self.base_traffic(k)?;
        let s = &self.simulation;
        if s.batches < 2 {
            return Err(bad("simulation.batches must be at least 2"));
        }
        if s.replicas == 0 {
            return Err(bad("simulation.replicas must be at least 1"));
        }
        self.sim_config().validate().map_err(|e| bad(e.to_string()))?;
        if let Some(r) = &self.region3 {
            if let Some(v) = &r.outer_loads {
                if v.len() < 2 {
                    return Err(bad("region3.outer_loads needs at least 2 points"));
                }
            }
            if r.caps.is_empty() || r.caps.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("region3.caps must be a non-empty increasing list"));
            }
        }
        if let Some(f) = &self.fluid {
            if !(f.horizon > 0.0) {
                return Err(bad("fluid.horizon must be positive"));
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> anyhow::Result<ConflictGraph> {
        let n = &self.network;
        match (&n.preset, n.links) {
            (Some(_), _) if n.links.is_some() || n.conflicts.is_some() => {
                Err(bad("network: give either a preset or links and conflicts, not both"))
            }
            (Some(name), _) => {
                let preset: Preset = name.parse().map_err(|e: Error| bad(e.to_string()))?;
                let rates = n.rates.clone().unwrap_or_else(|| vec![1.0; preset.num_links()]);
                if rates.len() != preset.num_links() {
                    return Err(bad(format!(
                        "preset {name} has {} links but {} rates were given",
                        preset.num_links(),
                        rates.len()
                    )));
                }
                ConflictGraph::new(rates, preset.conflicts()).map_err(|e| bad(e.to_string()))
            }
            (None, Some(k)) => {
                let rates = n.rates.clone().unwrap_or_else(|| vec![1.0; k]);
                if rates.len() != k {
                    return Err(bad(format!("{k} links but {} rates", rates.len())));
                }
                let pairs: Vec<(usize, usize)> =
                    n.conflicts.iter().flatten().map(|p| (p[0], p[1])).collect();
                ConflictGraph::new(rates, &pairs).map_err(|e| bad(e.to_string()))
            }
            (None, None) => Err(bad("network needs a preset or a number of links")),
        }
    }

    pub fn params_for(&self, alpha: &AlphaSetting, k: usize) -> anyhow::Result<AccessParams> {
        let d = match self.access.discipline {
            DisciplineSetting::Standard => Discipline::Standard,
            DisciplineSetting::FlowAware => Discipline::FlowAware,
        };
        let a = match alpha {
            AlphaSetting::Value(v) if v.is_infinite() && *v > 0.0 => Alpha::Infinite,
            AlphaSetting::Value(v) => Alpha::Finite(vec![*v; k]),
            AlphaSetting::PerLink(v) => Alpha::Finite(v.clone()),
            AlphaSetting::Named(s) if s == "infinity" || s == "inf" => Alpha::Infinite,
            AlphaSetting::Named(s) => return Err(bad(format!("unknown alpha `{s}`; use a number or \"infinity\""))),
        };
        AccessParams::new(d, a).map_err(|e| bad(e.to_string()))
    }

    /// Every access setting to run: the sweep if given, else `alpha`.
    pub fn alphas(&self) -> Vec<AlphaSetting> {
        self.access
            .alpha_sweep
            .clone()
            .unwrap_or_else(|| vec![self.access.alpha.clone()])
    }

    /// Traffic as written, before any load scaling.
    pub fn base_traffic(&self, k: usize) -> anyhow::Result<TrafficProfile> {
        let t = &self.traffic;
        let given = [t.intensities.is_some(), t.arrival_rates.is_some(), t.symmetric.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(bad("traffic needs exactly one of intensities, arrival_rates or symmetric"));
        }
        let len_ok = |v: &Vec<f64>, what: &str| {
            if v.len() == k {
                Ok(())
            } else {
                Err(bad(format!("traffic.{what} has {} entries for {k} links", v.len())))
            }
        };
        let profile = if let Some(rho) = &t.intensities {
            len_ok(rho, "intensities")?;
            TrafficProfile::from_intensities(rho)
        } else if let Some(l) = &t.arrival_rates {
            len_ok(l, "arrival_rates")?;
            let sizes = t.mean_sizes.clone().unwrap_or_else(|| vec![1.0; k]);
            len_ok(&sizes, "mean_sizes")?;
            TrafficProfile::new(l.clone(), sizes)
        } else {
            TrafficProfile::symmetric(k, t.symmetric.unwrap_or_default())
        };
        profile.map_err(|e| bad(e.to_string()))
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.simulation;
        SimConfig {
            jumps: s.jumps,
            warmup_jumps: s.warmup,
            seed: s.seed,
            num_batches: s.batches,
            initial_state: None,
            state_cap: s.state_cap,
            holding: match s.holding {
                HoldingMode::Expected => HoldingTime::Expected,
                HoldingMode::Sampled => HoldingTime::Sampled,
            },
        }
    }
}
