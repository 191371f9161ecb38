//! Flow-level models of CSMA wireless networks.
//!
//! Links share the medium according to a conflict graph. Flows arrive on
//! each link as a Poisson process and leave once their exponentially
//! distributed volume has been transmitted; the link throughputs in each
//! state follow from the stationary schedule distribution of standard or
//! flow-aware CSMA. The crate provides
//!
//! * [`graph`]: conflict graphs and schedule enumeration,
//! * [`csma`]: schedule weights, probabilities and link throughputs,
//! * [`capacity`]: capacity-region membership by linear programming,
//! * [`dynamics`]: simulation of the flow-level Markov process, empirical
//!   stability classification and the Lyapunov drift of flow-aware CSMA,
//! * [`oracle`]: exact stationary solves used as ground truth,
//! * [`region3`]: the stability region of standard CSMA on the 3-link line
//!   and its fluid-limit dynamics.

pub mod capacity;
pub mod csma;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod lp;
pub mod oracle;
pub mod region3;
pub mod stats;
pub mod topology;

pub use capacity::{capacity_verdict, scale_to_load, CapacityVerdict, Region, TrafficProfile};
pub use csma::{
    limit_distribution, link_throughputs, schedule_distribution, schedule_weights, AccessParams,
    Alpha, Discipline, NetworkState, ScheduleDistribution, ThroughputModel,
};
pub use error::{Error, Result};
pub use graph::{enumerate_schedules, ConflictGraph, ScheduleSet};
