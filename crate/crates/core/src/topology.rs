//! Named conflict graphs used in experiments.
//!
//! The 4-link presets are read off the pictures of the square, line and star
//! networks: the square is a 4-cycle, the line a path, and the star a center
//! link (link 1) in conflict with three leaves that do not conflict with each
//! other.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::ConflictGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Single,
    Line3,
    Line4,
    Square4,
    Star4,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Single,
        Preset::Line3,
        Preset::Line4,
        Preset::Square4,
        Preset::Star4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Single => "single",
            Preset::Line3 => "line3",
            Preset::Line4 => "line4",
            Preset::Square4 => "square4",
            Preset::Star4 => "star4",
        }
    }

    pub fn num_links(self) -> usize {
        match self {
            Preset::Single => 1,
            Preset::Line3 => 3,
            _ => 4,
        }
    }

    /// 1-based conflict pairs.
    pub fn conflicts(self) -> &'static [(usize, usize)] {
        match self {
            Preset::Single => &[],
            Preset::Line3 => &[(1, 2), (2, 3)],
            Preset::Line4 => &[(1, 2), (2, 3), (3, 4)],
            Preset::Square4 => &[(1, 2), (2, 3), (3, 4), (1, 4)],
            Preset::Star4 => &[(1, 2), (1, 3), (1, 4)],
        }
    }

    /// The preset with unit physical rates.
    pub fn graph(self) -> ConflictGraph {
        ConflictGraph::unit_rates(self.num_links(), self.conflicts())
            .expect("preset topologies are valid")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}
