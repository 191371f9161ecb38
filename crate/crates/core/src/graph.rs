//! Conflict graphs and enumeration of feasible schedules.
//!
//! Links are 1-based in the public API and 0-based bit positions inside
//! masks. A schedule is a `u32` mask of simultaneously active links.

use crate::error::{Error, Result};

/// Largest number of links a [`ConflictGraph`] can hold.
pub const MAX_LINKS: usize = 32;

/// Links, their pairwise conflicts and physical rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    rates: Vec<f64>,
    /// Bit `l` of `conflicts[k]` is set iff links `k` and `l` conflict.
    conflicts: Vec<u32>,
}

impl ConflictGraph {
    /// Builds a graph from per-link physical rates and 1-based conflict pairs.
    pub fn new(rates: Vec<f64>, pairs: &[(usize, usize)]) -> Result<Self> {
        let k = rates.len();
        if k == 0 {
            return Err(Error::Config("a conflict graph needs at least one link".into()));
        }
        if k > MAX_LINKS {
            return Err(Error::Config(format!(
                "{k} links exceed the supported maximum of {MAX_LINKS}"
            )));
        }
        if let Some((i, r)) = rates.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::Config(format!(
                "link {} has non-positive physical rate {r}",
                i + 1
            )));
        }
        let mut conflicts = vec![0u32; k];
        for &(a, b) in pairs {
            if a == 0 || b == 0 || a > k || b > k {
                return Err(Error::Config(format!(
                    "conflict ({a},{b}) references a link outside 1..={k}"
                )));
            }
            if a == b {
                return Err(Error::Config(format!("link {a} cannot conflict with itself")));
            }
            conflicts[a - 1] |= 1 << (b - 1);
            conflicts[b - 1] |= 1 << (a - 1);
        }
        Ok(Self { rates, conflicts })
    }

    /// Graph where every link has unit physical rate.
    pub fn unit_rates(num_links: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(vec![1.0; num_links], pairs)
    }

    pub fn num_links(&self) -> usize {
        self.rates.len()
    }

    /// Physical rates, indexed from 0.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Conflict mask of the 0-based link `k`.
    pub fn conflict_mask(&self, k: usize) -> u32 {
        self.conflicts[k]
    }

    /// Whether the 1-based links `a` and `b` conflict.
    pub fn conflicts(&self, a: usize, b: usize) -> Result<bool> {
        let (a0, b0) = (self.index(a)?, self.index(b)?);
        Ok(self.conflicts[a0] & (1 << b0) != 0)
    }

    /// Conflict pairs as 1-based `(a, b)` with `a < b`, in lexicographic order.
    pub fn conflict_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.num_links();
        let mut out = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                if self.conflicts[a] & (1 << b) != 0 {
                    out.push((a + 1, b + 1));
                }
            }
        }
        out
    }

    /// Mask with every link set.
    pub fn full_mask(&self) -> u32 {
        full_mask(self.num_links())
    }

    /// Converts 1-based link indices to a mask.
    pub fn mask_of(&self, links: &[usize]) -> Result<u32> {
        links.iter().try_fold(0u32, |m, &l| Ok(m | 1 << self.index(l)?))
    }

    /// True iff no two links in `links` conflict.
    pub fn is_feasible(&self, links: &[usize]) -> Result<bool> {
        Ok(self.is_feasible_mask(self.mask_of(links)?))
    }

    /// Mask form of [`is_feasible`](Self::is_feasible). Bits above the link
    /// count are ignored.
    pub fn is_feasible_mask(&self, mask: u32) -> bool {
        let mut rest = mask & self.full_mask();
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            if self.conflicts[k] & mask != 0 {
                return false;
            }
            rest &= rest - 1;
        }
        true
    }

    fn index(&self, link: usize) -> Result<usize> {
        if link == 0 || link > self.num_links() {
            Err(Error::Input(format!(
                "link {link} outside 1..={}",
                self.num_links()
            )))
        } else {
            Ok(link - 1)
        }
    }
}

pub(crate) fn full_mask(k: usize) -> u32 {
    if k >= 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

/// All feasible schedules of a graph. Entry 0 is the empty schedule and
/// the rest follow in ascending mask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleSet {
    num_links: usize,
    masks: Vec<u32>,
}

impl ScheduleSet {
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn num_links(&self) -> usize {
        self.num_links
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.masks.iter().copied()
    }

    /// 1-based links of schedule `i`.
    pub fn links(&self, i: usize) -> Vec<usize> {
        mask_links(self.masks[i])
    }

    /// Position of a schedule mask, if feasible.
    pub fn position(&self, mask: u32) -> Option<usize> {
        self.masks.binary_search(&mask).ok()
    }
}

/// 1-based link indices set in `mask`.
pub fn mask_links(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect()
}

/// Enumerates every independent set of the conflict graph, including the
/// empty set, by backtracking over links with conflict-mask pruning.
pub fn enumerate_schedules(graph: &ConflictGraph) -> ScheduleSet {
    let k = graph.num_links();
    let mut masks = Vec::new();
    // Explicit stack of (next link to decide, chosen mask, links excluded by choice).
    let mut stack = vec![(0usize, 0u32, 0u32)];
    while let Some((next, chosen, blocked)) = stack.pop() {
        if next == k {
            masks.push(chosen);
            continue;
        }
        stack.push((next + 1, chosen, blocked));
        if blocked & (1 << next) == 0 {
            stack.push((
                next + 1,
                chosen | 1 << next,
                blocked | graph.conflict_mask(next),
            ));
        }
    }
    // The empty mask is the smallest value, so sorting puts it first.
    masks.sort_unstable();
    ScheduleSet { num_links: k, masks }
}
