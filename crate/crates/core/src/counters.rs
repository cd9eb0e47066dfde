use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Operation counters owned by a single execution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Index lookups and cursor seeks.
    pub probes: u64,
    /// Tuples produced, intermediates included.
    pub emitted: u64,
    /// Value comparisons made while seeking.
    pub comparisons: u64,
}

impl Counters {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, rhs: Counters) {
        self.probes += rhs.probes;
        self.emitted += rhs.emitted;
        self.comparisons += rhs.comparisons;
    }
}
