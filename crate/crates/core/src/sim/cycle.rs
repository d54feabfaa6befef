/// Counts completed communication cycles.
///
/// A cycle completes once every agent has updated and, for every ordered
/// pair `j → i`, agent `i` has received a value of block `j` computed at or
/// after `j`'s first update of the current cycle. All flags then reset.
#[derive(Debug, Clone)]
pub struct CycleTracker {
    n: usize,
    first_update: Vec<Option<u64>>,
    delivered: Vec<bool>,
    updated_count: usize,
    delivered_count: usize,
    cycles: u64,
}

impl CycleTracker {
    pub fn new(n: usize) -> Self {
        CycleTracker {
            n,
            first_update: vec![None; n],
            delivered: vec![false; n * n],
            updated_count: 0,
            delivered_count: 0,
            cycles: 0,
        }
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn record_update(&mut self, agent: usize, tick: u64) {
        if self.first_update[agent].is_none() {
            self.first_update[agent] = Some(tick);
            self.updated_count += 1;
        }
    }

    /// `computed_at` is the tick of the sender's update the payload came from.
    pub fn record_delivery(&mut self, from: usize, to: usize, computed_at: Option<u64>) {
        let fresh = matches!((self.first_update[from], computed_at), (Some(u), Some(c)) if c >= u);
        let slot = from * self.n + to;
        if fresh && !self.delivered[slot] {
            self.delivered[slot] = true;
            self.delivered_count += 1;
        }
    }

    /// Closes the cycle if complete; returns whether it did.
    pub fn end_tick(&mut self) -> bool {
        if self.updated_count == self.n && self.delivered_count == self.n * (self.n - 1) {
            self.cycles += 1;
            self.first_update.iter_mut().for_each(|u| *u = None);
            self.delivered.iter_mut().for_each(|d| *d = false);
            self.updated_count = 0;
            self.delivered_count = 0;
            true
        } else {
            false
        }
    }
}
