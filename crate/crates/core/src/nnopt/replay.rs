use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

pub const OBS_DIM: usize = 1;
pub const ACT_DIM: usize = 2;

/// One `(s, a, r, s', done)` experience. Actions are stored in the learner's
/// normalised `[−1, 1]` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: [f64; OBS_DIM],
    pub action: [f64; ACT_DIM],
    pub reward: f64,
    pub next_state: [f64; OBS_DIM],
    pub done: bool,
}

/// Fixed-capacity ring of transitions, oldest overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: Vec<Transition>,
    write_cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            entries: Vec::with_capacity(capacity.min(1 << 16)),
            write_cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() < self.capacity {
            self.entries.push(t);
        } else {
            self.entries[self.write_cursor] = t;
        }
        self.write_cursor = (self.write_cursor + 1) % self.capacity;
    }

    /// Entries in storage order (not insertion order once wrapped).
    pub fn entries(&self) -> &[Transition] {
        &self.entries
    }

    /// Uniform batch, without replacement inside the batch.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<Transition>> {
        if self.entries.is_empty() {
            return Err(Error::State("cannot sample from an empty replay buffer".into()));
        }
        if batch_size == 0 || batch_size > self.entries.len() {
            return Err(Error::Domain(format!(
                "batch size {batch_size} not in 1..={}",
                self.entries.len()
            )));
        }
        Ok(index::sample(rng, self.entries.len(), batch_size)
            .into_iter()
            .map(|i| self.entries[i])
            .collect())
    }
}
