//! Bounded uniform-sampling replay ring.

use crate::timegrid::RngStream;

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    cursor: usize,
    inserted: u64,
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> ReplayBuffer<T> {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
            inserted: 0,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.cursor] = item;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        self.inserted += 1;
    }

    /// Uniform sample with replacement over the stored items.
    pub fn sample(&self, batch: usize, rng: &mut RngStream) -> Vec<T> {
        assert!(!self.items.is_empty(), "cannot sample an empty buffer");
        (0..batch)
            .map(|_| self.items[rng.below(self.items.len())].clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }
}
