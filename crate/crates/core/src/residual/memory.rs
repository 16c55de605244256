use alloc::collections::VecDeque;

/// The last `M` merit values, queried for their maximum.
#[derive(Debug, Clone)]
pub struct NonmonotoneMemory {
    ring: VecDeque<f64>,
    capacity: usize,
}

impl NonmonotoneMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "nonmonotone memory needs capacity >= 1");
        NonmonotoneMemory {
            ring: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, merit: f64) {
        if self.ring.len() == self.capacity {
            self.ring.pop_front();
        }
        self.ring.push_back(merit);
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    /// Maximum stored value. Panics on an empty memory.
    pub fn max(&self) -> f64 {
        assert!(!self.ring.is_empty(), "nonmonotone max of empty memory");
        self.ring.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
