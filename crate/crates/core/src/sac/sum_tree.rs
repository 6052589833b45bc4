//! Binary sum tree over a fixed number of non-negative leaves.

/// Leaves live at `tree[size..size + capacity]`; node `i` stores the sum of
/// nodes `2i` and `2i + 1`. Parents are recomputed from their children on
/// every write, so the root never accumulates drift from repeated deltas.
#[derive(Debug, Clone)]
pub struct SumTree {
    capacity: usize,
    size: usize,
    tree: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        let size = capacity.next_power_of_two();
        Self {
            capacity,
            size,
            tree: vec![0.0; 2 * size],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.tree[1.min(self.tree.len() - 1)]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.tree[self.size + index]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        assert!(index < self.capacity, "leaf {index} out of range");
        assert!(value >= 0.0 && value.is_finite(), "bad priority {value}");
        let mut i = self.size + index;
        self.tree[i] = value;
        while i > 1 {
            i /= 2;
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1];
        }
    }

    /// Leaf whose cumulative range contains `prefix` (clamped into `[0, total)`).
    /// Never returns a zero-valued leaf while the total is positive.
    pub fn find(&self, prefix: f64) -> usize {
        let mut u = prefix.clamp(0.0, self.total());
        let mut i = 1;
        while i < self.size {
            let left = 2 * i;
            if u < self.tree[left] || self.tree[left + 1] <= 0.0 {
                i = left;
            } else {
                u -= self.tree[left];
                i = left + 1;
            }
        }
        let mut leaf = i - self.size;
        // rounding can still strand us on an empty leaf at the right edge
        while leaf > 0 && self.tree[self.size + leaf] <= 0.0 {
            leaf -= 1;
        }
        leaf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_and_lookup() {
        let mut t = SumTree::new(5);
        for (i, p) in [1.0, 3.0, 0.0, 2.0, 4.0].iter().enumerate() {
            t.set(i, *p);
        }
        assert_eq!(t.total(), 10.0);
        assert_eq!(t.find(0.0), 0);
        assert_eq!(t.find(0.999), 0);
        assert_eq!(t.find(1.0), 1);
        assert_eq!(t.find(3.999), 1);
        assert_eq!(t.find(4.0), 3);
        assert_eq!(t.find(6.0), 4);
        assert_eq!(t.find(10.0), 4);
        t.set(4, 0.0);
        assert_eq!(t.find(9.9), 3);
    }

    #[test]
    fn single_leaf() {
        let mut t = SumTree::new(1);
        t.set(0, 2.5);
        assert_eq!(t.total(), 2.5);
        assert_eq!(t.find(1.0), 0);
    }
}
