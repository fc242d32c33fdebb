//! Prefix-sum index over non-negative integer counts.

#[derive(Debug, Clone, Default)]
pub struct Fenwick {
    tree: Vec<u32>,
    top_bit: usize,
}

impl Fenwick {
    pub fn from_counts(counts: &[u32]) -> Self {
        let mut tree = vec![0u32; counts.len() + 1];
        tree[1..].copy_from_slice(counts);
        for i in 1..tree.len() {
            let parent = i + (i & i.wrapping_neg());
            if parent < tree.len() {
                tree[parent] += tree[i];
            }
        }
        let top_bit = if counts.is_empty() {
            0
        } else {
            1 << (usize::BITS - 1 - counts.len().leading_zeros())
        };
        Self { tree, top_bit }
    }

    pub fn len(&self) -> usize {
        self.tree.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn increment(&mut self, index: usize) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    pub fn decrement(&mut self, index: usize) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of the first `n` entries.
    pub fn prefix(&self, n: usize) -> u64 {
        let mut i = n.min(self.len());
        let mut sum = 0u64;
        while i > 0 {
            sum += u64::from(self.tree[i]);
            i &= i - 1;
        }
        sum
    }

    /// Sum over the half-open index range `[lo, hi)`.
    pub fn range(&self, lo: usize, hi: usize) -> u64 {
        if hi <= lo {
            return 0;
        }
        self.prefix(hi) - self.prefix(lo)
    }

    /// Index holding the `(k+1)`-th unit, i.e. the smallest `i` with
    /// `prefix(i + 1) > k`. Returns `None` when the total is `<= k`.
    pub fn find(&self, k: u64) -> Option<usize> {
        let mut pos = 0usize;
        let mut rem = k;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && u64::from(self.tree[next]) <= rem {
                pos = next;
                rem -= u64::from(self.tree[next]);
            }
            step >>= 1;
        }
        (pos < self.len()).then_some(pos)
    }
}
