//! Fenwick-tree set over the dense IP index space. Supports O(log n)
//! insert/remove and selection of the k-th smallest present index, which is
//! how the pseudorandom policy samples uniformly without a linear scan.

pub(crate) struct FenwickSet {
    tree: Vec<u32>,
    capacity: usize,
    len: u64,
}

impl FenwickSet {
    pub fn new(capacity: u32) -> Self {
        Self {
            tree: vec![0; capacity as usize + 1],
            capacity: capacity as usize,
            len: 0,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    /// Insert `idx`; the caller guarantees it is absent.
    pub fn insert(&mut self, idx: u32) {
        self.update(idx, 1);
        self.len += 1;
    }

    /// Remove `idx`; the caller guarantees it is present.
    pub fn remove(&mut self, idx: u32) {
        self.update(idx, -1);
        self.len -= 1;
    }

    fn update(&mut self, idx: u32, delta: i32) {
        let mut pos = idx as usize + 1;
        while pos <= self.capacity {
            self.tree[pos] = (self.tree[pos] as i64 + delta as i64) as u32;
            pos += pos & pos.wrapping_neg();
        }
    }

    /// Index of the k-th smallest present element (0-based `k < len`).
    pub fn select(&self, k: u64) -> u32 {
        debug_assert!(k < self.len);
        let mut rem = k + 1;
        let mut pos = 0usize;
        let mut mask = self.capacity.next_power_of_two();
        if mask > self.capacity {
            mask >>= 1;
        }
        while mask > 0 {
            let next = pos + mask;
            if next <= self.capacity && (self.tree[next] as u64) < rem {
                rem -= self.tree[next] as u64;
                pos = next;
            }
            mask >>= 1;
        }
        pos as u32
    }
}
