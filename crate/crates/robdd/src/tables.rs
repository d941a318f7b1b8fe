//! Compact hash tables for the node store and the operation cache: open
//! addressing with a multiplicative hash, sized for millions of entries.

/// Unique table over the node array: buckets hold node indices, the node
/// array itself holds the keys, so each slot costs four bytes.
pub struct UniqueTable {
    buckets: Vec<u32>,
    len: usize,
}

const EMPTY: u32 = u32::MAX;

/// Multiplicative hash; callers index with the high half, where the
/// mixing lives.
#[inline]
fn mix(var: u32, low: u32, high: u32) -> u64 {
    let k = (var as u64) ^ (low as u64).rotate_left(21) ^ (high as u64).rotate_left(42);
    k.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 32
}

impl UniqueTable {
    pub fn new() -> UniqueTable {
        UniqueTable { buckets: vec![EMPTY; 1 << 12], len: 0 }
    }

    /// Finds the node `(var, low, high)` via `probe`, or returns the bucket
    /// slot to insert into.
    pub fn lookup(
        &self,
        var: u32,
        low: u32,
        high: u32,
        node_of: impl Fn(u32) -> (u32, u32, u32),
    ) -> Result<u32, usize> {
        let mask = self.buckets.len() - 1;
        let mut at = (mix(var, low, high) as usize) & mask;
        loop {
            let idx = self.buckets[at];
            if idx == EMPTY {
                return Err(at);
            }
            if node_of(idx) == (var, low, high) {
                return Ok(idx);
            }
            at = (at + 1) & mask;
        }
    }

    pub fn insert_at(&mut self, slot: usize, idx: u32) {
        self.buckets[slot] = idx;
        self.len += 1;
    }

    pub fn needs_grow(&self) -> bool {
        self.len * 4 > self.buckets.len() * 3
    }

    pub fn grow(&mut self, count: u32, node_of: impl Fn(u32) -> (u32, u32, u32)) {
        let cap = (self.buckets.len() * 2).max(1 << 12);
        self.buckets = vec![EMPTY; cap];
        self.len = 0;
        let mask = cap - 1;
        for idx in 0..count {
            let (var, low, high) = node_of(idx);
            let mut at = (mix(var, low, high) as usize) & mask;
            while self.buckets[at] != EMPTY {
                at = (at + 1) & mask;
            }
            self.buckets[at] = idx;
            self.len += 1;
        }
    }
}

/// Operation cache: packed 64-bit keys (opcode in the top bits, two 30-bit
/// handles) to 32-bit results. Probing is bounded to a small window; the
/// table doubles under load until a hard capacity, after which a colliding
/// insert displaces the oldest slot of its window. Entries are never
/// stale — a displaced result is simply recomputed on demand.
pub struct OpCache {
    keys: Vec<u64>,
    vals: Vec<u32>,
    len: usize,
}

const FREE: u64 = 0;
const WINDOW: usize = 8;
/// 2^23 slots ≈ 100 MB; keeps desk-scale synthesis well inside a
/// 500 MB process budget.
const MAX_SLOTS: usize = 1 << 23;

impl OpCache {
    pub fn new() -> OpCache {
        OpCache { keys: vec![FREE; 1 << 12], vals: vec![0; 1 << 12], len: 0 }
    }

    /// Opcodes start at 1, so a packed key is never the free sentinel.
    #[inline]
    pub fn key(op: u8, a: u32, b: u32) -> u64 {
        debug_assert!(op >= 1 && a < 1 << 30 && b < 1 << 30);
        (op as u64) << 60 | (a as u64) << 30 | b as u64
    }

    #[inline]
    fn slot(&self, key: u64) -> usize {
        (key.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 32) as usize & (self.keys.len() - 1)
    }

    pub fn get(&self, key: u64) -> Option<u32> {
        let mask = self.keys.len() - 1;
        let base = self.slot(key);
        for i in 0..WINDOW {
            let at = (base + i) & mask;
            let k = self.keys[at];
            // Free slots never reappear, so nothing lives past one.
            if k == FREE {
                return None;
            }
            if k == key {
                return Some(self.vals[at]);
            }
        }
        None
    }

    pub fn put(&mut self, key: u64, val: u32) {
        if self.len * 4 > self.keys.len() * 3 && self.keys.len() < MAX_SLOTS {
            self.grow();
        }
        let mask = self.keys.len() - 1;
        let base = self.slot(key);
        for i in 0..WINDOW {
            let at = (base + i) & mask;
            let k = self.keys[at];
            if k == FREE {
                self.keys[at] = key;
                self.vals[at] = val;
                self.len += 1;
                return;
            }
            if k == key {
                self.vals[at] = val;
                return;
            }
        }
        // Window full: displace the base slot.
        self.keys[base] = key;
        self.vals[base] = val;
    }

    fn grow(&mut self) {
        let old_keys = std::mem::replace(&mut self.keys, Vec::new());
        let old_vals = std::mem::take(&mut self.vals);
        let cap = old_keys.len() * 2;
        self.keys = vec![FREE; cap];
        self.vals = vec![0; cap];
        self.len = 0;
        for (k, v) in old_keys.into_iter().zip(old_vals) {
            if k != FREE {
                self.put(k, v);
            }
        }
    }
}

impl Default for UniqueTable {
    fn default() -> Self {
        Self::new()
    }
}

impl Default for OpCache {
    fn default() -> Self {
        Self::new()
    }
}
