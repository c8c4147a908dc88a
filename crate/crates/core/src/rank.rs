//! Sorted node rankings with cheap in-place re-keying.
//!
//! Claims change one node's key by a small amount, so moving the entry inside
//! a sorted vector touches only the few neighbours it passes. Alongside the
//! order the ranking keeps node bitsets of its top 64, 256 and 1024 entries,
//! so the best-ranked node in any bitset (an open row) is found by masking.

const LEVELS: [usize; 3] = [64, 256, 1024];

#[derive(Clone, Debug)]
pub struct Ranking<K> {
    keys: Vec<K>,
    node_of: fn(&K) -> u32,
    words: usize,
    /// `masks[i]` holds the nodes ranked below `LEVELS[i]`.
    masks: Vec<Vec<u64>>,
}

impl<K: Ord + Copy> Ranking<K> {
    /// Ranks `keys`, which must name each node of `0..keys.len()` once.
    pub fn new(keys: impl IntoIterator<Item = K>, node_of: fn(&K) -> u32) -> Self {
        let mut keys: Vec<K> = keys.into_iter().collect();
        keys.sort();
        let words = keys.len().div_ceil(64);
        let masks = LEVELS
            .iter()
            .filter(|&&size| size < keys.len())
            .map(|&size| {
                let mut m = vec![0u64; words];
                for k in &keys[..size] {
                    let v = node_of(k) as usize;
                    m[v / 64] |= 1 << (v % 64);
                }
                m
            })
            .collect();
        Ranking { keys, node_of, words, masks }
    }

    #[inline]
    pub fn node(&self, k: &K) -> u32 {
        (self.node_of)(k)
    }

    pub fn as_slice(&self) -> &[K] {
        &self.keys
    }

    pub fn iter(&self) -> std::slice::Iter<'_, K> {
        self.keys.iter()
    }

    pub fn first(&self) -> Option<&K> {
        self.keys.first()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Replaces `old` by `new`. Panics if `old` is absent.
    pub fn replace(&mut self, old: K, new: K) {
        let from = self.keys.binary_search(&old).expect("ranked key present");
        let to = match self.keys.binary_search(&new) {
            Ok(i) | Err(i) => i,
        };
        let to = if to > from {
            self.keys[from..to].rotate_left(1);
            self.keys[to - 1] = new;
            to - 1
        } else {
            self.keys[to..=from].rotate_right(1);
            self.keys[to] = new;
            to
        };
        for (mask, &size) in self.masks.iter_mut().zip(&LEVELS) {
            let (enter, leave) = if from < size && to >= size {
                (self.keys[size - 1], new)
            } else if to < size && from >= size {
                (new, self.keys[size])
            } else {
                continue;
            };
            let (a, b) = ((self.node_of)(&enter) as usize, (self.node_of)(&leave) as usize);
            mask[a / 64] |= 1 << (a % 64);
            mask[b / 64] &= !(1 << (b % 64));
        }
    }

    /// Best-ranked key among the nodes set in `row` (a bitset over node ids).
    pub fn best_in(&self, row: &[u64], key_of: impl Fn(u32) -> K) -> Option<K> {
        debug_assert!(row.len() <= self.words);
        let scan = |mask: Option<&Vec<u64>>| {
            let mut best: Option<K> = None;
            for (wi, &r) in row.iter().enumerate() {
                let mut bits = match mask {
                    Some(m) => r & m[wi],
                    None => r,
                };
                while bits != 0 {
                    let k = key_of(wi as u32 * 64 + bits.trailing_zeros());
                    bits &= bits - 1;
                    if best.is_none_or(|b| k < b) {
                        best = Some(k);
                    }
                }
            }
            best
        };
        self.masks.iter().map(Some).chain(std::iter::once(None)).find_map(scan)
    }
}

/// Per-node memo of the best-ranked open partner.
///
/// An entry stays exact while its edge is open and the partner's key is
/// unchanged, provided no key has improved since it was stored; callers
/// [`bump`](PartnerCache::bump) the epoch whenever some key improves.
#[derive(Clone, Debug)]
pub struct PartnerCache<K> {
    epoch: u64,
    entries: Vec<Option<(u64, K)>>,
}

impl<K: Ord + Copy> PartnerCache<K> {
    pub fn new(n: u32) -> Self {
        PartnerCache { epoch: 0, entries: vec![None; n as usize] }
    }

    pub fn bump(&mut self) {
        self.epoch += 1;
    }

    /// Best-ranked node `w` with `is_open(u, w)`, where `row` is `u`'s open row.
    pub fn partner(&mut self, ranking: &Ranking<K>, u: u32, row: &[u64], key_of: impl Fn(u32) -> K) -> Option<K> {
        if let Some((epoch, k)) = self.entries[u as usize] {
            let w = ranking.node(&k);
            if epoch == self.epoch && row[w as usize / 64] >> (w % 64) & 1 == 1 && key_of(w) == k {
                return Some(k);
            }
        }
        let best = ranking.best_in(row, key_of);
        self.entries[u as usize] = best.map(|k| (self.epoch, k));
        best
    }
}
