//! Compact sets of source indices.

use std::fmt;

/// Upper bound on the number of sources a [`SourceSet`] can hold.
pub const MAX_SOURCES: usize = 32;

/// A set of source indices backed by a bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SourceSet(u32);

impl SourceSet {
    pub const EMPTY: SourceSet = SourceSet(0);

    /// `{0, 1, .., m-1}`.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_SOURCES);
        if m == MAX_SOURCES {
            SourceSet(u32::MAX)
        } else {
            SourceSet((1u32 << m) - 1)
        }
    }

    pub fn singleton(s: usize) -> Self {
        assert!(s < MAX_SOURCES);
        SourceSet(1 << s)
    }

    pub fn from_bits(bits: u32) -> Self {
        SourceSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, s: usize) -> bool {
        s < MAX_SOURCES && self.0 & (1 << s) != 0
    }

    pub fn insert(&mut self, s: usize) {
        assert!(s < MAX_SOURCES);
        self.0 |= 1 << s;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: SourceSet) -> Self {
        SourceSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SourceSet) -> Self {
        SourceSet(self.0 & other.0)
    }

    pub fn difference(self, other: SourceSet) -> Self {
        SourceSet(self.0 & !other.0)
    }

    /// Complement with respect to `{0, .., m-1}`.
    pub fn complement(self, m: usize) -> Self {
        SourceSet::full(m).difference(self)
    }

    pub fn intersects(self, other: SourceSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset(self, other: SourceSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> + Clone {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let s = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(s)
            }
        })
    }

    /// Every subset, including the empty set and `self`, in no particular
    /// order.
    pub fn subsets(self) -> impl Iterator<Item = SourceSet> {
        let full = self.0;
        let mut next = Some(full);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 {
                None
            } else {
                Some((cur - 1) & full)
            };
            Some(SourceSet(cur))
        })
    }

    /// Nonempty subsets ordered by decreasing cardinality, lexicographically
    /// (lowest indices first) within a cardinality.
    pub fn subsets_by_size_desc(self) -> SizeDescSubsets {
        let mut members = [0u8; MAX_SOURCES];
        for (slot, s) in members.iter_mut().zip(self.iter()) {
            *slot = s as u8;
        }
        let n = self.len();
        let mut pick = [0u8; MAX_SOURCES];
        for (i, p) in pick.iter_mut().enumerate().take(n) {
            *p = i as u8;
        }
        SizeDescSubsets {
            members,
            n,
            k: n,
            pick,
            done: n == 0,
        }
    }
}

/// Iterator returned by [`SourceSet::subsets_by_size_desc`].
#[derive(Debug, Clone)]
pub struct SizeDescSubsets {
    members: [u8; MAX_SOURCES],
    n: usize,
    k: usize,
    // positions into `members` of the current combination, increasing
    pick: [u8; MAX_SOURCES],
    done: bool,
}

impl Iterator for SizeDescSubsets {
    type Item = SourceSet;

    fn next(&mut self) -> Option<SourceSet> {
        if self.done {
            return None;
        }
        let (n, k) = (self.n, self.k);
        let current = self.pick[..k]
            .iter()
            .map(|&p| self.members[p as usize] as usize)
            .collect::<SourceSet>();

        // advance to the next k-combination, or drop to k - 1
        match (0..k).rev().find(|&i| (self.pick[i] as usize) < n - k + i) {
            Some(i) => {
                self.pick[i] += 1;
                for j in i + 1..k {
                    self.pick[j] = self.pick[j - 1] + 1;
                }
            }
            None if k > 1 => {
                self.k -= 1;
                for (j, p) in self.pick.iter_mut().enumerate().take(self.k) {
                    *p = j as u8;
                }
            }
            None => self.done = true,
        }
        Some(current)
    }
}

impl FromIterator<usize> for SourceSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = SourceSet::EMPTY;
        for s in iter {
            set.insert(s);
        }
        set
    }
}

impl fmt::Debug for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Formats as `{s1,s3}` using 1-based source names.
impl fmt::Display for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "s{}", s + 1)?;
        }
        f.write_str("}")
    }
}
