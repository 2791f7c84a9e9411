use std::collections::BTreeMap;
use std::fmt;

/// A multiset of agent states.
///
/// Stored sparsely and ordered by state, so equality and hashing do not
/// depend on insertion history. Zero multiplicities are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration<S: Ord> {
    counts: BTreeMap<S, u64>,
    size: u64,
}

impl<S: Ord> Default for Configuration<S> {
    fn default() -> Self {
        Configuration {
            counts: BTreeMap::new(),
            size: 0,
        }
    }
}

impl<S: Ord + Clone> Configuration<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// `k` agents in state `s`.
    pub fn uniform(s: S, k: u64) -> Self {
        let mut c = Self::new();
        c.add(s, k);
        c
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (S, u64)>) -> Self {
        let mut c = Self::new();
        for (s, k) in counts {
            c.add(s, k);
        }
        c
    }

    pub fn get(&self, s: &S) -> u64 {
        self.counts.get(s).copied().unwrap_or(0)
    }

    /// Number of agents.
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn add(&mut self, s: S, k: u64) {
        if k > 0 {
            *self.counts.entry(s).or_insert(0) += k;
            self.size += k;
        }
    }

    /// Removes `k` agents in state `s`; returns false (and leaves the
    /// configuration untouched) if fewer than `k` are present.
    pub fn remove(&mut self, s: &S, k: u64) -> bool {
        match self.counts.get_mut(s) {
            Some(c) if *c >= k => {
                *c -= k;
                if *c == 0 {
                    self.counts.remove(s);
                }
                self.size -= k;
                true
            }
            _ => k == 0,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = &S> {
        self.counts.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, u64)> {
        self.counts.iter().map(|(s, &k)| (s, k))
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// Image of the multiset under `f`.
    pub fn map<T: Ord + Clone>(&self, mut f: impl FnMut(&S) -> T) -> Configuration<T> {
        let mut out = Configuration::new();
        for (s, k) in self.iter() {
            out.add(f(s), k);
        }
        out
    }

    /// The state of the `index`-th agent in state order; `index < size`.
    pub(crate) fn nth_agent(&self, mut index: u64) -> &S {
        for (s, &k) in &self.counts {
            if index < k {
                return s;
            }
            index -= k;
        }
        panic!("agent index out of range")
    }
}

impl<S: Ord + fmt::Debug> fmt::Debug for Configuration<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, (s, k)) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}·{s:?}")?;
        }
        f.write_str("⟩")
    }
}

impl<S: Ord + Clone> FromIterator<S> for Configuration<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut c = Configuration::new();
        for s in iter {
            c.add(s, 1);
        }
        c
    }
}
