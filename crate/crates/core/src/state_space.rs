use crate::params::ModelParams;

/// Contiguous block of states `(level, lowest..=capacity)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub offset: usize,
    pub lowest: usize,
}

/// The reachable states `(i, j)`: level 0 covers `0..=K`, level `i >= 1`
/// covers `n_i..=K`. States are ordered level-major, then by job count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    capacity: usize,
    levels: Vec<LevelRange>,
    len: usize,
}

impl StateSpace {
    pub fn new(m: &ModelParams) -> Self {
        let mut levels = Vec::with_capacity(m.k + 1);
        let mut offset = 0;
        for i in 0..=m.k {
            let lowest = if i == 0 { 0 } else { m.servers_at(i) };
            levels.push(LevelRange { offset, lowest });
            offset += m.capacity + 1 - lowest;
        }
        StateSpace {
            capacity: m.capacity,
            levels,
            len: offset,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of levels, `k + 1`.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, i: usize) -> LevelRange {
        self.levels[i]
    }

    /// Linear indices of level `i`.
    pub fn level_indices(&self, i: usize) -> std::ops::Range<usize> {
        let r = self.levels[i];
        r.offset..r.offset + self.capacity + 1 - r.lowest
    }

    pub fn index(&self, level: usize, jobs: usize) -> Option<usize> {
        let r = self.levels.get(level)?;
        if jobs < r.lowest || jobs > self.capacity {
            return None;
        }
        Some(r.offset + jobs - r.lowest)
    }

    /// Iterates `(level, jobs)` in linear-index order.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(move |(i, r)| (r.lowest..=self.capacity).map(move |j| (i, j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n0: usize, k: usize, cap: usize) -> StateSpace {
        StateSpace::new(&ModelParams::new(1.0, 1.0, 1.0, 0.0, n0, k, cap))
    }

    #[test]
    fn small_topology_counts() {
        let s = space(2, 2, 7);
        assert_eq!(s.len(), 17);
        assert_eq!(s.level_indices(0).len(), 8);
        assert_eq!(s.level_indices(1).len(), 5);
        assert_eq!(s.level(1).lowest, 3);
        assert_eq!(s.level_indices(2).len(), 4);
        assert_eq!(s.level(2).lowest, 4);
    }

    #[test]
    fn minimal_loss_system() {
        let s = space(1, 0, 1);
        assert_eq!(s.states().collect::<Vec<_>>(), vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn reference_defaults_size() {
        // 251 + sum_{i=1..50} (251 - (110 + i))
        let expected: usize = 251 + (1..=50).map(|i| 251 - (110 + i)).sum::<usize>();
        assert_eq!(expected, 6026);
        assert_eq!(space(110, 50, 250).len(), 6026);
    }

    #[test]
    fn index_is_bijective() {
        let s = space(3, 4, 12);
        for (idx, (i, j)) in s.states().enumerate() {
            assert_eq!(s.index(i, j), Some(idx));
        }
        assert_eq!(s.index(1, 3), None);
        assert_eq!(s.index(0, 13), None);
        assert_eq!(s.index(5, 12), None);
    }
}
