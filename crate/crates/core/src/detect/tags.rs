use std::collections::HashSet;

/// Ineffectual bits of the micro-op cache, keyed by static pc. Capacity is not modeled.
#[derive(Debug, Clone, Default)]
pub struct TagStore {
    tagged: HashSet<u64>,
}

impl TagStore {
    pub fn new() -> Self {
        TagStore::default()
    }

    pub fn is_tagged(&self, pc: u64) -> bool {
        self.tagged.contains(&pc)
    }

    pub fn len(&self) -> usize {
        self.tagged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tagged.is_empty()
    }

    pub fn set(&mut self, pc: u64) {
        self.tagged.insert(pc);
    }

    pub fn clear_pc(&mut self, pc: u64) {
        self.tagged.remove(&pc);
    }

    pub fn reset_all(&mut self) {
        self.tagged.clear();
    }

    pub fn reset_pcs<I: IntoIterator<Item = u64>>(&mut self, pcs: I) {
        for pc in pcs {
            self.tagged.remove(&pc);
        }
    }

    /// Applies one identification pass: instances found effectual in the analyzed
    /// window clear their pc, then every tagged instance sets its pc.
    pub fn apply(&mut self, cleared: &[u64], tagged: &[u64]) {
        for pc in cleared {
            self.tagged.remove(pc);
        }
        for &pc in tagged {
            self.tagged.insert(pc);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagging_sets_bit_and_reset_all_empties() {
        let mut t = TagStore::new();
        t.apply(&[], &[0x40]);
        assert!(t.is_tagged(0x40));
        t.reset_all();
        assert!(t.is_empty());
    }

    #[test]
    fn tagged_instance_wins_within_a_pass() {
        let mut t = TagStore::new();
        t.apply(&[0x10], &[0x10]);
        assert!(t.is_tagged(0x10));
        t.apply(&[0x10], &[]);
        assert!(!t.is_tagged(0x10));
    }
}
