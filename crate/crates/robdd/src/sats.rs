use std::collections::BTreeSet;

use crate::manager::{BddManager, BddRef, VarId};

/// Lazily enumerates the satisfying assignments of a diagram over a fixed
/// variable list, in lexicographic order (`false < true`), without
/// duplicates.
pub struct SatAssignments<'a> {
    mgr: &'a BddManager,
    over: Vec<VarId>,
    // Frame `i` holds the node active before variable `over[i]` is decided
    // and the branch currently taken for it.
    stack: Vec<Frame>,
    started: bool,
    done: bool,
}

#[derive(Clone, Copy)]
struct Frame {
    node: BddRef,
    branch: bool,
}

impl BddManager {
    /// Assignments over `over` (which must cover the support of `f`) on which
    /// `f` evaluates to 1. Yielded vectors are aligned with `over` in
    /// ascending variable order; see [`SatAssignments::variables`].
    pub fn sat_assignments(&self, f: BddRef, over: &BTreeSet<VarId>) -> SatAssignments<'_> {
        let support = self.support(f);
        assert!(
            support.is_subset(over),
            "enumeration domain does not cover the support"
        );
        let mut it = SatAssignments {
            mgr: self,
            over: over.iter().copied().collect(),
            stack: Vec::new(),
            started: false,
            done: false,
        };
        if f.is_zero() {
            it.done = true;
        } else {
            it.descend(f);
        }
        it
    }
}

impl SatAssignments<'_> {
    /// The variable list each yielded assignment is aligned with.
    pub fn variables(&self) -> &[VarId] {
        &self.over
    }

    /// Child of `node` when the variable at `depth` takes `value`; unchanged
    /// if the node does not test that variable (the variable is free there).
    fn step(&self, node: BddRef, depth: usize, value: bool) -> BddRef {
        match self.mgr.children(node) {
            Some((var, low, high)) if var == self.over[depth] => {
                if value {
                    high
                } else {
                    low
                }
            }
            _ => node,
        }
    }

    /// Extends the path from the current depth to a full assignment, taking
    /// the lowest live branch at each level. `node` must be non-zero; since
    /// diagrams are reduced, a non-zero node always has a live branch.
    fn descend(&mut self, mut node: BddRef) {
        while self.stack.len() < self.over.len() {
            let depth = self.stack.len();
            let low = self.step(node, depth, false);
            let (branch, next) = if low.is_zero() {
                (true, self.step(node, depth, true))
            } else {
                (false, low)
            };
            debug_assert!(!next.is_zero());
            self.stack.push(Frame { node, branch });
            node = next;
        }
        debug_assert!(node.is_one());
    }

    /// Backtracks to the deepest `false` branch whose `true` side is live and
    /// descends again. Returns false when the enumeration is exhausted.
    fn bump(&mut self) -> bool {
        while let Some(frame) = self.stack.pop() {
            if frame.branch {
                continue;
            }
            let high = self.step(frame.node, self.stack.len(), true);
            if high.is_zero() {
                continue;
            }
            self.stack.push(Frame { node: frame.node, branch: true });
            self.descend(high);
            return true;
        }
        false
    }

    fn bits(&self) -> Vec<bool> {
        self.stack.iter().map(|f| f.branch).collect()
    }
}

impl Iterator for SatAssignments<'_> {
    type Item = Vec<bool>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.bits());
        }
        if self.bump() {
            Some(self.bits())
        } else {
            self.done = true;
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_zero_is_empty() {
        let mgr = BddManager::new();
        let a = mgr.new_var("a");
        let b = mgr.new_var("b");
        let sats: Vec<_> = mgr.sat_assignments(mgr.zero(), &[a, b].into()).collect();
        assert!(sats.is_empty());
    }

    #[test]
    fn literal_over_two_vars() {
        let mgr = BddManager::new();
        let a = mgr.new_var("a");
        let b = mgr.new_var("b");
        let f = mgr.mk_var(a);
        let sats: Vec<_> = mgr.sat_assignments(f, &[a, b].into()).collect();
        assert_eq!(sats, vec![vec![true, false], vec![true, true]]);
    }

    #[test]
    fn tautology_enumerates_every_assignment() {
        let mgr = BddManager::new();
        let a = mgr.new_var("a");
        let b = mgr.new_var("b");
        let sats: Vec<_> = mgr.sat_assignments(mgr.one(), &[a, b].into()).collect();
        assert_eq!(sats.len(), 4);
    }
}
