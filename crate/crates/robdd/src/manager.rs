use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::tables::{OpCache, UniqueTable};
use std::fmt;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

/// Position of a variable in the global diagram order (0-based).
///
/// The total order on `VarId` is the diagram order; every diagram in one
/// manager shares it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

/// Handle to a node in a manager's unique table.
///
/// Handles are canonical: two handles from the same manager are equal iff
/// the functions they denote are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BddRef {
    idx: u32,
    mgr: u32,
}

impl BddRef {
    pub fn is_zero(self) -> bool {
        self.idx == 0
    }

    pub fn is_one(self) -> bool {
        self.idx == 1
    }

    pub fn is_terminal(self) -> bool {
        self.idx < 2
    }
}

/// Binary boolean connectives supported by [`BddManager::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Implies,
    Iff,
}

/// Decision node. Terminals use `var = u32::MAX` so the order position of a
/// terminal compares greater than every decision variable.
#[derive(Debug, Clone, Copy)]
struct Node {
    var: u32,
    low: u32,
    high: u32,
}

const TERMINAL_VAR: u32 = u32::MAX;

// Operation-cache opcodes; zero is reserved for the free slot sentinel.
fn op_code(op: BinOp) -> u8 {
    match op {
        BinOp::And => 1,
        BinOp::Or => 2,
        BinOp::Xor => 3,
        BinOp::Implies => 4,
        BinOp::Iff => 5,
    }
}
const OP_NOT: u8 = 6;
const OP_EXISTS: u8 = 7;
const OP_FORALL: u8 = 8;
const OP_RESTRICT: u8 = 9;

static NEXT_MANAGER_ID: AtomicU32 = AtomicU32::new(0);

/// The node store: unique table, operation cache and variable registry.
pub struct BddManager {
    id: u32,
    nodes: RefCell<Vec<Node>>,
    unique: RefCell<UniqueTable>,
    cache: RefCell<OpCache>,
    names: RefCell<Vec<String>>,
    by_name: RefCell<HashMap<String, VarId>>,
}

impl Default for BddManager {
    fn default() -> Self {
        Self::new()
    }
}

impl BddManager {
    pub fn new() -> Self {
        let nodes = vec![
            Node { var: TERMINAL_VAR, low: 0, high: 0 },
            Node { var: TERMINAL_VAR, low: 1, high: 1 },
        ];
        BddManager {
            id: NEXT_MANAGER_ID.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(nodes),
            unique: RefCell::new(UniqueTable::new()),
            cache: RefCell::new(OpCache::new()),
            names: RefCell::new(Vec::new()),
            by_name: RefCell::new(HashMap::new()),
        }
    }

    /// Registers the next variable in the order. Names must be unique.
    pub fn new_var(&self, name: impl Into<String>) -> VarId {
        let name = name.into();
        let mut names = self.names.borrow_mut();
        let v = VarId(names.len() as u32);
        let prev = self.by_name.borrow_mut().insert(name.clone(), v);
        assert!(prev.is_none(), "duplicate variable name {name:?}");
        names.push(name);
        v
    }

    pub fn num_vars(&self) -> usize {
        self.names.borrow().len()
    }

    pub fn var_name(&self, v: VarId) -> String {
        self.names.borrow()[v.0 as usize].clone()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.borrow().get(name).copied()
    }

    /// Total number of nodes in the unique table, terminals included.
    pub fn num_nodes(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn zero(&self) -> BddRef {
        self.wrap(0)
    }

    pub fn one(&self) -> BddRef {
        self.wrap(1)
    }

    pub fn constant(&self, b: bool) -> BddRef {
        if b {
            self.one()
        } else {
            self.zero()
        }
    }

    fn wrap(&self, idx: u32) -> BddRef {
        BddRef { idx, mgr: self.id }
    }

    fn own(&self, f: BddRef) -> u32 {
        assert!(f.mgr == self.id, "BddRef from a different manager");
        f.idx
    }

    fn node(&self, idx: u32) -> Node {
        self.nodes.borrow()[idx as usize]
    }

    /// Hash-consing constructor; maintains reduction (`low == high` collapses)
    /// and uniqueness.
    fn mk(&self, var: u32, low: u32, high: u32) -> u32 {
        if low == high {
            return low;
        }
        debug_assert!(var < self.node(low).var && var < self.node(high).var);
        if self.unique.borrow().needs_grow() {
            let nodes = self.nodes.borrow();
            let count = nodes.len() as u32;
            self.unique.borrow_mut().grow(count, |i| {
                let n = nodes[i as usize];
                (n.var, n.low, n.high)
            });
        }
        let slot = {
            let nodes = self.nodes.borrow();
            match self.unique.borrow().lookup(var, low, high, |i| {
                let n = nodes[i as usize];
                (n.var, n.low, n.high)
            }) {
                Ok(idx) => return idx,
                Err(slot) => slot,
            }
        };
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node { var, low, high });
        self.unique.borrow_mut().insert_at(slot, idx);
        idx
    }

    /// The diagram of the literal `v`.
    pub fn mk_var(&self, v: VarId) -> BddRef {
        assert!((v.0 as usize) < self.num_vars(), "unregistered VarId {v:?}");
        self.wrap(self.mk(v.0, 0, 1))
    }

    pub fn not(&self, f: BddRef) -> BddRef {
        let f = self.own(f);
        self.wrap(self.not_rec(f))
    }

    fn not_rec(&self, f: u32) -> u32 {
        if f < 2 {
            return 1 - f;
        }
        let key = OpCache::key(OP_NOT, f, 0);
        if let Some(r) = self.cache.borrow().get(key) {
            return r;
        }
        let n = self.node(f);
        let r = self.mk(n.var, self.not_rec(n.low), self.not_rec(n.high));
        self.cache.borrow_mut().put(key, r);
        r
    }

    /// Pointwise binary connective; the result is reduced and ordered.
    pub fn apply(&self, op: BinOp, f: BddRef, g: BddRef) -> BddRef {
        let f = self.own(f);
        let g = self.own(g);
        self.wrap(self.apply_rec(op, f, g))
    }

    pub fn and(&self, f: BddRef, g: BddRef) -> BddRef {
        self.apply(BinOp::And, f, g)
    }

    pub fn or(&self, f: BddRef, g: BddRef) -> BddRef {
        self.apply(BinOp::Or, f, g)
    }

    pub fn xor(&self, f: BddRef, g: BddRef) -> BddRef {
        self.apply(BinOp::Xor, f, g)
    }

    pub fn implies(&self, f: BddRef, g: BddRef) -> BddRef {
        self.apply(BinOp::Implies, f, g)
    }

    pub fn iff(&self, f: BddRef, g: BddRef) -> BddRef {
        self.apply(BinOp::Iff, f, g)
    }

    fn apply_terminal(&self, op: BinOp, f: u32, g: u32) -> Option<u32> {
        match op {
            BinOp::And => {
                if f == 0 || g == 0 {
                    Some(0)
                } else if f == 1 {
                    Some(g)
                } else if g == 1 || f == g {
                    Some(f)
                } else {
                    None
                }
            }
            BinOp::Or => {
                if f == 1 || g == 1 {
                    Some(1)
                } else if f == 0 {
                    Some(g)
                } else if g == 0 || f == g {
                    Some(f)
                } else {
                    None
                }
            }
            BinOp::Xor => {
                if f == g {
                    Some(0)
                } else if f == 0 {
                    Some(g)
                } else if g == 0 {
                    Some(f)
                } else if f == 1 {
                    Some(self.not_rec(g))
                } else if g == 1 {
                    Some(self.not_rec(f))
                } else {
                    None
                }
            }
            BinOp::Implies => {
                if f == 0 || g == 1 || f == g {
                    Some(1)
                } else if f == 1 {
                    Some(g)
                } else if g == 0 {
                    Some(self.not_rec(f))
                } else {
                    None
                }
            }
            BinOp::Iff => {
                if f == g {
                    Some(1)
                } else if f == 1 {
                    Some(g)
                } else if g == 1 {
                    Some(f)
                } else if f == 0 {
                    Some(self.not_rec(g))
                } else if g == 0 {
                    Some(self.not_rec(f))
                } else {
                    None
                }
            }
        }
    }

    fn apply_rec(&self, op: BinOp, f: u32, g: u32) -> u32 {
        if let Some(r) = self.apply_terminal(op, f, g) {
            return r;
        }
        // Commutative ops get a normalized cache key.
        let (a, b) = match op {
            BinOp::Implies => (f, g),
            _ => (f.min(g), f.max(g)),
        };
        let key = OpCache::key(op_code(op), a, b);
        if let Some(r) = self.cache.borrow().get(key) {
            return r;
        }
        let nf = self.node(f);
        let ng = self.node(g);
        let var = nf.var.min(ng.var);
        let (f0, f1) = if nf.var == var { (nf.low, nf.high) } else { (f, f) };
        let (g0, g1) = if ng.var == var { (ng.low, ng.high) } else { (g, g) };
        let r = self.mk(var, self.apply_rec(op, f0, g0), self.apply_rec(op, f1, g1));
        self.cache.borrow_mut().put(key, r);
        r
    }

    /// Conjunction of positive literals; used as the cache token for
    /// quantifier variable sets.
    fn cube(&self, vars: &BTreeSet<VarId>) -> u32 {
        let mut r = 1;
        for v in vars.iter().rev() {
            assert!((v.0 as usize) < self.num_vars(), "unregistered VarId {v:?}");
            r = self.mk(v.0, 0, r);
        }
        r
    }

    /// Existential quantification over a set of variables.
    pub fn exists(&self, f: BddRef, vars: &BTreeSet<VarId>) -> BddRef {
        let f = self.own(f);
        let cube = self.cube(vars);
        self.wrap(self.exists_rec(f, cube))
    }

    fn exists_rec(&self, f: u32, cube: u32) -> u32 {
        if f < 2 || cube == 1 {
            return f;
        }
        let key = OpCache::key(OP_EXISTS, f, cube);
        if let Some(r) = self.cache.borrow().get(key) {
            return r;
        }
        let nf = self.node(f);
        let nc = self.node(cube);
        let r = if nc.var < nf.var {
            self.exists_rec(f, nc.high)
        } else if nc.var == nf.var {
            let lo = self.exists_rec(nf.low, nc.high);
            let hi = self.exists_rec(nf.high, nc.high);
            self.apply_rec(BinOp::Or, lo, hi)
        } else {
            self.mk(nf.var, self.exists_rec(nf.low, cube), self.exists_rec(nf.high, cube))
        };
        self.cache.borrow_mut().put(key, r);
        r
    }

    /// Universal quantification over a set of variables.
    pub fn forall(&self, f: BddRef, vars: &BTreeSet<VarId>) -> BddRef {
        let f = self.own(f);
        let cube = self.cube(vars);
        self.wrap(self.forall_rec(f, cube))
    }

    fn forall_rec(&self, f: u32, cube: u32) -> u32 {
        if f < 2 || cube == 1 {
            return f;
        }
        let key = OpCache::key(OP_FORALL, f, cube);
        if let Some(r) = self.cache.borrow().get(key) {
            return r;
        }
        let nf = self.node(f);
        let nc = self.node(cube);
        let r = if nc.var < nf.var {
            self.forall_rec(f, nc.high)
        } else if nc.var == nf.var {
            let lo = self.forall_rec(nf.low, nc.high);
            let hi = self.forall_rec(nf.high, nc.high);
            self.apply_rec(BinOp::And, lo, hi)
        } else {
            self.mk(nf.var, self.forall_rec(nf.low, cube), self.forall_rec(nf.high, cube))
        };
        self.cache.borrow_mut().put(key, r);
        r
    }

    /// Variable substitution along a bijection on variables.
    ///
    /// `sigma`'s range must not meet the part of `f`'s support that is not
    /// renamed. When the induced map on `f`'s support is order-preserving the
    /// diagram is relabeled structurally; otherwise the substitution is
    /// realized by conjoining equality constraints over fresh variables and
    /// quantifying the originals out.
    pub fn rename(&self, f: BddRef, sigma: &BTreeMap<VarId, VarId>) -> BddRef {
        let fi = self.own(f);
        let mut range = BTreeSet::new();
        for (u, v) in sigma {
            assert!((u.0 as usize) < self.num_vars() && (v.0 as usize) < self.num_vars());
            assert!(range.insert(*v), "non-injective renaming (duplicate target {v:?})");
        }
        let support = self.support(f);
        for v in &support {
            if range.contains(v) && !sigma.contains_key(v) {
                panic!(
                    "renaming target {} overlaps the non-renamed support",
                    self.var_name(*v)
                );
            }
        }
        // Order-compatible iff the full map on the support is strictly
        // monotone in order positions (injectivity on support follows).
        let mapped: Vec<VarId> = support
            .iter()
            .map(|v| *sigma.get(v).unwrap_or(v))
            .collect();
        let monotone = mapped.windows(2).all(|w| w[0] < w[1]);
        if monotone {
            let mut memo = HashMap::new();
            return self.wrap(self.relabel_rec(fi, sigma, &mut memo));
        }
        // General route: ∃ dom ( f ∧ ⋀ u ↔ σ(u) ).
        let mut g = fi;
        let mut dom = BTreeSet::new();
        for (u, v) in sigma {
            if !support.contains(u) {
                continue;
            }
            dom.insert(*u);
            let eq = self.apply_rec(BinOp::Iff, self.mk(u.0, 0, 1), self.mk(v.0, 0, 1));
            g = self.apply_rec(BinOp::And, g, eq);
        }
        let cube = self.cube(&dom);
        self.wrap(self.exists_rec(g, cube))
    }

    fn relabel_rec(
        &self,
        f: u32,
        sigma: &BTreeMap<VarId, VarId>,
        memo: &mut HashMap<u32, u32>,
    ) -> u32 {
        if f < 2 {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let n = self.node(f);
        let var = sigma.get(&VarId(n.var)).map_or(n.var, |v| v.0);
        let lo = self.relabel_rec(n.low, sigma, memo);
        let hi = self.relabel_rec(n.high, sigma, memo);
        let r = self.mk(var, lo, hi);
        memo.insert(f, r);
        r
    }

    /// Generalized cofactor (constrain): the result agrees with `f` wherever
    /// `care` holds; off the care set the value is unspecified but
    /// deterministic given `(f, care)`.
    pub fn restrict(&self, f: BddRef, care: BddRef) -> BddRef {
        let f = self.own(f);
        let care = self.own(care);
        assert!(care != 0, "restrict against an empty care set");
        self.wrap(self.restrict_rec(f, care))
    }

    fn restrict_rec(&self, f: u32, care: u32) -> u32 {
        debug_assert!(care != 0);
        if care == 1 || f < 2 {
            return f;
        }
        if f == care {
            return 1;
        }
        let key = OpCache::key(OP_RESTRICT, f, care);
        if let Some(r) = self.cache.borrow().get(key) {
            return r;
        }
        let nf = self.node(f);
        let nc = self.node(care);
        let var = nf.var.min(nc.var);
        let (f0, f1) = if nf.var == var { (nf.low, nf.high) } else { (f, f) };
        let (c0, c1) = if nc.var == var { (nc.low, nc.high) } else { (care, care) };
        let r = if c0 == 0 {
            self.restrict_rec(f1, c1)
        } else if c1 == 0 {
            self.restrict_rec(f0, c0)
        } else {
            self.mk(var, self.restrict_rec(f0, c0), self.restrict_rec(f1, c1))
        };
        self.cache.borrow_mut().put(key, r);
        r
    }

    pub fn eval(&self, f: BddRef, assignment: impl Fn(VarId) -> bool) -> bool {
        let mut idx = self.own(f);
        loop {
            if idx < 2 {
                return idx == 1;
            }
            let n = self.node(idx);
            idx = if assignment(VarId(n.var)) { n.high } else { n.low };
        }
    }

    pub fn support(&self, f: BddRef) -> BTreeSet<VarId> {
        let f = self.own(f);
        let mut seen = BTreeSet::new();
        let mut out = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(idx) = stack.pop() {
            if idx < 2 || !seen.insert(idx) {
                continue;
            }
            let n = self.node(idx);
            out.insert(VarId(n.var));
            stack.push(n.low);
            stack.push(n.high);
        }
        out
    }

    /// Number of decision (non-terminal) nodes reachable from `f`.
    pub fn decision_node_count(&self, f: BddRef) -> usize {
        let f = self.own(f);
        let mut seen = BTreeSet::new();
        let mut stack = vec![f];
        let mut count = 0;
        while let Some(idx) = stack.pop() {
            if idx < 2 || !seen.insert(idx) {
                continue;
            }
            count += 1;
            let n = self.node(idx);
            stack.push(n.low);
            stack.push(n.high);
        }
        count
    }

    /// Counts satisfying assignments over `over` (a superset of the support).
    /// `None` on u128 overflow.
    pub fn sat_count(&self, f: BddRef, over: &BTreeSet<VarId>) -> Option<u128> {
        let fi = self.own(f);
        let support = self.support(f);
        assert!(
            support.is_subset(over),
            "sat_count domain does not cover the support"
        );
        let positions: Vec<u32> = over.iter().map(|v| v.0).collect();
        let mut memo: HashMap<(u32, usize), u128> = HashMap::new();
        self.sat_count_rec(fi, 0, &positions, &mut memo)
    }

    fn sat_count_rec(
        &self,
        f: u32,
        pos: usize,
        positions: &[u32],
        memo: &mut HashMap<(u32, usize), u128>,
    ) -> Option<u128> {
        if f == 0 {
            return Some(0);
        }
        if pos == positions.len() {
            debug_assert!(f == 1);
            return Some(1);
        }
        if let Some(&c) = memo.get(&(f, pos)) {
            return Some(c);
        }
        let n = self.node(f);
        let c = if n.var == positions[pos] {
            let lo = self.sat_count_rec(n.low, pos + 1, positions, memo)?;
            let hi = self.sat_count_rec(n.high, pos + 1, positions, memo)?;
            lo.checked_add(hi)?
        } else {
            debug_assert!(n.var > positions[pos]);
            let sub = self.sat_count_rec(f, pos + 1, positions, memo)?;
            sub.checked_mul(2)?
        };
        memo.insert((f, pos), c);
        Some(c)
    }

    /// Structural scan backing the reduction/order invariants: no node with
    /// `low == high`, no duplicate `(var, low, high)`, and children always
    /// deeper in the order.
    pub fn check_integrity(&self) {
        let nodes = self.nodes.borrow();
        let mut seen = HashMap::new();
        for (idx, n) in nodes.iter().enumerate().skip(2) {
            assert!(n.low != n.high, "unreduced node {idx}");
            assert!(
                n.var < nodes[n.low as usize].var && n.var < nodes[n.high as usize].var,
                "order violation at node {idx}"
            );
            let prev = seen.insert((n.var, n.low, n.high), idx);
            assert!(prev.is_none(), "duplicate node {idx}");
        }
    }

    /// DOT-format dump of the diagram rooted at `f`, for debugging.
    pub fn to_dot(&self, f: BddRef) -> String {
        let f = self.own(f);
        let mut out = String::from("digraph bdd {\n");
        out.push_str("  node0 [label=\"0\", shape=box];\n");
        out.push_str("  node1 [label=\"1\", shape=box];\n");
        let mut seen = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(idx) = stack.pop() {
            if idx < 2 || !seen.insert(idx) {
                continue;
            }
            let n = self.node(idx);
            let name = self.var_name(VarId(n.var));
            let _ = writeln!(out, "  node{idx} [label=\"{name}\"];");
            let _ = writeln!(out, "  node{idx} -> node{} [style=dashed];", n.low);
            let _ = writeln!(out, "  node{idx} -> node{};", n.high);
            stack.push(n.low);
            stack.push(n.high);
        }
        out.push_str("}\n");
        out
    }

    /// Decomposes a decision node into `(variable, low, high)`; `None` for
    /// terminals.
    pub fn children(&self, f: BddRef) -> Option<(VarId, BddRef, BddRef)> {
        let idx = self.own(f);
        if idx < 2 {
            return None;
        }
        let n = self.node(idx);
        Some((VarId(n.var), self.wrap(n.low), self.wrap(n.high)))
    }
}

impl fmt::Debug for BddManager {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BddManager")
            .field("vars", &self.num_vars())
            .field("nodes", &self.num_nodes())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_vars() -> (BddManager, BddRef, BddRef, BddRef) {
        let mgr = BddManager::new();
        let a = mgr.mk_var(mgr.new_var("a"));
        let b = mgr.mk_var(mgr.new_var("b"));
        let c = mgr.mk_var(mgr.new_var("c"));
        (mgr, a, b, c)
    }

    #[test]
    fn literal_semantics() {
        let (mgr, a, _, _) = three_vars();
        assert!(mgr.eval(a, |v| v == VarId(0)));
        assert!(!mgr.eval(a, |_| false));
        // Canonicity: the same literal twice is the same handle.
        assert_eq!(a, mgr.mk_var(VarId(0)));
    }

    #[test]
    fn contradiction_and_involution() {
        let (mgr, a, _, _) = three_vars();
        assert!(mgr.and(a, mgr.not(a)).is_zero());
        assert!(mgr.or(a, mgr.not(a)).is_one());
        assert_eq!(mgr.not(mgr.not(a)), a);
        assert!(mgr.not(mgr.zero()).is_one());
    }

    #[test]
    fn xor_node_count_ignores_third_variable() {
        // a xor b over the order a < b < c: exactly 3 decision nodes.
        let (mgr, a, b, _) = three_vars();
        let f = mgr.xor(a, b);
        assert_eq!(mgr.decision_node_count(f), 3);
        assert!(!mgr.support(f).contains(&VarId(2)));
    }

    #[test]
    fn quantification_basics() {
        let (mgr, a, b, _) = three_vars();
        let ab = mgr.and(a, b);
        assert_eq!(mgr.exists(ab, &[VarId(0)].into()), b);
        assert_eq!(mgr.exists(ab, &BTreeSet::new()), ab);
        assert!(mgr.forall(a, &[VarId(0)].into()).is_zero());
        assert!(mgr.forall(mgr.one(), &[VarId(0), VarId(1)].into()).is_one());
    }

    #[test]
    fn rename_round_trip() {
        let (mgr, a, b, _) = three_vars();
        let a2 = mgr.new_var("a'");
        let f = mgr.or(a, b);
        let fwd = mgr.rename(f, &[(VarId(0), a2)].into());
        assert_eq!(fwd, mgr.or(mgr.mk_var(a2), b));
        let back = mgr.rename(fwd, &[(a2, VarId(0))].into());
        assert_eq!(back, f);
    }

    #[test]
    #[should_panic(expected = "non-injective")]
    fn rename_rejects_non_injective() {
        let (mgr, a, b, _) = three_vars();
        let f = mgr.and(a, b);
        let _ = mgr.rename(f, &[(VarId(0), VarId(2)), (VarId(1), VarId(2))].into());
    }

    #[test]
    #[should_panic(expected = "overlaps")]
    fn rename_rejects_overlap() {
        let (mgr, a, b, _) = three_vars();
        let f = mgr.and(a, b);
        // Maps a onto b while b stays in the support.
        let _ = mgr.rename(f, &[(VarId(0), VarId(1))].into());
    }

    #[test]
    fn restrict_agrees_on_care_set() {
        let (mgr, a, b, _) = three_vars();
        let f = mgr.and(a, b);
        assert_eq!(mgr.restrict(f, mgr.one()), f);
        let r = mgr.restrict(f, b);
        // Wherever b holds, r must equal a ∧ b, i.e. a.
        for bits in 0..4u8 {
            let assign = |v: VarId| bits & (1 << v.0) != 0;
            if assign(VarId(1)) {
                assert_eq!(mgr.eval(r, assign), mgr.eval(f, assign));
            }
        }
    }

    #[test]
    #[should_panic(expected = "different manager")]
    fn manager_mismatch_panics() {
        let (mgr, a, _, _) = three_vars();
        let other = BddManager::new();
        let x = other.mk_var(other.new_var("x"));
        let _ = mgr.and(a, x);
    }

    #[test]
    fn sat_count_small() {
        let (mgr, a, b, _) = three_vars();
        let over: BTreeSet<VarId> = [VarId(0), VarId(1), VarId(2)].into();
        assert_eq!(mgr.sat_count(mgr.zero(), &over), Some(0));
        assert_eq!(mgr.sat_count(mgr.one(), &over), Some(8));
        assert_eq!(mgr.sat_count(mgr.and(a, b), &over), Some(2));
    }
}
