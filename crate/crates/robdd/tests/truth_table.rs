//! Cross-checks every diagram operation against an independent truth-table
//! evaluator. The oracle side never touches diagram internals: functions are
//! plain bitmask tables indexed by assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use robdd::{BddManager, BddRef, BinOp, VarId};

/// A function over `n` variables as a table: bit `a` of `bits` is the value
/// on the assignment whose variable `j` equals bit `j` of `a`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Table {
    n: u32,
    bits: u64,
}

impl Table {
    fn size(self) -> u32 {
        1 << self.n
    }

    fn get(self, a: u32) -> bool {
        self.bits >> a & 1 == 1
    }

    fn var(n: u32, j: u32) -> Table {
        let mut bits = 0;
        for a in 0..1u64 << n {
            if a >> j & 1 == 1 {
                bits |= 1 << a;
            }
        }
        Table { n, bits }
    }

    fn constant(n: u32, b: bool) -> Table {
        let mask = if n == 6 { u64::MAX } else { (1u64 << (1 << n)) - 1 };
        Table { n, bits: if b { mask } else { 0 } }
    }

    fn op(self, o: BinOp, other: Table) -> Table {
        assert_eq!(self.n, other.n);
        let mut out = Table::constant(self.n, false);
        for a in 0..self.size() {
            let v = match o {
                BinOp::And => self.get(a) && other.get(a),
                BinOp::Or => self.get(a) || other.get(a),
                BinOp::Xor => self.get(a) != other.get(a),
                BinOp::Implies => !self.get(a) || other.get(a),
                BinOp::Iff => self.get(a) == other.get(a),
            };
            if v {
                out.bits |= 1 << a;
            }
        }
        out
    }

    fn not(self) -> Table {
        Table { n: self.n, bits: !self.bits & Table::constant(self.n, true).bits }
    }

    /// Iterated single-variable quantification, `or` for ∃ and `and` for ∀.
    fn quantify(self, vars: &[u32], existential: bool) -> Table {
        let mut out = Table::constant(self.n, false);
        for a in 0..self.size() {
            let mut acc = existential == false;
            // Walk every assignment to `vars` with the rest fixed from `a`.
            for choice in 0..1u32 << vars.len() {
                let mut b = a;
                for (k, &v) in vars.iter().enumerate() {
                    b = (b & !(1 << v)) | ((choice >> k & 1) << v);
                }
                if existential {
                    acc = acc || self.get(b);
                } else {
                    acc = acc && self.get(b);
                }
            }
            if acc {
                out.bits |= 1 << a;
            }
        }
        out
    }

    fn count(self) -> u32 {
        self.bits.count_ones()
    }
}

fn build(mgr: &BddManager, vars: &[VarId], t: Table) -> BddRef {
    // Disjunction of minterm cubes; deliberately routed through `apply` so
    // that construction itself exercises the operations under test.
    let mut f = mgr.zero();
    for a in 0..t.size() {
        if !t.get(a) {
            continue;
        }
        let mut cube = mgr.one();
        for (j, &v) in vars.iter().enumerate() {
            let lit = if a >> j & 1 == 1 { mgr.mk_var(v) } else { mgr.not(mgr.mk_var(v)) };
            cube = mgr.and(cube, lit);
        }
        f = mgr.or(f, cube);
    }
    f
}

fn pointwise_equal(mgr: &BddManager, f: BddRef, vars: &[VarId], t: Table) -> bool {
    (0..t.size()).all(|a| {
        let assign = |v: VarId| {
            let j = vars.iter().position(|&x| x == v).unwrap();
            a >> j & 1 == 1
        };
        mgr.eval(f, assign) == t.get(a)
    })
}

fn fresh(n: u32) -> (BddManager, Vec<VarId>) {
    let mgr = BddManager::new();
    let vars = (0..n).map(|j| mgr.new_var(format!("x{j}"))).collect();
    (mgr, vars)
}

/// Deterministic PRNG so frozen expectations stay frozen.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 16
    }
}

#[test]
fn exhaustive_three_vars_all_function_pairs() {
    // All 256 functions of 3 variables, all pairs, all binary connectives.
    let (mgr, vars) = fresh(3);
    let tables: Vec<Table> = (0..256).map(|bits| Table { n: 3, bits }).collect();
    let built: Vec<BddRef> = tables.iter().map(|&t| build(&mgr, &vars, t)).collect();
    for (i, &f) in built.iter().enumerate() {
        assert!(pointwise_equal(&mgr, f, &vars, tables[i]));
        assert!(pointwise_equal(&mgr, mgr.not(f), &vars, tables[i].not()));
        for (j, &g) in built.iter().enumerate() {
            for op in [BinOp::And, BinOp::Or, BinOp::Xor, BinOp::Implies, BinOp::Iff] {
                let r = mgr.apply(op, f, g);
                assert!(pointwise_equal(&mgr, r, &vars, tables[i].op(op, tables[j])));
            }
        }
    }
    // Canonicity across the whole run: equal tables iff equal handles.
    for i in 0..built.len() {
        for j in 0..built.len() {
            assert_eq!(tables[i] == tables[j], built[i] == built[j]);
        }
    }
    mgr.check_integrity();
}

#[test]
fn quantifiers_match_iterated_cofactors_over_four_vars() {
    let (mgr, vars) = fresh(4);
    let mut rng = Lcg(0x5eed);
    for _ in 0..300 {
        let t = Table { n: 4, bits: rng.next() & 0xffff };
        let f = build(&mgr, &vars, t);
        for subset in 0..16u32 {
            let chosen: Vec<u32> = (0..4).filter(|j| subset >> j & 1 == 1).collect();
            let set: BTreeSet<VarId> = chosen.iter().map(|&j| vars[j as usize]).collect();
            let ex = mgr.exists(f, &set);
            let fa = mgr.forall(f, &set);
            assert!(pointwise_equal(&mgr, ex, &vars, t.quantify(&chosen, true)));
            assert!(pointwise_equal(&mgr, fa, &vars, t.quantify(&chosen, false)));
            // ∀ is the dual of ∃, checked as identical handles.
            assert_eq!(fa, mgr.not(mgr.exists(mgr.not(f), &set)));
        }
        // ∃ over everything is the satisfiability verdict.
        let all: BTreeSet<VarId> = vars.iter().copied().collect();
        assert_eq!(mgr.exists(f, &all).is_one(), t.bits != 0);
    }
    mgr.check_integrity();
}

#[test]
fn rename_matches_substitution_definition() {
    // Rename over a 3-variable relation, checked pointwise: the renamed
    // function at s equals the original at s ∘ sigma.
    let (mgr, _) = fresh(0);
    let a = mgr.new_var("a");
    let b = mgr.new_var("b");
    let c = mgr.new_var("c");
    let a2 = mgr.new_var("a'");
    let b2 = mgr.new_var("b'");
    let all = [a, b, c, a2, b2];
    let mut rng = Lcg(7);
    for _ in 0..200 {
        let t = Table { n: 3, bits: rng.next() & 0xff };
        let f = build(&mgr, &[a, b, c], t);
        // Both a monotone renaming and one that crosses order positions
        // (b ↦ a' sits before b in the order), forcing the constraint route.
        for sigma in [
            BTreeMap::from([(a, a2), (b, b2)]),
            BTreeMap::from([(b, a2)]),
        ] {
            let g = mgr.rename(f, &sigma);
            for bits in 0..32u32 {
                let assign = |v: VarId| {
                    let j = all.iter().position(|&x| x == v).unwrap();
                    bits >> j & 1 == 1
                };
                let pre = |v: VarId| assign(*sigma.get(&v).unwrap_or(&v));
                assert_eq!(mgr.eval(g, assign), mgr.eval(f, pre));
            }
        }
    }
    mgr.check_integrity();
}

#[test]
fn restrict_agreement_and_size_on_eight_vars() {
    // 100 random (f, care) pairs over 8 variables: a random function against
    // a random subspace (cube) care set. Agreement wherever care holds, and
    // the cofactor never grows the diagram.
    let (mgr, vars) = fresh(8);
    let mut rng = Lcg(0xca4e);
    for _ in 0..100 {
        let f_tab: Vec<bool> = (0..256).map(|_| rng.next() & 1 == 1).collect();
        let fixed = rng.next() as u32 & 0xff;
        let values = rng.next() as u32 & 0xff;
        let c_tab: Vec<bool> = (0..256u32).map(|a| a & fixed == values & fixed).collect();
        let f = big_build(&mgr, &vars, &f_tab);
        let care = big_build(&mgr, &vars, &c_tab);
        let r = mgr.restrict(f, care);
        for a in 0..256u32 {
            if c_tab[a as usize] {
                let assign = |v: VarId| {
                    let j = vars.iter().position(|&x| x == v).unwrap();
                    a >> j & 1 == 1
                };
                assert_eq!(mgr.eval(r, assign), f_tab[a as usize]);
            }
        }
        assert!(mgr.decision_node_count(r) <= mgr.decision_node_count(f));
        // Determinism given (f, care).
        assert_eq!(r, mgr.restrict(f, care));
    }
    mgr.check_integrity();
}

#[test]
fn restrict_agreement_on_dense_care_sets() {
    // Non-cube care sets still agree on the care set; size may vary there.
    let (mgr, vars) = fresh(6);
    let mut rng = Lcg(0x1dea);
    for _ in 0..100 {
        let f_tab: Vec<bool> = (0..64).map(|_| rng.next() & 1 == 1).collect();
        let c_tab: Vec<bool> = (0..64).map(|_| rng.next() % 4 != 0).collect();
        if !c_tab.iter().any(|&b| b) {
            continue;
        }
        let f = big_build(&mgr, &vars, &f_tab);
        let care = big_build(&mgr, &vars, &c_tab);
        let r = mgr.restrict(f, care);
        for a in 0..64u32 {
            if c_tab[a as usize] {
                let assign = |v: VarId| {
                    let j = vars.iter().position(|&x| x == v).unwrap();
                    a >> j & 1 == 1
                };
                assert_eq!(mgr.eval(r, assign), f_tab[a as usize]);
            }
        }
    }
    mgr.check_integrity();
}

fn big_build(mgr: &BddManager, vars: &[VarId], table: &[bool]) -> BddRef {
    let mut f = mgr.zero();
    for (a, &on) in table.iter().enumerate() {
        if !on {
            continue;
        }
        let mut cube = mgr.one();
        for (j, &v) in vars.iter().enumerate() {
            let lit =
                if a >> j & 1 == 1 { mgr.mk_var(v) } else { mgr.not(mgr.mk_var(v)) };
            cube = mgr.and(cube, lit);
        }
        f = mgr.or(f, cube);
    }
    f
}

#[test]
fn enumeration_count_matches_table_over_five_vars() {
    let (mgr, vars) = fresh(5);
    let over: BTreeSet<VarId> = vars.iter().copied().collect();
    let mut rng = Lcg(99);
    for _ in 0..100 {
        let t = Table { n: 5, bits: rng.next() & 0xffff_ffff };
        let f = build(&mgr, &vars, t);
        let sats: Vec<Vec<bool>> = mgr.sat_assignments(f, &over).collect();
        assert_eq!(sats.len() as u32, t.count());
        let mut seen = BTreeSet::new();
        for bits in &sats {
            let a: u32 = bits
                .iter()
                .enumerate()
                .map(|(j, &b)| (b as u32) << j)
                .sum();
            assert!(t.get(a));
            assert!(seen.insert(a), "duplicate assignment");
        }
        assert_eq!(mgr.sat_count(f, &over), Some(t.count() as u128));
    }
}

#[test]
fn randomized_canonicity_ten_thousand_expressions() {
    // Random expression construction; semantically equal expressions must
    // land on identical handles, distinct tables on distinct handles.
    let (mgr, vars) = fresh(6);
    let mut rng = Lcg(0xbdd);
    let mut by_table: HashMap<u64, BddRef> = HashMap::new();
    for _ in 0..10_000 {
        let (f, t) = random_expr(&mgr, &vars, &mut rng, 5);
        match by_table.get(&t.bits) {
            Some(&g) => assert_eq!(f, g, "same table, different handles"),
            None => {
                assert!(!by_table.values().any(|&g| g == f));
                by_table.insert(t.bits, f);
            }
        }
    }
    mgr.check_integrity();
}

fn random_expr(mgr: &BddManager, vars: &[VarId], rng: &mut Lcg, depth: u32) -> (BddRef, Table) {
    let n = vars.len() as u32;
    if depth == 0 || rng.next() % 5 == 0 {
        return match rng.next() % 8 {
            0 => (mgr.zero(), Table::constant(n, false)),
            1 => (mgr.one(), Table::constant(n, true)),
            k => {
                let j = (k as u32 - 2) % n;
                (mgr.mk_var(vars[j as usize]), Table::var(n, j))
            }
        };
    }
    match rng.next() % 6 {
        0 => {
            let (f, t) = random_expr(mgr, vars, rng, depth - 1);
            (mgr.not(f), t.not())
        }
        k => {
            let op = [BinOp::And, BinOp::Or, BinOp::Xor, BinOp::Implies, BinOp::Iff]
                [(k - 1) as usize];
            let (f, tf) = random_expr(mgr, vars, rng, depth - 1);
            let (g, tg) = random_expr(mgr, vars, rng, depth - 1);
            (mgr.apply(op, f, g), tf.op(op, tg))
        }
    }
}
