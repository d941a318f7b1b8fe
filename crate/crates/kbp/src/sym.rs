//! Symbolic state space: boolean encodings of the typed variables under the
//! fixed ordering policy, compilation of knowledge-free expressions, and
//! one-step image/preimage computation through partitioned transition
//! relations with primed variables.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use robdd::{BddManager, BddRef, VarId};

use crate::error::KbpError;
use crate::exec::{BitState, Layout};
use crate::lang::model::*;

/// Variable-order knobs. Reversing the per-agent blocks is used to check
/// that synthesis results do not depend on the order.
#[derive(Debug, Clone, Copy, Default)]
pub struct OrderOptions {
    pub reverse_agents: bool,
}

/// BDD variable allocation for one model: action variables first, then each
/// state bit immediately followed by its primed twin — environment
/// variables in declaration order, per-agent locals grouped by agent, and
/// history copies grouped by time step, then agent, then base variable.
pub struct SymbolicSpace {
    pub mgr: BddManager,
    cur: Vec<Vec<VarId>>,
    primed: Vec<Vec<VarId>>,
    act: Vec<Vec<VarId>>,
    pub state_bits: BTreeSet<VarId>,
    pub primed_bits: BTreeSet<VarId>,
    pub act_bits: BTreeSet<VarId>,
    cur_to_primed: BTreeMap<VarId, VarId>,
    pub validity: BddRef,
    obs_eq_cache: RefCell<HashMap<AgentId, BddRef>>,
}

impl SymbolicSpace {
    pub fn new(model: &SystemModel, opts: OrderOptions) -> SymbolicSpace {
        let mgr = BddManager::new();
        let n = model.vars.len();
        let mut cur: Vec<Vec<VarId>> = vec![Vec::new(); n];
        let mut primed: Vec<Vec<VarId>> = vec![Vec::new(); n];

        let mut act = Vec::new();
        for agent in &model.agents {
            let mut row = Vec::new();
            for a in &model.actions {
                row.push(mgr.new_var(format!("{agent}.{a}!")));
            }
            act.push(row);
        }

        let alloc_pairs = |v: TVarId, cur: &mut Vec<Vec<VarId>>, primed: &mut Vec<Vec<VarId>>| {
            let name = &model.vars[v].name;
            for j in 0..model.vars[v].ty.bits() {
                cur[v].push(mgr.new_var(format!("{name}#{j}")));
                primed[v].push(mgr.new_var(format!("{name}#{j}'")));
            }
        };

        for v in model.env_vars() {
            alloc_pairs(v, &mut cur, &mut primed);
        }
        let agent_order: Vec<AgentId> = if opts.reverse_agents {
            (0..model.agents.len()).rev().collect()
        } else {
            (0..model.agents.len()).collect()
        };
        for &a in &agent_order {
            for v in model.local_vars_of(a) {
                if model.vars[v].history.is_none() {
                    alloc_pairs(v, &mut cur, &mut primed);
                }
            }
        }
        // History copies: time-major, then agent, then base declaration order.
        let mut history: Vec<(usize, usize, TVarId)> = Vec::new();
        for (pos, &a) in agent_order.iter().enumerate() {
            for v in model.local_vars_of(a) {
                if let Some(h) = model.vars[v].history {
                    history.push((h.time, pos, v));
                }
            }
        }
        history.sort();
        for (_, _, v) in history {
            alloc_pairs(v, &mut cur, &mut primed);
        }

        let state_bits: BTreeSet<VarId> = cur.iter().flatten().copied().collect();
        let primed_bits: BTreeSet<VarId> = primed.iter().flatten().copied().collect();
        let act_bits: BTreeSet<VarId> = act.iter().flatten().copied().collect();
        let cur_to_primed: BTreeMap<VarId, VarId> = cur
            .iter()
            .flatten()
            .zip(primed.iter().flatten())
            .map(|(&c, &p)| (c, p))
            .collect();

        let one = mgr.one();
        let mut space = SymbolicSpace {
            mgr,
            cur,
            primed,
            act,
            state_bits,
            primed_bits,
            act_bits,
            cur_to_primed,
            validity: one,
            obs_eq_cache: RefCell::new(HashMap::new()),
        };
        space.validity = space.build_validity(model);
        space
    }

    fn build_validity(&self, model: &SystemModel) -> BddRef {
        let mut v = self.mgr.one();
        for (tv, var) in model.vars.iter().enumerate() {
            let domain = var.ty.domain();
            if domain == 1 << var.ty.bits() as u64 {
                continue;
            }
            let any = (0..domain).fold(self.mgr.zero(), |acc, d| {
                self.mgr.or(acc, self.eq_const(tv, d))
            });
            v = self.mgr.and(v, any);
        }
        v
    }

    pub fn cur_bits(&self, v: TVarId) -> &[VarId] {
        &self.cur[v]
    }

    pub fn primed_bits_of(&self, v: TVarId) -> &[VarId] {
        &self.primed[v]
    }

    pub fn act_var(&self, agent: AgentId, act: ActId) -> BddRef {
        self.mgr.mk_var(self.act[agent][act])
    }

    fn eq_const(&self, v: TVarId, value: u64) -> BddRef {
        let mut f = self.mgr.one();
        for (j, &bit) in self.cur[v].iter().enumerate() {
            let lit = self.mgr.mk_var(bit);
            let lit = if value >> j & 1 == 1 { lit } else { self.mgr.not(lit) };
            f = self.mgr.and(f, lit);
        }
        f
    }

    fn eq_vars(&self, a: TVarId, b: TVarId) -> BddRef {
        let mut f = self.mgr.one();
        for (&x, &y) in self.cur[a].iter().zip(&self.cur[b]) {
            f = self.mgr.and(f, self.mgr.iff(self.mgr.mk_var(x), self.mgr.mk_var(y)));
        }
        f
    }

    /// Compiles a knowledge-free, atemporal expression over current state
    /// (and action) variables. Skeleton placeholders resolve through
    /// `theta`.
    pub fn compile(
        &self,
        e: &Expr,
        theta: Option<&BTreeMap<SkelId, BddRef>>,
    ) -> Result<BddRef, KbpError> {
        Ok(match e {
            Expr::Bool(b) => self.mgr.constant(*b),
            Expr::Var(v) => self.mgr.mk_var(self.cur[*v][0]),
            Expr::ActVar(a, act) => self.act_var(*a, *act),
            Expr::SkelVar(id) => match theta.and_then(|t| t.get(id)) {
                Some(&f) => f,
                None => {
                    return Err(KbpError::Synthesis(format!(
                        "unbound skeleton variable v{id} in a guard"
                    )))
                }
            },
            Expr::Not(a) => self.mgr.not(self.compile(a, theta)?),
            Expr::And(a, b) => self.mgr.and(self.compile(a, theta)?, self.compile(b, theta)?),
            Expr::Or(a, b) => self.mgr.or(self.compile(a, theta)?, self.compile(b, theta)?),
            Expr::EqVar(a, b) => self.eq_vars(*a, *b),
            Expr::EqConst(v, n) => self.eq_const(*v, *n),
            Expr::Iff(a, b) => self.mgr.iff(self.compile(a, theta)?, self.compile(b, theta)?),
            Expr::Next(_) => {
                return Err(KbpError::Internal("temporal operator in a state expression".into()))
            }
            Expr::Knows(..) => {
                return Err(KbpError::Internal(
                    "knowledge operator reached boolean compilation".into(),
                ))
            }
        })
    }

    /// Characteristic function of the initial states: environment and agent
    /// initial conditions plus the encoding-validity constraint.
    pub fn initial_set(&self, model: &SystemModel) -> Result<BddRef, KbpError> {
        let mut s = self.compile(&model.init_env, None)?;
        for p in &model.protocols {
            s = self.mgr.and(s, self.compile(&p.init, None)?);
        }
        Ok(self.mgr.and(s, self.validity))
    }

    /// `⋀_{v ∈ OVar_i} v ↔ v'`, the observation-agreement relation.
    pub fn obs_eq(&self, model: &SystemModel, agent: AgentId) -> BddRef {
        if let Some(&f) = self.obs_eq_cache.borrow().get(&agent) {
            return f;
        }
        let mut f = self.mgr.one();
        for v in model.protocols[agent].observables() {
            for (&c, &p) in self.cur[v].iter().zip(&self.primed[v]) {
                f = self.mgr.and(f, self.mgr.iff(self.mgr.mk_var(c), self.mgr.mk_var(p)));
            }
        }
        self.obs_eq_cache.borrow_mut().insert(agent, f);
        f
    }

    /// Renames every current state bit to its primed twin.
    pub fn prime(&self, f: BddRef) -> BddRef {
        self.mgr.rename(f, &self.cur_to_primed)
    }

    pub fn obs_bit_set(&self, model: &SystemModel, agent: AgentId) -> BTreeSet<VarId> {
        model.protocols[agent]
            .observables()
            .into_iter()
            .flat_map(|v| self.cur[v].iter().copied())
            .collect()
    }

    /// Number of states in a slice (assignments over the state bits).
    pub fn count_states(&self, f: BddRef) -> Option<u128> {
        self.mgr.sat_count(f, &self.state_bits)
    }

    /// Explicit enumeration of a symbolic state set into layout-aligned bit
    /// states.
    pub fn enumerate_states(&self, layout: &Layout, f: BddRef) -> Vec<BitState> {
        // state_bits sorted ascending = BDD order; map each to its layout slot.
        let mut slot_of: BTreeMap<VarId, usize> = BTreeMap::new();
        for (tv, bits) in self.cur.iter().enumerate() {
            for (j, &b) in bits.iter().enumerate() {
                slot_of.insert(b, layout.offsets[tv] + j);
            }
        }
        let order: Vec<usize> = self.state_bits.iter().map(|b| slot_of[b]).collect();
        let mut out = Vec::new();
        for bits in self.mgr.sat_assignments(f, &self.state_bits) {
            let mut s = layout.blank();
            for (k, &value) in bits.iter().enumerate() {
                s[order[k]] = value;
            }
            out.push(s);
        }
        out
    }

    /// Cube for one explicit state, over the current state bits.
    pub fn state_cube(&self, layout: &Layout, state: &BitState) -> BddRef {
        let mut f = self.mgr.one();
        for (tv, bits) in self.cur.iter().enumerate() {
            for (j, &b) in bits.iter().enumerate() {
                let lit = self.mgr.mk_var(b);
                let lit = if state[layout.offsets[tv] + j] { lit } else { self.mgr.not(lit) };
                f = self.mgr.and(f, lit);
            }
        }
        f
    }
}

/// The transition relation of one joint time step, split into one conjunct
/// per agent plus one for the environment program. Unchanged variables are
/// shared between pre- and post-state; only assigned variables get primed
/// copies. Each agent conjunct carries the variables that no later conjunct
/// reads (its action bits and the pre-state bits of its own changed
/// locals), so the image computation can quantify them out early.
pub struct StepRelation {
    tau: BddRef,
    agents: Vec<(BddRef, BTreeSet<VarId>)>,
    final_quant: BTreeSet<VarId>,
    changed_primed: BTreeSet<VarId>,
    primed_to_cur: BTreeMap<VarId, VarId>,
    cur_to_primed: BTreeMap<VarId, VarId>,
}

impl StepRelation {
    pub fn parts(&self) -> impl Iterator<Item = BddRef> + '_ {
        std::iter::once(self.tau).chain(self.agents.iter().map(|(r, _)| *r))
    }
}

impl SymbolicSpace {
    /// Builds the relation for one time step: `stmts` is the statement of
    /// each agent at that time; `theta` resolves skeleton placeholders in
    /// guards and assignments.
    pub fn build_step(
        &self,
        model: &SystemModel,
        stmts: &[&Statement],
        theta: Option<&BTreeMap<SkelId, BddRef>>,
    ) -> Result<StepRelation, KbpError> {
        let mut agent_parts = Vec::new();
        let mut per_agent_changed: Vec<BTreeSet<TVarId>> = Vec::new();
        let mut changed: BTreeSet<TVarId> = BTreeSet::new();

        for (agent, stmt) in stmts.iter().enumerate() {
            let mut targets: BTreeSet<TVarId> = BTreeSet::new();
            for_atomics(stmt, &mut |a| {
                targets.extend(a.assigns.iter().map(|(t, _)| *t));
            });
            let arms: Vec<(BddRef, &AtomicStatement)> = match stmt {
                Statement::Atomic(a) => vec![(self.mgr.one(), a)],
                Statement::Branch(arms) => {
                    let mut list = Vec::new();
                    let mut none = self.mgr.one();
                    for arm in arms {
                        let g = self.compile(&arm.guard, theta)?;
                        none = self.mgr.and(none, self.mgr.not(g));
                        list.push((g, &arm.body));
                    }
                    // No guard true: skip.
                    static SKIP: AtomicStatement =
                        AtomicStatement { action: None, assigns: Vec::new() };
                    list.push((none, &SKIP));
                    list
                }
            };
            let mut rel = self.mgr.zero();
            for (guard, body) in arms {
                if guard.is_zero() {
                    continue;
                }
                let mut part = self.mgr.and(guard, self.action_constraint(model, agent, body.action));
                part = self.mgr.and(part, self.assignment_constraint(body, &targets, theta)?);
                rel = self.mgr.or(rel, part);
            }
            agent_parts.push(rel);
            changed.extend(targets.iter().copied());
            per_agent_changed.push(targets);
        }

        let (tau, tau_changed) = self.tau_relation(model, theta)?;
        changed.extend(tau_changed);

        // Early-quantification sets: an agent's action bits plus the
        // pre-state bits of its own changed locals (no later conjunct reads
        // either; guards only read the reader's own variables and the
        // environment, and the environment program never reads locals).
        let mut agents = Vec::new();
        for (agent, rel) in agent_parts.into_iter().enumerate() {
            let mut quant: BTreeSet<VarId> = self.act[agent].iter().copied().collect();
            for &tv in &per_agent_changed[agent] {
                if model.vars[tv].owner == VarOwner::Local(agent) {
                    quant.extend(self.cur[tv].iter().copied());
                }
            }
            agents.push((rel, quant));
        }
        let early: BTreeSet<VarId> = agents.iter().flat_map(|(_, q)| q.iter().copied()).collect();
        let mut final_quant: BTreeSet<VarId> =
            changed.iter().flat_map(|&v| self.cur[v].iter().copied()).collect();
        final_quant.extend(self.act_bits.iter().copied());
        final_quant = final_quant.difference(&early).copied().collect();

        let changed_primed: BTreeSet<VarId> =
            changed.iter().flat_map(|&v| self.primed[v].iter().copied()).collect();
        let primed_to_cur: BTreeMap<VarId, VarId> = changed
            .iter()
            .flat_map(|&v| self.primed[v].iter().zip(&self.cur[v]))
            .map(|(&p, &c)| (p, c))
            .collect();
        let cur_to_primed: BTreeMap<VarId, VarId> =
            primed_to_cur.iter().map(|(&p, &c)| (c, p)).collect();
        Ok(StepRelation {
            tau,
            agents,
            final_quant,
            changed_primed,
            primed_to_cur,
            cur_to_primed,
        })
    }

    /// The emitted action determines every action variable of the agent.
    fn action_constraint(&self, model: &SystemModel, agent: AgentId, action: Option<ActId>) -> BddRef {
        let mut f = self.mgr.one();
        for act in 0..model.actions.len() {
            let lit = self.act_var(agent, act);
            let lit = if action == Some(act) { lit } else { self.mgr.not(lit) };
            f = self.mgr.and(f, lit);
        }
        f
    }

    /// `⋀ x' ↔ value(x)` over the agent's changed set: assigned variables
    /// take their right-hand side (read in the pre-state), the rest of the
    /// set stays put.
    fn assignment_constraint(
        &self,
        body: &AtomicStatement,
        targets: &BTreeSet<TVarId>,
        theta: Option<&BTreeMap<SkelId, BddRef>>,
    ) -> Result<BddRef, KbpError> {
        let mut f = self.mgr.one();
        for &tv in targets {
            let rhs_bits: Vec<BddRef> = match body.assigns.iter().find(|(t, _)| *t == tv) {
                Some((_, Rhs::Bool(e))) => vec![self.compile(e, theta)?],
                Some((_, Rhs::Copy(w))) => {
                    self.cur[*w].iter().map(|&b| self.mgr.mk_var(b)).collect()
                }
                Some((_, Rhs::Const(n))) => (0..self.cur[tv].len())
                    .map(|j| self.mgr.constant(n >> j & 1 == 1))
                    .collect(),
                None => self.cur[tv].iter().map(|&b| self.mgr.mk_var(b)).collect(),
            };
            for (&pbit, rhs) in self.primed[tv].iter().zip(rhs_bits) {
                f = self.mgr.and(f, self.mgr.iff(self.mgr.mk_var(pbit), rhs));
            }
        }
        Ok(f)
    }

    /// Relation of the environment program over `(V ∪ A, E')`, by forward
    /// symbolic execution: paths fork at branches, assignments substitute
    /// into per-variable bit functions, guards evaluate against the
    /// intermediate functions.
    fn tau_relation(
        &self,
        model: &SystemModel,
        theta: Option<&BTreeMap<SkelId, BddRef>>,
    ) -> Result<(BddRef, BTreeSet<TVarId>), KbpError> {
        let mut changed: BTreeSet<TVarId> = BTreeSet::new();
        for stmt in &model.tau.0 {
            for_atomics(stmt, &mut |a| changed.extend(a.assigns.iter().map(|(t, _)| *t)));
        }

        type EnvMap = HashMap<TVarId, Vec<BddRef>>;
        let mut paths: Vec<(BddRef, EnvMap)> = vec![(self.mgr.one(), HashMap::new())];
        for stmt in &model.tau.0 {
            let mut next_paths = Vec::new();
            for (cond, map) in paths {
                match stmt {
                    Statement::Atomic(a) => {
                        let map = self.tau_apply(a, &map, theta)?;
                        next_paths.push((cond, map));
                    }
                    Statement::Branch(arms) => {
                        let mut none = cond;
                        for arm in arms {
                            let g = self.compile_over(&arm.guard, &map, theta)?;
                            let taken = self.mgr.and(cond, g);
                            none = self.mgr.and(none, self.mgr.not(g));
                            if !taken.is_zero() {
                                next_paths.push((taken, self.tau_apply(&arm.body, &map, theta)?));
                            }
                        }
                        if !none.is_zero() {
                            next_paths.push((none, map));
                        }
                    }
                }
            }
            paths = next_paths;
        }

        let mut rel = self.mgr.zero();
        for (cond, map) in paths {
            let mut part = cond;
            for &tv in &changed {
                let bits: Vec<BddRef> = match map.get(&tv) {
                    Some(bits) => bits.clone(),
                    None => self.cur[tv].iter().map(|&b| self.mgr.mk_var(b)).collect(),
                };
                for (&pbit, rhs) in self.primed[tv].iter().zip(bits) {
                    part = self.mgr.and(part, self.mgr.iff(self.mgr.mk_var(pbit), rhs));
                }
            }
            rel = self.mgr.or(rel, part);
        }
        Ok((rel, changed))
    }

    fn tau_apply(
        &self,
        a: &AtomicStatement,
        map: &HashMap<TVarId, Vec<BddRef>>,
        theta: Option<&BTreeMap<SkelId, BddRef>>,
    ) -> Result<HashMap<TVarId, Vec<BddRef>>, KbpError> {
        let mut out = map.clone();
        // Assignments within one atomic are simultaneous: all right-hand
        // sides read the incoming map.
        let mut updates = Vec::new();
        for (t, rhs) in &a.assigns {
            let bits = match rhs {
                Rhs::Bool(e) => vec![self.compile_over(e, map, theta)?],
                Rhs::Copy(w) => self.var_bits_over(*w, map),
                Rhs::Const(n) => (0..self.cur[*t].len())
                    .map(|j| self.mgr.constant(n >> j & 1 == 1))
                    .collect(),
            };
            updates.push((*t, bits));
        }
        for (t, bits) in updates {
            out.insert(t, bits);
        }
        Ok(out)
    }

    fn var_bits_over(&self, v: TVarId, map: &HashMap<TVarId, Vec<BddRef>>) -> Vec<BddRef> {
        match map.get(&v) {
            Some(bits) => bits.clone(),
            None => self.cur[v].iter().map(|&b| self.mgr.mk_var(b)).collect(),
        }
    }

    /// Like [`compile`](Self::compile) but variables read through the
    /// intermediate bit functions in `map`.
    fn compile_over(
        &self,
        e: &Expr,
        map: &HashMap<TVarId, Vec<BddRef>>,
        theta: Option<&BTreeMap<SkelId, BddRef>>,
    ) -> Result<BddRef, KbpError> {
        Ok(match e {
            Expr::Var(v) => self.var_bits_over(*v, map)[0],
            Expr::EqVar(a, b) => {
                let ba = self.var_bits_over(*a, map);
                let bb = self.var_bits_over(*b, map);
                ba.iter()
                    .zip(&bb)
                    .fold(self.mgr.one(), |acc, (&x, &y)| self.mgr.and(acc, self.mgr.iff(x, y)))
            }
            Expr::EqConst(v, n) => {
                let bits = self.var_bits_over(*v, map);
                bits.iter().enumerate().fold(self.mgr.one(), |acc, (j, &b)| {
                    let lit = if n >> j & 1 == 1 { b } else { self.mgr.not(b) };
                    self.mgr.and(acc, lit)
                })
            }
            Expr::Not(a) => self.mgr.not(self.compile_over(a, map, theta)?),
            Expr::And(a, b) => self
                .mgr
                .and(self.compile_over(a, map, theta)?, self.compile_over(b, map, theta)?),
            Expr::Or(a, b) => self
                .mgr
                .or(self.compile_over(a, map, theta)?, self.compile_over(b, map, theta)?),
            Expr::Iff(a, b) => self
                .mgr
                .iff(self.compile_over(a, map, theta)?, self.compile_over(b, map, theta)?),
            other => self.compile(other, theta)?,
        })
    }

    /// `S_{k+1} = { t | ∃ s ∈ S_k, ∃ enabled choice: step(s) = t }`: conjoin
    /// the relation parts, quantify pre-state and action variables, rename
    /// primed back. (Quantifying per-agent blocks early was measurably
    /// worse here: it severs the correlation between recorded history and
    /// the environment that keeps the product small.)
    pub fn image(&self, s: BddRef, rel: &StepRelation) -> BddRef {
        let mut t = s;
        for (part, _) in &rel.agents {
            t = self.mgr.and(t, *part);
        }
        t = self.mgr.and(t, rel.tau);
        let mut quant = rel.final_quant.clone();
        quant.extend(rel.agents.iter().flat_map(|(_, q)| q.iter().copied()));
        let t = self.mgr.exists(t, &quant);
        self.mgr.rename(t, &rel.primed_to_cur)
    }

    /// States with a successor in `target` under the step relation.
    pub fn preimage(&self, target: BddRef, rel: &StepRelation) -> BddRef {
        let shifted = self.mgr.rename(target, &rel.cur_to_primed);
        let mut t = self.mgr.and(shifted, rel.tau);
        for (part, _) in &rel.agents {
            t = self.mgr.and(t, *part);
        }
        let mut quant = rel.changed_primed.clone();
        quant.extend(self.act_bits.iter().copied());
        self.mgr.exists(t, &quant)
    }
}

fn for_atomics(stmt: &Statement, f: &mut impl FnMut(&AtomicStatement)) {
    match stmt {
        Statement::Atomic(a) => f(a),
        Statement::Branch(arms) => {
            for arm in arms {
                f(&arm.body);
            }
        }
    }
}

/// Statements of every agent at one time index.
pub fn statements_at(programs: &[Program], time: usize) -> Vec<&Statement> {
    programs.iter().map(|p| &p.0[time]).collect()
}
