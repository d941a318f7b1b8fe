//! Independent checking machinery: an explicit-state epistemic evaluator,
//! a brute-force synthesizer cross-validating the symbolic path, the
//! implementation-equivalence check, bounded model checking of
//! `X^k φ` specifications, and the event-update product.

mod check;
mod update;

pub use check::{check_implementation, model_check_x, CheckEntry, CheckReport, ModelCheckOutcome, Witness};
pub use update::{apply_update, check_update_formula, muddy_update_instance, quotient, UpdateStructure};

use std::collections::{BTreeMap, BTreeSet};

use crate::epistemic::{observation, View};
use crate::error::KbpError;
use crate::exec::{successors, BitState, EvalCtx, Layout};
use crate::lang::model::*;
use crate::lang::transform::{history_transform, skeleton, Skeleton};
use crate::lang::Printer;

/// Default cap on explicit slice sizes.
pub const DEFAULT_STATE_BOUND: usize = 1 << 16;

/// A finite epistemic model with explicit worlds: labels are full variable
/// assignments, indistinguishability is one partition per agent.
#[derive(Debug, Clone)]
pub struct ExplicitModel {
    pub worlds: Vec<BitState>,
    /// `equiv[agent][world]` is the world's class id.
    pub equiv: Vec<Vec<usize>>,
}

impl ExplicitModel {
    /// A time slice: worlds are states, classes are observation classes.
    pub fn from_slice(model: &SystemModel, layout: &Layout, states: Vec<BitState>) -> ExplicitModel {
        let mut equiv = Vec::new();
        for agent in 0..model.agents.len() {
            let mut classes: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
            let mut ids = Vec::new();
            for s in &states {
                let key = observation(model, layout, s, agent);
                let next = classes.len();
                ids.push(*classes.entry(key).or_insert(next));
            }
            equiv.push(ids);
        }
        ExplicitModel { worlds: states, equiv }
    }

    /// Per-world truth of an atemporal formula: `K_i φ` holds where every
    /// world of the same class satisfies φ (a direct partition sweep).
    pub fn sat_vec(
        &self,
        model: &SystemModel,
        layout: &Layout,
        phi: &Expr,
    ) -> Result<Vec<bool>, KbpError> {
        Ok(match phi {
            Expr::Not(a) => {
                let mut v = self.sat_vec(model, layout, a)?;
                v.iter_mut().for_each(|b| *b = !*b);
                v
            }
            Expr::And(a, b) => {
                let va = self.sat_vec(model, layout, a)?;
                let vb = self.sat_vec(model, layout, b)?;
                va.into_iter().zip(vb).map(|(x, y)| x && y).collect()
            }
            Expr::Or(a, b) => {
                let va = self.sat_vec(model, layout, a)?;
                let vb = self.sat_vec(model, layout, b)?;
                va.into_iter().zip(vb).map(|(x, y)| x || y).collect()
            }
            Expr::Iff(a, b) => {
                let va = self.sat_vec(model, layout, a)?;
                let vb = self.sat_vec(model, layout, b)?;
                va.into_iter().zip(vb).map(|(x, y)| x == y).collect()
            }
            Expr::Knows(agent, body) => {
                let vb = self.sat_vec(model, layout, body)?;
                let ids = &self.equiv[*agent];
                let nclasses = ids.iter().copied().max().map_or(0, |m| m + 1);
                let mut all_true = vec![true; nclasses];
                for (w, &ok) in vb.iter().enumerate() {
                    if !ok {
                        all_true[ids[w]] = false;
                    }
                }
                ids.iter().map(|&c| all_true[c]).collect()
            }
            Expr::Next(_) => {
                return Err(KbpError::Check("temporal operator in a slice formula".into()))
            }
            atom => {
                let ctx = EvalCtx { model, layout, actions: None, skel: None };
                self.worlds.iter().map(|w| ctx.eval(w, atom)).collect()
            }
        })
    }
}

/// Enumerates the initial states by assigning typed variables in
/// declaration order and pruning with a three-valued reading of the
/// combined initial condition. Errors out past `bound` states.
pub fn enumerate_init_states(
    model: &SystemModel,
    layout: &Layout,
    bound: usize,
) -> Result<Vec<BitState>, KbpError> {
    let init = Expr::conj(
        std::iter::once(model.init_env.clone())
            .chain(model.protocols.iter().map(|p| p.init.clone())),
    );
    let mut out = Vec::new();
    let mut state = layout.blank();
    let mut assigned = vec![false; model.vars.len()];
    enumerate_rec(model, layout, &init, &mut state, &mut assigned, 0, bound, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    model: &SystemModel,
    layout: &Layout,
    init: &Expr,
    state: &mut BitState,
    assigned: &mut Vec<bool>,
    var: TVarId,
    bound: usize,
    out: &mut Vec<BitState>,
) -> Result<(), KbpError> {
    match eval3(model, layout, state, assigned, init) {
        Some(false) => return Ok(()),
        Some(true) if var == model.vars.len() => {
            if out.len() >= bound {
                return Err(KbpError::Oracle(format!(
                    "explicit state bound {bound} exceeded while enumerating initial states"
                )));
            }
            out.push(state.clone());
            return Ok(());
        }
        _ => {}
    }
    if var == model.vars.len() {
        // Unknown with everything assigned cannot happen.
        return Err(KbpError::Internal("three-valued evaluation stuck".into()));
    }
    for value in 0..model.vars[var].ty.domain() {
        layout.set(state, var, value);
        assigned[var] = true;
        enumerate_rec(model, layout, init, state, assigned, var + 1, bound, out)?;
    }
    assigned[var] = false;
    layout.set(state, var, 0);
    Ok(())
}

/// Three-valued evaluation: `None` when the verdict still depends on
/// unassigned variables.
fn eval3(
    model: &SystemModel,
    layout: &Layout,
    state: &BitState,
    assigned: &[bool],
    e: &Expr,
) -> Option<bool> {
    match e {
        Expr::Bool(b) => Some(*b),
        Expr::Var(v) => assigned[*v].then(|| layout.get(state, *v) != 0),
        Expr::EqConst(v, n) => assigned[*v].then(|| layout.get(state, *v) == *n),
        Expr::EqVar(a, b) => (assigned[*a] && assigned[*b])
            .then(|| layout.get(state, *a) == layout.get(state, *b)),
        Expr::Not(a) => eval3(model, layout, state, assigned, a).map(|b| !b),
        Expr::And(a, b) => {
            match (
                eval3(model, layout, state, assigned, a),
                eval3(model, layout, state, assigned, b),
            ) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            }
        }
        Expr::Or(a, b) => {
            match (
                eval3(model, layout, state, assigned, a),
                eval3(model, layout, state, assigned, b),
            ) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            }
        }
        Expr::Iff(a, b) => {
            let va = eval3(model, layout, state, assigned, a)?;
            let vb = eval3(model, layout, state, assigned, b)?;
            Some(va == vb)
        }
        Expr::ActVar(..) | Expr::SkelVar(_) | Expr::Next(_) | Expr::Knows(..) => None,
    }
}

/// One synthesized condition as a truth table over the realized
/// observations at its time slice.
#[derive(Debug, Clone)]
pub struct ObsTable {
    pub agent: AgentId,
    pub time: usize,
    pub formula: Expr,
    /// realized observation (typed values of OVar in order) → condition
    pub rows: BTreeMap<Vec<u64>, bool>,
}

pub struct ExplicitSynthesis {
    pub transformed: SystemModel,
    pub layout: Layout,
    pub skeleton: Skeleton,
    /// Indexed by skeleton variable id.
    pub tables: Vec<ObsTable>,
    /// Explicit S_0..S_N.
    pub slices: Vec<Vec<BitState>>,
}

/// The same iteration as the symbolic synthesizer, but entirely over
/// explicit state sets with knowledge evaluated by partition sweeps.
/// Returns exact truth tables on realized observations, not minimized
/// expressions.
pub fn explicit_synthesize(
    model: &SystemModel,
    view: View,
    bound: usize,
) -> Result<ExplicitSynthesis, KbpError> {
    crate::lang::ensure_valid(model)?;
    let transformed = match view {
        View::Clk => model.clone(),
        View::Spr => history_transform(model)?,
        View::Obs => {
            return Err(KbpError::Oracle("the oracle supports the clk and spr views".into()))
        }
    };
    let layout = Layout::of(&transformed);
    let sk = skeleton(&transformed)?;
    let mut slices = vec![enumerate_init_states(&transformed, &layout, bound)?];
    let mut tables: Vec<Option<ObsTable>> = (0..sk.vars.len()).map(|_| None).collect();

    if let Some(last) = sk.max_time() {
        for k in 0..=last {
            let slice = ExplicitModel::from_slice(&transformed, &layout, slices[k].clone());
            for (id, sv) in sk.at_time(k) {
                let truth = slice.sat_vec(&transformed, &layout, &sv.formula)?;
                let mut rows: BTreeMap<Vec<u64>, bool> = BTreeMap::new();
                for (w, state) in slice.worlds.iter().enumerate() {
                    let key = observation(&transformed, &layout, state, sv.agent);
                    match rows.insert(key.clone(), truth[w]) {
                        Some(prev) if prev != truth[w] => {
                            return Err(KbpError::Internal(format!(
                                "knowledge condition not constant on an observation class \
                                 (agent {}, time {k})",
                                transformed.agents[sv.agent]
                            )))
                        }
                        _ => {}
                    }
                }
                tables[id] = Some(ObsTable {
                    agent: sv.agent,
                    time: sv.time,
                    formula: sv.formula.clone(),
                    rows,
                });
            }
            if k < last {
                let next = explicit_step(&transformed, &layout, &sk, &tables, &slices[k], k, bound)?;
                slices.push(next);
            }
        }
    }
    Ok(ExplicitSynthesis {
        transformed,
        layout,
        skeleton: sk,
        tables: tables.into_iter().map(|t| t.unwrap()).collect(),
        slices,
    })
}

fn explicit_step(
    model: &SystemModel,
    layout: &Layout,
    sk: &Skeleton,
    tables: &[Option<ObsTable>],
    slice: &[BitState],
    time: usize,
    bound: usize,
) -> Result<Vec<BitState>, KbpError> {
    // Programs with skeleton placeholders: resolve through the tables.
    let with_skel = SystemModel {
        protocols: model
            .protocols
            .iter()
            .zip(&sk.programs)
            .map(|(p, prog)| Protocol { program: prog.clone(), ..p.clone() })
            .collect(),
        ..model.clone()
    };
    let resolver = |id: SkelId, state: &BitState| -> bool {
        let table = tables[id].as_ref().expect("table built before its first use");
        let key = observation(model, layout, state, table.agent);
        *table.rows.get(&key).expect("state observation realized in its own slice")
    };
    let mut next: BTreeSet<BitState> = BTreeSet::new();
    for state in slice {
        for (_, succ) in successors(&with_skel, layout, state, time, Some(&resolver)) {
            next.insert(succ);
        }
        if next.len() > bound {
            return Err(KbpError::Oracle(format!(
                "explicit state bound {bound} exceeded at time {}",
                time + 1
            )));
        }
    }
    Ok(next.into_iter().collect())
}

/// All distinct runs of `steps` global steps of a standard model, as state
/// sequences: the product of every enabled choice at every step, deduplicated
/// by the resulting trace.
pub fn enumerate_runs(
    model: &SystemModel,
    layout: &Layout,
    steps: usize,
    bound: usize,
) -> Result<Vec<Vec<BitState>>, KbpError> {
    if model.kind() != ModelKind::Standard {
        return Err(KbpError::Oracle("run enumeration requires a standard model".into()));
    }
    let inits = enumerate_init_states(model, layout, bound)?;
    let mut runs: std::collections::BTreeSet<Vec<BitState>> =
        inits.into_iter().map(|s| vec![s]).collect();
    for t in 0..steps {
        let mut next = std::collections::BTreeSet::new();
        for run in &runs {
            for (_, succ) in successors(model, layout, run.last().unwrap(), t, None) {
                let mut r = run.clone();
                r.push(succ);
                next.insert(r);
            }
            if next.len() > bound {
                return Err(KbpError::Oracle(format!(
                    "run bound {bound} exceeded at step {}",
                    t + 1
                )));
            }
        }
        runs = next;
    }
    Ok(runs.into_iter().collect())
}

impl ObsTable {
    pub fn describe(&self, model: &SystemModel) -> String {
        format!(
            "agent={} time={} formula={}",
            model.agents[self.agent],
            self.time,
            Printer::for_agent(model, self.agent).formula(&self.formula)
        )
    }
}

/// Cross-validates a symbolic synthesis result against the explicit path:
/// identical condition lists, identical care sets, the same verdict on
/// every realized observation, and equal slice sets at every time.
pub fn compare_symbolic_explicit(
    model: &SystemModel,
    result: &crate::synth::SynthesisResult,
    view: View,
    bound: usize,
) -> Result<ExplicitSynthesis, KbpError> {
    let exact = explicit_synthesize(model, view, bound)?;
    let layout = &exact.layout;
    if exact.tables.len() != result.conditions.len() {
        return Err(KbpError::Internal("condition counts differ between engines".into()));
    }
    for (cond, table) in result.conditions.iter().zip(&exact.tables) {
        if (cond.agent, cond.time, &cond.formula) != (table.agent, table.time, &table.formula) {
            return Err(KbpError::Internal("condition order differs between engines".into()));
        }
        if cond.care_count != Some(table.rows.len() as u128) {
            return Err(KbpError::Internal(format!(
                "care sets differ for {}",
                table.describe(&exact.transformed)
            )));
        }
        let proto = &result.transformed.protocols[cond.agent];
        let ctx = crate::exec::EvalCtx {
            model: &result.transformed,
            layout,
            actions: None,
            skel: None,
        };
        for (obs, &truth) in &table.rows {
            let mut state = layout.blank();
            for (&v, &value) in proto.observables().iter().zip(obs) {
                layout.set(&mut state, v, value);
            }
            if ctx.eval(&state, &cond.expr) != truth {
                return Err(KbpError::Internal(format!(
                    "disagreement at {:?} for {}",
                    obs,
                    table.describe(&exact.transformed)
                )));
            }
        }
    }
    for (k, explicit_slice) in exact.slices.iter().enumerate() {
        let symbolic: BTreeSet<BitState> =
            result.space.enumerate_states(layout, result.slices[k]).into_iter().collect();
        let explicit: BTreeSet<BitState> = explicit_slice.iter().cloned().collect();
        if symbolic != explicit {
            return Err(KbpError::Internal(format!("slice {k} differs between engines")));
        }
    }
    Ok(exact)
}
