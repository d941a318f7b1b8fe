//! The implementation-equivalence check (`X^t(φ ⇔ θ(v_φ^t))` over the
//! system the substituted program itself generates) and bounded model
//! checking of `X^k φ` specifications, with replayable counterexamples.

use std::collections::BTreeMap;

use robdd::BddRef;

use crate::epistemic::{observation, EpistemicStructure, View};
use crate::error::KbpError;
use crate::exec::{
    export_trace, global_step, successors, BitState, Layout, Trace,
};
use crate::lang::model::*;
use crate::lang::transform::{history_transform, skeleton, substitute};
use crate::lang::{ensure_valid, Printer};
use crate::sym::{statements_at, OrderOptions, StepRelation, SymbolicSpace};
use crate::synth::SidecarEntry;

/// A state where a condition and its substitution disagree, plus a run
/// reaching it.
pub struct Witness {
    pub state: BitState,
    pub observation: Vec<u64>,
    pub trace: Trace,
}

pub struct CheckEntry {
    pub agent: AgentId,
    pub time: usize,
    pub formula: String,
    pub pass: bool,
    pub witness: Option<Witness>,
}

pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
    /// The model the entries refer to (post-transform).
    pub model: SystemModel,
    pub layout: Layout,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Checks that a substitution implements the knowledge-based model: the
/// slice sequence is rebuilt by running the substituted program from S_0,
/// and at each time t every condition φ must have
/// `sat(M_t, φ) = sat(M_t, θ(v_φ^t))` on S_t.
pub fn check_implementation(
    model: &SystemModel,
    theta: &[SidecarEntry],
    view: View,
    order: OrderOptions,
) -> Result<CheckReport, KbpError> {
    ensure_valid(model)?;
    let transformed = match view {
        View::Clk => model.clone(),
        View::Spr => history_transform(model)?,
        View::Obs => {
            return Err(KbpError::Check("implementation checking supports clk and spr".into()))
        }
    };
    let sk = skeleton(&transformed)?;

    // Match conditions to skeleton variables by (agent, time, formula).
    let mut images: BTreeMap<SkelId, Expr> = BTreeMap::new();
    for entry in theta {
        if let Some(id) = sk
            .vars
            .iter()
            .position(|v| v.agent == entry.agent && v.time == entry.time && v.formula == entry.formula)
        {
            images.insert(id, entry.expr.clone());
        }
    }
    for (id, v) in sk.vars.iter().enumerate() {
        if !images.contains_key(&id) {
            return Err(KbpError::Check(format!(
                "substitution does not cover the condition of {} at time {}: {}",
                transformed.agents[v.agent],
                v.time,
                Printer::for_agent(&transformed, v.agent).formula(&v.formula)
            )));
        }
    }

    let standard = substitute(&transformed, &sk, &images)?;
    let layout = Layout::of(&standard);
    let space = SymbolicSpace::new(&standard, order);
    let s0 = space.initial_set(&standard)?;

    let mut entries = Vec::new();
    let mut slices = vec![s0];
    let mut relations: Vec<StepRelation> = Vec::new();
    let programs: Vec<Program> = standard.protocols.iter().map(|p| p.program.clone()).collect();
    let last = sk.max_time().unwrap_or(0);
    for k in 0..=last {
        let m_k = EpistemicStructure::new(&space, &standard, slices[k]);
        for (id, sv) in sk.at_time(k) {
            let lhs = m_k.sat_set(&sv.formula)?;
            let rhs = m_k.sat_set(&images[&id])?;
            let pass = lhs == rhs;
            let witness = if pass {
                None
            } else {
                let diff = space.mgr.or(
                    space.mgr.and(lhs, space.mgr.not(rhs)),
                    space.mgr.and(rhs, space.mgr.not(lhs)),
                );
                Some(build_witness(
                    &standard, &layout, &space, &slices, &relations, diff, k, sv.agent,
                )?)
            };
            entries.push(CheckEntry {
                agent: sv.agent,
                time: sv.time,
                formula: Printer::for_agent(&transformed, sv.agent).formula(&sv.formula),
                pass,
                witness,
            });
        }
        if k < last {
            let stmts = statements_at(&programs, k);
            let rel = space.build_step(&standard, &stmts, None)?;
            slices.push(space.image(slices[k], &rel));
            relations.push(rel);
        }
    }
    Ok(CheckReport { entries, model: standard, layout })
}

pub struct ModelCheckOutcome {
    pub holds: bool,
    pub counterexample: Option<Witness>,
    /// The model the check ran on (post-transform under spr).
    pub model: SystemModel,
    pub layout: Layout,
}

/// Bounded model checking of `X^k φ` with φ atemporal: builds the slices
/// S_0..S_k and decides `S_k ⊆ sat(M_k, φ)`. Under spr the history
/// transform is applied first; the obs view is accepted only for
/// knowledge-free φ.
pub fn model_check_x(
    model: &SystemModel,
    view: View,
    k: usize,
    phi: &Expr,
    order: OrderOptions,
) -> Result<ModelCheckOutcome, KbpError> {
    ensure_valid(model)?;
    if model.kind() != ModelKind::Standard {
        return Err(KbpError::Check(
            "model checking runs on standard models; synthesize the input first".into(),
        ));
    }
    if !phi.atemporal() {
        return Err(KbpError::Check(
            "the checked formula must be atemporal after stripping the X^k prefix".into(),
        ));
    }
    let checked = match view {
        View::Clk => model.clone(),
        View::Spr => history_transform(model)?,
        View::Obs => {
            if phi.has_knowledge() {
                return Err(KbpError::Check(
                    "knowledge evaluation needs the clk or spr view".into(),
                ));
            }
            model.clone()
        }
    };
    if k > checked.horizon() {
        return Err(KbpError::Check(format!(
            "depth {k} exceeds the program length {}",
            checked.horizon()
        )));
    }
    let layout = Layout::of(&checked);
    let space = SymbolicSpace::new(&checked, order);
    let mut slices = vec![space.initial_set(&checked)?];
    let mut relations = Vec::new();
    let programs: Vec<Program> = checked.protocols.iter().map(|p| p.program.clone()).collect();
    for t in 0..k {
        let rel = space.build_step(&checked, &statements_at(&programs, t), None)?;
        let next = space.image(slices[t], &rel);
        slices.push(next);
        relations.push(rel);
    }
    let m_k = EpistemicStructure::new(&space, &checked, slices[k]);
    let sat = m_k.sat_set(phi)?;
    let bad = space.mgr.and(slices[k], space.mgr.not(sat));
    if bad.is_zero() {
        return Ok(ModelCheckOutcome { holds: true, counterexample: None, model: checked, layout });
    }
    let witness = build_witness(&checked, &layout, &space, &slices, &relations, bad, k, 0)?;
    Ok(ModelCheckOutcome {
        holds: false,
        counterexample: Some(witness),
        model: checked,
        layout,
    })
}

/// Backward intersection of slice sets with preimages picks one concrete
/// state per time; forward replay through the step semantics then rebuilds
/// a full trace and confirms it.
fn build_witness(
    model: &SystemModel,
    layout: &Layout,
    space: &SymbolicSpace,
    slices: &[BddRef],
    relations: &[StepRelation],
    bad: BddRef,
    t: usize,
    agent: AgentId,
) -> Result<Witness, KbpError> {
    let pick = |set: BddRef| -> Result<BitState, KbpError> {
        space
            .enumerate_states(layout, set)
            .into_iter()
            .next()
            .ok_or_else(|| KbpError::Internal("empty witness set".into()))
    };
    let mut states = vec![pick(space.mgr.and(bad, slices[t]))?];
    for j in (0..t).rev() {
        let cube = space.state_cube(layout, states.last().unwrap());
        let pre = space.mgr.and(space.preimage(cube, &relations[j]), slices[j]);
        states.push(pick(pre)?);
    }
    states.reverse();
    let trace = replay(model, layout, &states)?;
    let state = states.last().unwrap().clone();
    let obs = observation(model, layout, &state, agent);
    Ok(Witness { state, observation: obs, trace })
}

/// Finds, per step, a joint choice that maps each witness state to the
/// next, then re-executes it through the global step to confirm.
pub fn replay(model: &SystemModel, layout: &Layout, states: &[BitState]) -> Result<Trace, KbpError> {
    let mut trace = Trace { states: vec![states[0].clone()], steps: Vec::new() };
    for (t, want) in states.iter().enumerate().skip(1) {
        let here = trace.states.last().unwrap().clone();
        let all = successors(model, layout, &here, t - 1, None);
        let (choice, _) = all
            .into_iter()
            .find(|(_, next)| next == want)
            .ok_or_else(|| KbpError::Internal("witness step is not a successor".into()))?;
        let mut env_iter = choice.env_arms.iter();
        let confirmed = global_step(model, layout, &here, t - 1, &choice.agent_arms, |_, _| {
            *env_iter.next().expect("environment choice recorded")
        });
        if &confirmed != want {
            return Err(KbpError::Internal("replayed step diverged from the witness".into()));
        }
        trace.steps.push(crate::exec::StepRecord {
            agent_arms: choice.agent_arms.clone(),
            actions: model
                .protocols
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    crate::exec::resolve_arm(&p.program.0[t - 1], choice.agent_arms[i]).action
                })
                .collect(),
            env_arms: choice.env_arms,
        });
        trace.states.push(confirmed);
    }
    Ok(trace)
}

impl CheckReport {
    /// Structured-text serialization: one verdict line per condition; fail
    /// entries carry the witness state and a replayable trace.
    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for e in &self.entries {
            let verdict = if e.pass { "pass" } else { "fail" };
            let _ = writeln!(
                out,
                "check agent={} time={} verdict={} formula: {}",
                self.model.agents[e.agent], e.time, verdict, e.formula
            );
            if let Some(w) = &e.witness {
                let _ = writeln!(out, "witness observation: {:?}", w.observation);
                out.push_str(&export_trace(&self.model, &self.layout, &w.trace));
            }
        }
        out
    }
}
