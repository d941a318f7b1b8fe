//! Time-sliced epistemic structures and symbolic evaluation of atemporal
//! knowledge formulas, plus the view machinery assigning local states to
//! explicit traces.

use robdd::BddRef;

use crate::error::KbpError;
use crate::exec::{BitState, Layout, Trace};
use crate::lang::model::*;
use crate::sym::SymbolicSpace;

/// How much of a run an agent's local state retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    /// Current observation only.
    Obs,
    /// Time plus current observation.
    Clk,
    /// The full observation sequence (synchronous perfect recall).
    Spr,
}

impl std::str::FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<View, String> {
        match s {
            "obs" => Ok(View::Obs),
            "clk" => Ok(View::Clk),
            "spr" => Ok(View::Spr),
            other => Err(format!("unknown view {other:?} (supported: clk, spr, obs)")),
        }
    }
}

impl std::fmt::Display for View {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            View::Obs => write!(f, "obs"),
            View::Clk => write!(f, "clk"),
            View::Spr => write!(f, "spr"),
        }
    }
}

/// One time slice `M_k = (S_k, {O_i}, π)`: the reachable states at time k
/// with indistinguishability given by equal observations, interpretation
/// being the identity on variables.
pub struct EpistemicStructure<'a> {
    pub space: &'a SymbolicSpace,
    pub model: &'a SystemModel,
    pub states: BddRef,
}

impl<'a> EpistemicStructure<'a> {
    pub fn new(space: &'a SymbolicSpace, model: &'a SystemModel, states: BddRef) -> Self {
        EpistemicStructure { space, model, states }
    }

    /// `{ s ∈ states | M, s ⊨ φ }` for an atemporal formula. `K_i φ` holds
    /// at `s` when no observation-equivalent state of the slice violates φ,
    /// computed with a primed copy of the state variables, an equality
    /// constraint over the agent's observables, quantification and a rename
    /// back.
    pub fn sat_set(&self, phi: &Expr) -> Result<BddRef, KbpError> {
        let mgr = &self.space.mgr;
        Ok(match phi {
            Expr::Not(a) => {
                let sa = self.sat_set(a)?;
                mgr.and(self.states, mgr.not(sa))
            }
            Expr::And(a, b) => mgr.and(self.sat_set(a)?, self.sat_set(b)?),
            Expr::Or(a, b) => mgr.or(self.sat_set(a)?, self.sat_set(b)?),
            Expr::Iff(a, b) => {
                let sa = self.sat_set(a)?;
                let sb = self.sat_set(b)?;
                let both = mgr.and(sa, sb);
                let neither = mgr.and(self.states, mgr.and(mgr.not(sa), mgr.not(sb)));
                mgr.or(both, neither)
            }
            Expr::Knows(agent, body) => {
                let violating = {
                    let sat_body = self.sat_set(body)?;
                    mgr.and(self.states, mgr.not(sat_body))
                };
                let primed_violating = self.space.prime(violating);
                let linked = mgr.and(primed_violating, self.space.obs_eq(self.model, *agent));
                let sees_violation = mgr.exists(linked, &self.space.primed_bits);
                mgr.and(self.states, mgr.not(sees_violation))
            }
            Expr::Next(_) => {
                return Err(KbpError::Check(
                    "temporal operator inside an epistemic slice formula".into(),
                ))
            }
            atom => mgr.and(self.states, self.space.compile(atom, None)?),
        })
    }

    /// Observation-level satisfaction: the set of observations `O_i(s)` of
    /// slice states satisfying ψ, as a function over the agent's observable
    /// bits, together with the care set (all realized observations). ψ must
    /// be a boolean combination of the agent's observables and `K_i`
    /// formulas, so its truth is constant on observation classes.
    pub fn obs_sat(&self, agent: AgentId, psi: &Expr) -> Result<(BddRef, BddRef), KbpError> {
        self.check_obs_shape(agent, psi)?;
        let mgr = &self.space.mgr;
        let sat = self.sat_set(psi)?;
        let obs_bits = self.space.obs_bit_set(self.model, agent);
        let hidden: std::collections::BTreeSet<robdd::VarId> =
            self.space.state_bits.difference(&obs_bits).copied().collect();
        let f_obs = mgr.exists(sat, &hidden);
        let care = mgr.exists(self.states, &hidden);
        // Class constancy: lifting the projection back must not add states.
        debug_assert_eq!(mgr.and(self.states, f_obs), sat, "truth not constant on O_i classes");
        Ok((f_obs, care))
    }

    /// ψ must mention, outside knowledge operators, only variables the
    /// agent observes; every outermost knowledge operator must be the
    /// agent's own.
    fn check_obs_shape(&self, agent: AgentId, psi: &Expr) -> Result<(), KbpError> {
        let obs = self.model.protocols[agent].observables();
        self.shape_rec(agent, &obs, psi)
    }

    fn shape_rec(&self, agent: AgentId, obs: &[TVarId], e: &Expr) -> Result<(), KbpError> {
        match e {
            Expr::Knows(i, _) => {
                if *i != agent {
                    return Err(KbpError::Synthesis(format!(
                        "condition for {} contains an outermost knowledge operator of {}",
                        self.model.agents[agent], self.model.agents[*i]
                    )));
                }
                Ok(())
            }
            Expr::Not(a) | Expr::Next(a) => self.shape_rec(agent, obs, a),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Iff(a, b) => {
                self.shape_rec(agent, obs, a)?;
                self.shape_rec(agent, obs, b)
            }
            atom => {
                let mut vars = Vec::new();
                atom.all_vars(&mut vars);
                for v in vars {
                    if !obs.contains(&v) {
                        return Err(KbpError::Synthesis(format!(
                            "condition for {} reads non-observable {} outside a knowledge operator",
                            self.model.agents[agent], self.model.vars[v].name
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// An agent's observation in an explicit state: the typed values of its
/// observable variables, in protocol declaration order.
pub fn observation(
    model: &SystemModel,
    layout: &Layout,
    state: &BitState,
    agent: AgentId,
) -> Vec<u64> {
    model.protocols[agent]
        .observables()
        .iter()
        .map(|&v| layout.get(state, v))
        .collect()
}

/// Local-state value of an agent at a point of an explicit trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LocalState {
    Obs(Vec<u64>),
    Clk(usize, Vec<u64>),
    Spr(Vec<Vec<u64>>),
}

pub fn local_state(
    model: &SystemModel,
    layout: &Layout,
    view: View,
    trace: &Trace,
    agent: AgentId,
    t: usize,
) -> Result<LocalState, KbpError> {
    if t >= trace.states.len() {
        return Err(KbpError::Check(format!(
            "time {t} out of range for a trace of length {}",
            trace.states.len()
        )));
    }
    Ok(match view {
        View::Obs => LocalState::Obs(observation(model, layout, &trace.states[t], agent)),
        View::Clk => LocalState::Clk(t, observation(model, layout, &trace.states[t], agent)),
        View::Spr => LocalState::Spr(
            (0..=t)
                .map(|k| observation(model, layout, &trace.states[k], agent))
                .collect(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{muddy, MuddyVariant};
    use crate::exec::{simulate, LowestIndex, Layout};
    use crate::lang;

    #[test]
    fn local_states_by_view() {
        let kbp = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
        let result =
            crate::synth::synthesize(&kbp, View::Spr, crate::synth::SynthOptions::default())
                .unwrap();
        let model = result.standard_model;
        let layout = Layout::of(&model);
        // muddy = (1,0): Child0 muddy, Child1 clean.
        let muddy_vars = &model.env_decls.iter().find(|d| d.base == "muddy").unwrap().vars;
        let s0 = crate::oracle::enumerate_init_states(&model, &layout, 64)
            .unwrap()
            .into_iter()
            .find(|s| layout.get(s, muddy_vars[0]) == 1 && layout.get(s, muddy_vars[1]) == 0)
            .unwrap();
        let trace = simulate(&model, &layout, &s0, 2, &mut LowestIndex).unwrap();

        // At t = 0, spr is the one-element sequence of the obs value.
        let obs0 = local_state(&model, &layout, View::Obs, &trace, 0, 0).unwrap();
        let spr0 = local_state(&model, &layout, View::Spr, &trace, 0, 0).unwrap();
        match (obs0, spr0) {
            (LocalState::Obs(o), LocalState::Spr(h)) => assert_eq!(h, vec![o]),
            _ => unreachable!(),
        }
        // Clock local states at different times are never equal.
        let c0 = local_state(&model, &layout, View::Clk, &trace, 0, 0).unwrap();
        let c1 = local_state(&model, &layout, View::Clk, &trace, 0, 1).unwrap();
        assert_ne!(c0, c1);
    }
}
