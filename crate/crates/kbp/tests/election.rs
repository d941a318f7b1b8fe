//! Leader election on a ring with crash failures: synthesis, schedule
//! enumeration, the manual characterization of "knows the leader is not n",
//! and the presumed-leader convergence properties.

use std::collections::BTreeMap;

use kbp::corpus::election;
use kbp::epistemic::View;
use kbp::exec::{simulate, Layout, LowestIndex, ScriptedEnv};
use kbp::lang::{self, Expr};
use kbp::oracle::{self, enumerate_runs};
use kbp::synth::{synthesize, SynthesisResult, SynthOptions};

fn synth_election(n: usize, steps: usize) -> SynthesisResult {
    let model = lang::parse(&election(n, steps)).unwrap();
    synthesize(&model, View::Spr, SynthOptions::default()).unwrap()
}

fn env_var(model: &lang::SystemModel, base: &str, agent: usize) -> usize {
    let d = model.env_decls.iter().find(|d| d.base == base).unwrap();
    if d.indexed {
        d.vars[agent]
    } else {
        d.vars[0]
    }
}

#[test]
fn no_crash_run_keeps_presumed_at_n() {
    let result = synth_election(3, 3);
    let model = &result.standard_model;
    let layout = Layout::of(model);
    let inits = oracle::enumerate_init_states(model, &layout, 1 << 16).unwrap();
    assert_eq!(inits.len(), 1, "the election initial state is pinned");
    let trace = simulate(model, &layout, &inits[0], 3, &mut LowestIndex).unwrap();
    for state in &trace.states {
        assert_eq!(layout.get(state, env_var(model, "leader", 0)), 3);
        for agent in 0..3 {
            let presumed = model
                .vars
                .iter()
                .position(|v| v.name == format!("A{}.presumed", agent + 1))
                .unwrap();
            assert_eq!(layout.get(state, presumed), 3);
        }
    }
}

#[test]
fn crash_schedules_are_counted_exactly() {
    // A run is determined by when each agent crashes (or never): (k+1)^n
    // distinct runs of length k. The generator puts each agent's crash
    // branch first in the transitions clause, arm 1 being the crash.
    let result = synth_election(3, 3);
    let model = &result.standard_model;
    let layout = Layout::of(model);
    for k in [2usize, 3] {
        let runs = enumerate_runs(model, &layout, k, 1 << 16).unwrap();
        assert_eq!(runs.len(), (k + 1).pow(3), "runs of length {k}");
    }
}

#[test]
fn scripted_crash_of_agent_three_marks_the_first_message() {
    // Crash A3 at step 0: A1 receives "from 3: 0" (A3's initial buffer),
    // and by the next step presumes a leader below 3.
    let result = synth_election(3, 3);
    let model = &result.standard_model;
    let layout = Layout::of(model);
    let init = oracle::enumerate_init_states(model, &layout, 64).unwrap().remove(0);
    // Env branch index 2 is A3's crash choice; arm 1 crashes.
    let mut resolver = ScriptedEnv { script: BTreeMap::from([((0usize, 2usize), 1usize)]) };
    let trace = simulate(model, &layout, &init, 3, &mut resolver).unwrap();
    let s1 = &trace.states[1];
    assert_eq!(layout.get(s1, env_var(model, "crashed", 2)), 1);
    assert_eq!(layout.get(s1, env_var(model, "leader", 0)), 2);
    assert_eq!(layout.get(s1, env_var(model, "from", 0)), 3, "A1 sees from 3");
    assert_eq!(layout.get(s1, env_var(model, "msg", 0)), 0, "initial buffer value");
    // A1 learns at time 1 and presumes 2 from the next round on.
    let presumed1 = model.vars.iter().position(|v| v.name == "A1.presumed").unwrap();
    assert_eq!(layout.get(&trace.states[2], presumed1), 2);
}

/// The ring positions strictly between `f` and `me` (1-based, walking
/// f → f+1 → ... → me).
fn ring_between(n: u64, f: u64, me: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut at = f % n + 1;
    while at != me {
        out.push(at);
        at = at % n + 1;
    }
    out
}

/// The manual characterization: after its round-j message (f, y), an agent
/// `me` learns that agent `n` is not the leader when y is a real value
/// below n, or the message is "from n: 0" (n failed in the first step), or
/// the from-field proves a chain of failures through n.
fn new_info_rules_out_n(n: u64, me: u64, f: u64, y: u64) -> bool {
    (1..n).contains(&y) || (f == n && y == 0) || ring_between(n, f, me).contains(&n)
}

#[test]
fn synthesized_condition_matches_manual_characterization() {
    // Oracle tables for `Knows Self neg leader == 3`, against the 4-clause
    // predicate unfolded over the observation history, on every realized
    // observation at every step.
    let n = 3u64;
    let steps = 3;
    let model = lang::parse(&election(n as usize, steps)).unwrap();
    let exact = oracle::explicit_synthesize(&model, View::Spr, 1 << 16).unwrap();
    let transformed = &exact.transformed;

    // The positive condition `Knows Self neg leader == 3` per (agent, time).
    let mut checked = 0;
    for table in &exact.tables {
        let is_positive_l3 = match &table.formula {
            Expr::Knows(_, body) => {
                matches!(**body, Expr::Not(ref inner) if matches!(**inner, Expr::EqConst(v, 3) if transformed.vars[v].name == "leader"))
            }
            _ => false,
        };
        if !is_positive_l3 {
            continue;
        }
        checked += 1;
        let me = table.agent as u64 + 1;
        let t = table.time;
        // Observation layout: params (my_num, from_field, message), then
        // history copies base-major, time-minor: my_num@0..@{m-1}, ...
        let m = transformed.horizon();
        for (obs, &truth) in &table.rows {
            let value = |base_ix: usize, time: usize| -> u64 {
                if time == t {
                    obs[base_ix]
                } else {
                    obs[3 + base_ix * m + time]
                }
            };
            let mut manual = false;
            for j in 1..=t {
                let f = value(1, j);
                let y = value(2, j);
                if new_info_rules_out_n(n, me, f, y) {
                    manual = true;
                }
            }
            assert_eq!(
                truth, manual,
                "A{me} time {t} obs {obs:?}: oracle={truth} manual={manual}"
            );
        }
    }
    assert!(checked >= 3 * steps - 3, "positive condition present per agent per time 1..");
}

#[test]
fn presumed_leader_dominates_and_converges() {
    // Over every crash schedule: a non-crashed agent's presumed leader is
    // always ≥ the actual leader, and two crash-free steps let every
    // non-crashed agent agree with the actual leader.
    let steps = 3;
    let result = synth_election(3, steps);
    let model = &result.standard_model;
    let layout = Layout::of(model);
    let runs = enumerate_runs(model, &layout, steps, 1 << 16).unwrap();
    assert_eq!(runs.len(), (steps + 1).pow(3));
    for run in &runs {
        for (t, state) in run.iter().enumerate() {
            let leader = layout.get(state, env_var(model, "leader", 0));
            for agent in 0..3usize {
                if layout.get(state, env_var(model, "crashed", agent)) == 1 {
                    continue;
                }
                let presumed = model
                    .vars
                    .iter()
                    .position(|v| v.name == format!("A{}.presumed", agent + 1))
                    .unwrap();
                let p = layout.get(state, presumed);
                assert!(
                    p >= leader,
                    "run step {t}: A{} presumes {p} below the leader {leader}",
                    agent + 1
                );
                // Convergence: no crashes in the two steps before t means
                // presumed equals the actual leader.
                if t >= 2 {
                    let stable = (0..3).all(|a| {
                        layout.get(&run[t - 2], env_var(model, "crashed", a))
                            == layout.get(state, env_var(model, "crashed", a))
                    });
                    if stable {
                        assert_eq!(
                            p,
                            leader,
                            "run step {t}: A{} should have converged",
                            agent + 1
                        );
                    }
                }
            }
        }
    }
}
