//! End-to-end synthesis on the muddy children family, cross-checked against
//! the explicit-state oracle and hand-computed small instances.

use std::collections::BTreeSet;

use kbp::corpus::{muddy, MuddyVariant};
use kbp::epistemic::View;
use kbp::exec::{simulate, ArmRef, Layout, LowestIndex, Trace};
use kbp::lang::{self, Expr};
use kbp::oracle;
use kbp::sym::SymbolicSpace;
use kbp::synth::{synthesize, SynthOptions};

#[test]
fn muddy_four_initial_set_has_fifteen_states() {
    let model = lang::parse(&muddy(4, 4, MuddyVariant::Spr)).unwrap();
    let space = SymbolicSpace::new(&model, Default::default());
    let s0 = space.initial_set(&model).unwrap();
    // Project onto the muddy[] block: 2^4 - 1 assignments.
    let muddy_bits: BTreeSet<_> = model
        .env_decls
        .iter()
        .find(|d| d.base == "muddy")
        .unwrap()
        .vars
        .iter()
        .flat_map(|&v| space.cur_bits(v).iter().copied())
        .collect();
    let hidden: BTreeSet<_> = space.state_bits.difference(&muddy_bits).copied().collect();
    let projected = space.mgr.exists(s0, &hidden);
    assert_eq!(space.mgr.sat_count(projected, &muddy_bits), Some(15));
    // The full initial set also has 15 states (info is forced, no locals).
    assert_eq!(space.count_states(s0), Some(15));
}

#[test]
fn empty_init_gives_empty_set() {
    let mut text = muddy(2, 2, MuddyVariant::Spr);
    text = text.replace(
        "init_cond = (Exists x:Agent (muddy[x])) /\\ Forall x:Agent (info[x] == muddy[x])",
        "init_cond = false",
    );
    let model = lang::parse(&text).unwrap();
    let space = SymbolicSpace::new(&model, Default::default());
    let s0 = space.initial_set(&model).unwrap();
    assert!(s0.is_zero());
    // Vacuous synthesis: every condition defaults to false, with a warning
    // flag on the result.
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    assert!(result.vacuous);
    assert!(result.conditions.iter().all(|c| c.expr == Expr::Bool(false)));
}

/// The two-child instance, worked by hand over the three initial states:
/// at time 0 a child knows its status exactly when it sees the other child
/// clean.
#[test]
fn muddy_two_condition_is_not_info_other() {
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    // Conditions for the positive formula (knows own status) at time 0.
    for agent in 0..2 {
        let cond = result
            .conditions
            .iter()
            .find(|c| c.agent == agent && c.time == 0 && {
                // positive arm: the formula is the disjunction itself
                matches!(c.formula, Expr::Or(..))
            })
            .expect("positive condition at time 0");
        // Expression over the agent's single current observable: neg info1.
        let info_other = result.transformed.protocols[agent].params[0].var;
        assert_eq!(cond.expr, Expr::not(Expr::Var(info_other)));
        assert_eq!(cond.care_count, Some(2), "two observation classes at time 0");
    }
}

fn first_yes_rounds(model: &lang::SystemModel, trace: &Trace) -> Vec<Vec<bool>> {
    // answers[r][agent]: did the agent emit SayYes at round r+1?
    let yes = model.act_id("SayYes").unwrap();
    trace
        .steps
        .iter()
        .map(|s| s.actions.iter().map(|a| *a == Some(yes)).collect())
        .collect()
}

/// Behavior over every non-empty muddy subset: k muddy children first say
/// Yes at round k; everyone says Yes from round k+1.
fn check_muddy_behavior(n: usize, steps: usize, result: &kbp::synth::SynthesisResult) {
    let model = &result.standard_model;
    let layout = Layout::of(model);
    let inits = oracle::enumerate_init_states(model, &layout, 1 << 16).unwrap();
    let muddy_vars: Vec<_> = model
        .env_decls
        .iter()
        .find(|d| d.base == "muddy")
        .unwrap()
        .vars
        .clone();
    assert_eq!(inits.len(), (1 << n) - 1);
    for s0 in &inits {
        let mask: Vec<bool> = muddy_vars.iter().map(|&v| layout.get(s0, v) != 0).collect();
        let k = mask.iter().filter(|&&m| m).count();
        let trace = simulate(model, &layout, s0, steps, &mut LowestIndex).unwrap();
        let answers = first_yes_rounds(model, &trace);
        for (r, row) in answers.iter().enumerate() {
            let round = r + 1;
            for (agent, &said_yes) in row.iter().enumerate() {
                let expect = if round < k {
                    false
                } else if round == k {
                    mask[agent]
                } else {
                    true
                };
                assert_eq!(
                    said_yes, expect,
                    "n={n} mask={mask:?} round={round} agent={agent}"
                );
            }
        }
    }
}

#[test]
fn muddy_two_and_three_behavior_spr() {
    for n in [2usize, 3] {
        let model = lang::parse(&muddy(n, n, MuddyVariant::Spr)).unwrap();
        let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
        check_muddy_behavior(n, n, &result);
    }
    // One instance past the all-muddy round: everyone keeps saying Yes.
    let model = lang::parse(&muddy(3, 4, MuddyVariant::Spr)).unwrap();
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    check_muddy_behavior(3, 4, &result);
}

#[test]
fn symbolic_and_explicit_synthesis_agree_on_muddy_two() {
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let sym = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    let exp = oracle::explicit_synthesize(&model, View::Spr, 1 << 16).unwrap();
    assert_eq!(sym.conditions.len(), exp.tables.len());
    let layout = &exp.layout;

    // Same realized observations, same verdicts, for every condition.
    for (cond, table) in sym.conditions.iter().zip(&exp.tables) {
        assert_eq!(cond.agent, table.agent);
        assert_eq!(cond.time, table.time);
        assert_eq!(cond.care_count, Some(table.rows.len() as u128));
        let proto = &sym.transformed.protocols[cond.agent];
        for (obs, &truth) in &table.rows {
            // Evaluate the synthesized expression on this observation.
            let mut state = layout.blank();
            for (&v, &value) in proto.observables().iter().zip(obs) {
                layout.set(&mut state, v, value);
            }
            let ctx = kbp::exec::EvalCtx {
                model: &sym.transformed,
                layout,
                actions: None,
                skel: None,
            };
            assert_eq!(
                ctx.eval(&state, &cond.expr),
                truth,
                "condition {} disagrees at {:?}",
                table.describe(&sym.transformed),
                obs
            );
        }
    }

    // Slice agreement: symbolic image equals explicit successor sets.
    for (k, explicit_slice) in exp.slices.iter().enumerate() {
        let symbolic: BTreeSet<Vec<bool>> =
            sym.space.enumerate_states(layout, sym.slices[k]).into_iter().collect();
        let explicit: BTreeSet<Vec<bool>> = explicit_slice.iter().cloned().collect();
        assert_eq!(symbolic, explicit, "slice {k} differs");
    }
}

#[test]
fn knowledge_free_model_synthesizes_to_itself() {
    let src = "\
x: Bool
init_cond = x
agent A \"p\" ( x )
transitions begin x := A.Go end
protocol \"p\" ( x: observable Bool )
begin
if x -> << Go >> [] otherwise -> skip fi;
skip
end
";
    let model = lang::parse(src).unwrap();
    let result = synthesize(&model, View::Clk, SynthOptions::default()).unwrap();
    assert!(result.conditions.is_empty());
    assert_eq!(result.standard_model, model);
    assert_eq!(result.slices.len(), 1);
}

#[test]
fn image_of_all_skip_is_identity() {
    let src = "\
x: Bool
init_cond = x
agent A \"p\" ( x )
protocol \"p\" ( x: observable Bool )
begin
skip;
skip
end
";
    let model = lang::parse(src).unwrap();
    let space = SymbolicSpace::new(&model, Default::default());
    let s0 = space.initial_set(&model).unwrap();
    let programs: Vec<_> = model.protocols.iter().map(|p| p.program.clone()).collect();
    let rel = space.build_step(&model, &kbp::sym::statements_at(&programs, 0), None).unwrap();
    assert_eq!(space.image(s0, &rel), s0);
}

#[test]
fn nondeterministic_arms_are_both_taken() {
    // Two enabled arms: the image contains both outcomes; the explicit
    // agent_step keeps both.
    let src = "\
x: Bool
init_cond = neg x
agent A \"p\" ( x )
transitions begin x := A.Go end
protocol \"p\" ( x: observable Bool )
mine: Bool
init_cond = neg mine
begin
if true -> << Go | mine := true >> [] true -> skip fi
end
";
    let model = lang::parse(src).unwrap();
    let layout = Layout::of(&model);
    let space = SymbolicSpace::new(&model, Default::default());
    let s0 = space.initial_set(&model).unwrap();
    let programs: Vec<_> = model.protocols.iter().map(|p| p.program.clone()).collect();
    let rel = space.build_step(&model, &kbp::sym::statements_at(&programs, 0), None).unwrap();
    let s1 = space.image(s0, &rel);
    assert_eq!(space.count_states(s1), Some(2));

    let inits = oracle::enumerate_init_states(&model, &layout, 64).unwrap();
    assert_eq!(inits.len(), 1);
    let ctx = kbp::exec::EvalCtx { model: &model, layout: &layout, actions: None, skel: None };
    let enabled = kbp::exec::agent_step(&ctx, &inits[0], &model.protocols[0].program.0[0]);
    assert_eq!(enabled, vec![ArmRef::Arm(0), ArmRef::Arm(1)]);
    let succs = kbp::exec::successors(&model, &layout, &inits[0], 0, None);
    let unique: BTreeSet<_> = succs.into_iter().map(|(_, s)| s).collect();
    assert_eq!(unique.len(), 2);
    let symbolic: BTreeSet<_> = space.enumerate_states(&layout, s1).into_iter().collect();
    assert_eq!(unique, symbolic);
}
