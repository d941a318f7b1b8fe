//! Implementation checking, bounded model checking with counterexamples,
//! and the event-update product against the slice-based path.

use kbp::corpus::{muddy, MuddyVariant};
use kbp::epistemic::View;
use kbp::exec::Layout;
use kbp::lang::{self, parse_spec_formula, Expr};
use kbp::oracle::{
    apply_update, check_implementation, check_update_formula, model_check_x,
    muddy_update_instance, quotient,
};
use kbp::synth::{emit, parse_sidecar, synthesize, SidecarEntry, SynthOptions};

fn knows_all_formula(model: &lang::SystemModel) -> Expr {
    parse_spec_formula(
        model,
        "Forall x:Agent ((Knows x muddy[x]) \\/ (Knows x neg muddy[x]))",
    )
    .unwrap()
}

#[test]
fn synthesized_output_passes_check_implementation() {
    for (n, view) in [(2, View::Spr), (3, View::Spr), (3, View::Clk)] {
        let model = lang::parse(&muddy(n, n, MuddyVariant::Spr)).unwrap();
        let result = synthesize(&model, view, SynthOptions::default()).unwrap();
        let theta: Vec<SidecarEntry> = result
            .conditions
            .iter()
            .map(|c| SidecarEntry {
                agent: c.agent,
                time: c.time,
                formula: c.formula.clone(),
                expr: c.expr.clone(),
            })
            .collect();
        let report = check_implementation(&model, &theta, view, Default::default()).unwrap();
        assert!(report.pass(), "n={n} view={view}: {}", report.render());
    }
}

#[test]
fn check_implementation_round_trips_through_the_sidecar() {
    let model = lang::parse(&muddy(3, 3, MuddyVariant::Spr)).unwrap();
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    let (_, sidecar) = emit(&result);
    let entries = parse_sidecar(&result.transformed, &sidecar).unwrap();
    let report = check_implementation(&model, &entries, View::Spr, Default::default()).unwrap();
    assert!(report.pass(), "{}", report.render());
}

#[test]
fn wrong_substitution_fails_with_witness() {
    // θ(v⁰) = true for the positive condition: fails at the both-muddy
    // initial state, where neither child knows its status at time 0.
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    let theta: Vec<SidecarEntry> = result
        .conditions
        .iter()
        .map(|c| SidecarEntry {
            agent: c.agent,
            time: c.time,
            formula: c.formula.clone(),
            expr: if c.time == 0 && matches!(c.formula, Expr::Or(..)) {
                Expr::Bool(true)
            } else {
                c.expr.clone()
            },
        })
        .collect();
    let report = check_implementation(&model, &theta, View::Spr, Default::default()).unwrap();
    assert!(!report.pass());
    let failed: Vec<_> = report.entries.iter().filter(|e| !e.pass).collect();
    assert!(!failed.is_empty());
    let muddy_vars =
        report.model.env_decls.iter().find(|d| d.base == "muddy").unwrap().vars.clone();
    // The doctored conditions disagree at time 0 (later times may fail too:
    // the wrong substitution changes the very system the conditions are
    // judged in).
    let at_zero: Vec<_> = failed.iter().filter(|e| e.time == 0).collect();
    assert!(!at_zero.is_empty());
    for entry in at_zero {
        let w = entry.witness.as_ref().expect("fail entries carry a witness");
        // Exactly the states where the child cannot know its status: the
        // other child is muddy there (the both-muddy world is one of them).
        let other = muddy_vars[1 - entry.agent];
        assert_eq!(report.layout.get(&w.state, other), 1, "other child must be muddy");
        // And the trace replays from an initial state to the witness.
        assert_eq!(w.trace.states.len(), 1);
        assert_eq!(w.trace.states[0], w.state);
    }
}

#[test]
fn missing_binding_is_a_domain_gap_error() {
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let err = match check_implementation(&model, &[], View::Spr, Default::default()) {
        Err(e) => e,
        Ok(_) => panic!("empty substitution must be rejected"),
    };
    assert!(err.to_string().contains("does not cover"), "{err}");
}

#[test]
fn model_check_confirms_knowledge_at_completion_and_refutes_below() {
    // Everyone knows from time n-1 on (the all-muddy world completes at
    // n-1); one round earlier a world with n-1 muddy children still has an
    // undecided child.
    let n = 3;
    let model = lang::parse(&muddy(n, n, MuddyVariant::Spr)).unwrap();
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    let standard = &result.standard_model;
    let phi = knows_all_formula(standard);

    // The synthesized spr output carries its own history variables, so the
    // clock view on it realizes the perfect-recall semantics.
    let ok = model_check_x(standard, View::Clk, n, &phi, Default::default()).unwrap();
    assert!(ok.holds, "X^{n} (everyone knows) must hold");
    let boundary = model_check_x(standard, View::Clk, n - 1, &phi, Default::default()).unwrap();
    assert!(boundary.holds, "X^{} must already hold", n - 1);

    let not_yet = model_check_x(standard, View::Clk, n - 2, &phi, Default::default()).unwrap();
    assert!(!not_yet.holds);
    let cex = not_yet.counterexample.expect("refutation carries a trace");
    assert_eq!(cex.trace.states.len(), n - 1);
    // A lone muddy child already knows at round 1, so the witness world
    // needs at least n-1 muddy children.
    let muddy_vars = &not_yet.model.env_decls.iter().find(|d| d.base == "muddy").unwrap().vars;
    let muddy_count: u64 = muddy_vars
        .iter()
        .map(|&v| not_yet.layout.get(&cex.state, v))
        .sum();
    assert!(muddy_count >= (n as u64) - 1, "witness needs ≥ n-1 muddy children");
}

#[test]
fn depth_zero_checks_the_initial_condition() {
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    let phi = parse_spec_formula(&result.standard_model, "Exists x:Agent (muddy[x])").unwrap();
    let ok = model_check_x(&result.standard_model, View::Clk, 0, &phi, Default::default()).unwrap();
    assert!(ok.holds);
}

#[test]
fn update_product_matches_slice_checking_on_muddy() {
    for n in [2usize, 3] {
        let model = lang::parse(&muddy(n, n, MuddyVariant::Spr)).unwrap();
        let layout = Layout::of(&model);
        let (m0, update) = muddy_update_instance(&model, &layout).unwrap();
        assert_eq!(m0.worlds.len(), (1 << n) - 1);

        let phi = knows_all_formula(&model);
        // Iterate the update; φ first holds everywhere after n-1 rounds,
        // matching the slice-based completion profile.
        let mut m = m0.clone();
        let before = m.sat_vec(&model, &layout, &phi).unwrap().iter().all(|&b| b);
        assert!(!before, "nobody-knows worlds exist initially");
        for round in 1..=n {
            m = apply_update(&model, &layout, &m, &update, false).unwrap();
            let all = m.sat_vec(&model, &layout, &phi).unwrap().iter().all(|&b| b);
            assert_eq!(all, round >= n - 1, "round {round} of n={n}");
        }

        // And the [U, T]φ satisfaction clause agrees with the profile:
        // after one update, everyone knows for n=2 but not yet for n=3.
        let worlds: Vec<usize> = (0..m0.worlds.len()).collect();
        let events: Vec<usize> = (0..update.events()).collect();
        let verdict =
            check_update_formula(&model, &layout, &m0, &worlds, &update, &events, &phi).unwrap();
        assert_eq!(verdict, n == 2);
    }
}

#[test]
fn neutral_update_is_isomorphic() {
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let layout = Layout::of(&model);
    let (m0, _) = muddy_update_instance(&model, &layout).unwrap();
    let neutral = kbp::oracle::UpdateStructure {
        equiv: vec![vec![0], vec![0]],
        pre: vec![Expr::Bool(true)],
    };
    let m1 = apply_update(&model, &layout, &m0, &neutral, false).unwrap();
    assert_eq!(m1.worlds, m0.worlds);
    assert_eq!(m1.equiv, m0.equiv);
}

#[test]
fn empty_event_set_is_vacuously_true() {
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let layout = Layout::of(&model);
    let (m0, update) = muddy_update_instance(&model, &layout).unwrap();
    let worlds: Vec<usize> = (0..m0.worlds.len()).collect();
    let verdict =
        check_update_formula(&model, &layout, &m0, &worlds, &update, &[], &Expr::Bool(false))
            .unwrap();
    assert!(verdict);
}

#[test]
fn bisimulation_quotient_preserves_formulas() {
    let model = lang::parse(&muddy(3, 3, MuddyVariant::Spr)).unwrap();
    let layout = Layout::of(&model);
    let (m0, update) = muddy_update_instance(&model, &layout).unwrap();
    let phi = knows_all_formula(&model);
    let mut raw = m0.clone();
    let mut quot = quotient(&m0);
    for _ in 0..3 {
        raw = apply_update(&model, &layout, &raw, &update, false).unwrap();
        quot = apply_update(&model, &layout, &quot, &update, true).unwrap();
        let v_raw: bool = raw.sat_vec(&model, &layout, &phi).unwrap().iter().all(|&b| b);
        let v_quot: bool = quot.sat_vec(&model, &layout, &phi).unwrap().iter().all(|&b| b);
        assert_eq!(v_raw, v_quot);
        assert!(quot.worlds.len() <= raw.worlds.len());
    }
}
