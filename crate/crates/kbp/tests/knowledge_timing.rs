//! Ground truth for knowledge-completion timing on muddy children, by the
//! explicit path only: enumerate initial states, step the synthesized
//! program explicitly, evaluate knowledge by partition sweeps. With k muddy
//! children, the muddy ones know their status at time k-1 and the clean
//! ones at time k, so "everyone knows" first holds at time n-1 across all
//! worlds (the all-muddy world completes at n-1, worlds with a clean child
//! by n-1 as well).

use kbp::corpus::{muddy, MuddyVariant};
use kbp::epistemic::View;
use kbp::exec::{successors, Layout};
use kbp::lang::{self, parse_spec_formula};
use kbp::oracle::{enumerate_init_states, ExplicitModel};
use kbp::synth::{synthesize, SynthOptions};

/// Times `0..=horizon` at which every reachable state satisfies
/// "every child knows whether it is muddy", computed explicitly.
fn explicit_completion_profile(n: usize) -> Vec<bool> {
    let model = lang::parse(&muddy(n, n, MuddyVariant::Spr)).unwrap();
    let result = synthesize(&model, View::Spr, SynthOptions::default()).unwrap();
    let standard = result.standard_model;
    let layout = Layout::of(&standard);
    let phi = parse_spec_formula(
        &standard,
        "Forall x:Agent ((Knows x muddy[x]) \\/ (Knows x neg muddy[x]))",
    )
    .unwrap();

    let mut slice = enumerate_init_states(&standard, &layout, 1 << 16).unwrap();
    let mut out = Vec::new();
    for t in 0..=standard.horizon() {
        let m = ExplicitModel::from_slice(&standard, &layout, slice.clone());
        let sat = m.sat_vec(&standard, &layout, &phi).unwrap();
        out.push(sat.iter().all(|&b| b));
        if t < standard.horizon() {
            let mut next = std::collections::BTreeSet::new();
            for s in &slice {
                for (_, succ) in successors(&standard, &layout, s, t, None) {
                    next.insert(succ);
                }
            }
            slice = next.into_iter().collect();
        }
    }
    out
}

#[test]
fn everyone_knows_first_at_time_n_minus_one() {
    for n in [2usize, 3, 4] {
        let profile = explicit_completion_profile(n);
        for (t, &all_know) in profile.iter().enumerate() {
            assert_eq!(
                all_know,
                t >= n - 1,
                "n={n}: completion profile {profile:?} wrong at time {t}"
            );
        }
    }
}
