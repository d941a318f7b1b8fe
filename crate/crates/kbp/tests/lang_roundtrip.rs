//! Round-trip stability of the pretty-printer and the frozen expectations
//! for the skeleton and history transforms.

use std::collections::BTreeMap;

use kbp::corpus::{election, muddy, MuddyVariant};
use kbp::lang::{self, Expr, ModelKind, VarOwner};

fn corpus_sources() -> Vec<String> {
    vec![
        muddy(2, 2, MuddyVariant::Spr),
        muddy(3, 3, MuddyVariant::Spr),
        muddy(4, 4, MuddyVariant::Spr),
        muddy(3, 3, MuddyVariant::Clk),
        election(3, 2),
    ]
}

#[test]
fn print_then_parse_is_stable_on_every_corpus_file() {
    for src in corpus_sources() {
        let once = lang::parse(&src).unwrap();
        lang::ensure_valid(&once).unwrap();
        let printed = lang::print_document(&once);
        let twice = lang::parse(&printed).unwrap_or_else(|e| {
            panic!("re-parse failed: {e}\n--- emitted ---\n{printed}")
        });
        lang::ensure_valid(&twice).unwrap();
        assert!(lang::structurally_eq(&once, &twice), "round trip changed the model");
        // And a second round trip is verbatim-stable.
        let printed_again = lang::print_document(&twice);
        let thrice = lang::parse(&printed_again).unwrap();
        assert!(lang::structurally_eq(&twice, &thrice));
    }
}

#[test]
fn skeleton_replaces_figure_two_conditions() {
    // One `if` with a knowledge guard and its negation: two distinct
    // skeleton variables at time 0, and no Knows left in the program.
    let model = lang::parse(&muddy(2, 1, MuddyVariant::Spr)).unwrap();
    let sk = lang::skeleton(&model).unwrap();
    assert_eq!(sk.programs.len(), 2);
    let per_agent0: Vec<_> = sk.vars.iter().filter(|v| v.agent == 0).collect();
    assert_eq!(per_agent0.len(), 2, "guard and its negation are separate conditions");
    assert!(per_agent0.iter().all(|v| v.time == 0));
    assert!(per_agent0.iter().all(|v| v.formula.has_knowledge()));
    for prog in &sk.programs {
        for stmt in &prog.0 {
            for e in kbp::lang::validate::stmt_exprs(stmt) {
                assert!(!e.has_knowledge());
            }
        }
    }
}

#[test]
fn skeleton_indexes_by_time() {
    // The same formula at times 0 and 1 yields distinct skeleton variables.
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let sk = lang::skeleton(&model).unwrap();
    let times: Vec<usize> = sk.vars.iter().filter(|v| v.agent == 0).map(|v| v.time).collect();
    assert_eq!(times.iter().filter(|&&t| t == 0).count(), 2);
    assert_eq!(times.iter().filter(|&&t| t == 1).count(), 2);
}

#[test]
fn skeleton_of_knowledge_free_model_is_identity() {
    let model = lang::parse(&muddy(2, 2, MuddyVariant::Spr)).unwrap();
    let sk = lang::skeleton(&model).unwrap();
    let theta: BTreeMap<usize, Expr> = sk
        .vars
        .iter()
        .enumerate()
        .map(|(i, _)| (i, Expr::Bool(true)))
        .collect();
    let standard = lang::substitute(&model, &sk, &theta).unwrap();
    assert_eq!(standard.kind(), ModelKind::Standard);
    let sk2 = lang::skeleton(&standard).unwrap();
    assert!(sk2.vars.is_empty());
    assert_eq!(sk2.programs, standard.protocols.iter().map(|p| p.program.clone()).collect::<Vec<_>>());
}

#[test]
fn skeleton_keeps_unobservable_parameters_outside_conditions() {
    // Election guards mix `neg crashed` (unobservable parameter) with
    // knowledge conditions: crashed must stay outside the skeleton vars.
    let model = lang::parse(&election(3, 1)).unwrap();
    let sk = lang::skeleton(&model).unwrap();
    for v in &sk.vars {
        let crashed = model.protocols[v.agent]
            .params
            .iter()
            .find(|p| p.name == "crashed")
            .unwrap()
            .var;
        let mut vars = Vec::new();
        v.formula.all_vars(&mut vars);
        assert!(!vars.contains(&crashed));
        assert!(v.formula.has_knowledge());
    }
    // Per agent and time: distinct conditions K(leader≠3), ¬K(leader≠3),
    // K(leader≠2), ¬K(leader≠2), ¬K(leader≠1).
    let per_agent0: Vec<_> = sk.vars.iter().filter(|v| v.agent == 0 && v.time == 0).collect();
    assert_eq!(per_agent0.len(), 5);
}

#[test]
fn history_transform_adds_timed_copies() {
    // OVar = {x}, program length 2 → observables gain x@0, x@1 and
    // statement k gains x@k := x.
    let src = "\
x: Bool
y: Bool
init_cond = true
agent A \"p\" ( x )
transitions begin y := A.Go end
protocol \"p\" ( x: observable Bool )
begin
<< Go >>;
skip
end
";
    let model = lang::parse(src).unwrap();
    let transformed = lang::history_transform(&model).unwrap();
    let proto = &transformed.protocols[0];
    let names: Vec<String> = proto
        .observables()
        .iter()
        .map(|&v| transformed.vars[v].name.clone())
        .collect();
    assert_eq!(names, vec!["x", "A.x@0", "A.x@1"]);
    // Statement 0 records x@0 := x.
    match &proto.program.0[0] {
        lang::Statement::Atomic(a) => {
            assert_eq!(a.assigns.len(), 1);
            let (target, _) = a.assigns[0];
            assert_eq!(transformed.vars[target].name, "A.x@0");
        }
        _ => panic!("expected atomic"),
    }
    // Program length and actions unchanged.
    assert_eq!(proto.program.len(), model.protocols[0].program.len());
}

#[test]
fn history_transform_on_length_zero_program_is_identity() {
    let src = "\
x: Bool
init_cond = x
agent A \"p\" ( x )
protocol \"p\" ( x: observable Bool )
begin
end
";
    let model = lang::parse(src).unwrap();
    let transformed = lang::history_transform(&model).unwrap();
    assert_eq!(model, transformed);
}

#[test]
fn history_transform_counts_on_muddy_four() {
    // Figure-3-sized model, m = 4: each child gains |OVar|·m = 12 copies.
    let model = lang::parse(&muddy(4, 4, MuddyVariant::Spr)).unwrap();
    let transformed = lang::history_transform(&model).unwrap();
    for agent in 0..4 {
        let added: Vec<_> = transformed
            .vars
            .iter()
            .filter(|v| v.owner == VarOwner::Local(agent) && v.history.is_some())
            .collect();
        assert_eq!(added.len(), 12);
    }
    lang::ensure_valid(&transformed).unwrap();
    // The transform preserves program length and action components.
    for (p, q) in model.protocols.iter().zip(&transformed.protocols) {
        assert_eq!(p.program.len(), q.program.len());
    }
    // And the result still round-trips through the printer.
    let printed = lang::print_document(&transformed);
    let reparsed = lang::parse(&printed).unwrap();
    assert!(lang::structurally_eq(&transformed, &reparsed));
}

#[test]
fn guard_scope_violation_is_reported() {
    // A guard reading another agent's local variable.
    let src = "\
x: Bool
init_cond = true
agent A \"p\" ( x )
agent B \"q\" ( x )
transitions begin x := A.Go end
protocol \"p\" ( x: observable Bool )
mine: Bool
begin
<< Go >>
end
protocol \"q\" ( x: observable Bool )
begin
if A.mine -> skip [] otherwise -> skip fi
end
";
    let model = lang::parse(src).unwrap();
    let report = lang::validate(&model);
    assert!(
        report.violations.iter().any(|v| v.rule == "agent-scope"),
        "expected agent-scope violation, got: {report}"
    );
}

#[test]
fn temporal_operator_in_guard_is_reported() {
    let src = "\
x: Bool
init_cond = true
agent A \"p\" ( x )
transitions begin x := A.Go end
protocol \"p\" ( x: observable Bool )
begin
if X (Knows Self x) -> << Go >> [] otherwise -> skip fi
end
";
    let model = lang::parse(src).unwrap();
    let report = lang::validate(&model);
    assert!(
        report.violations.iter().any(|v| v.rule == "atemporal"),
        "expected atemporality violation, got: {report}"
    );
}
