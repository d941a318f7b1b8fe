//! Generators for the two model families used throughout the test corpus:
//! the muddy children puzzle and dynamic leader election on a ring with
//! crash failures. Both produce source documents in the input grammar.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuddyVariant {
    /// `info[]` observables: new information per agent per round (muddiness
    /// initially, then whether the agent just said Yes). Meant for the
    /// perfect-recall view.
    Spr,
    /// `said[]` plus other children's `muddy[]` observables, so the current
    /// observation alone carries everything a clock-view agent may use.
    Clk,
}

fn child(i: usize) -> String {
    format!("Child{i}")
}

/// The muddy children model for `n` children running `steps` rounds.
pub fn muddy(n: usize, steps: usize, variant: MuddyVariant) -> String {
    assert!(n >= 2, "muddy children needs at least 2 agents");
    assert!(steps >= 1);
    let mut out = String::new();
    let obs_base = match variant {
        MuddyVariant::Spr => "info",
        MuddyVariant::Clk => "said",
    };
    out.push_str("muddy: Bool[Agent]\n");
    let _ = writeln!(out, "{obs_base}: Bool[Agent]");
    out.push('\n');
    match variant {
        MuddyVariant::Spr => {
            out.push_str(
                "init_cond = (Exists x:Agent (muddy[x])) /\\ Forall x:Agent (info[x] == muddy[x])\n\n",
            );
        }
        MuddyVariant::Clk => {
            out.push_str(
                "init_cond = (Exists x:Agent (muddy[x])) /\\ Forall x:Agent (neg said[x])\n\n",
            );
        }
    }
    for i in 0..n {
        let mut args = Vec::new();
        match variant {
            MuddyVariant::Spr => {
                for j in 1..n {
                    args.push(format!("info[{}]", child((i + j) % n)));
                }
            }
            MuddyVariant::Clk => {
                for j in 1..n {
                    args.push(format!("muddy[{}]", child((i + j) % n)));
                }
                for j in 0..n {
                    args.push(format!("said[{}]", child((i + j) % n)));
                }
            }
        }
        let _ = writeln!(out, "agent {} \"child\" ( {} )", child(i), args.join(", "));
    }
    out.push_str("\ntransitions\nbegin\n");
    let updates: Vec<String> = (0..n)
        .map(|i| format!("{obs_base}[{}] := {}.SayYes", child(i), child(i)))
        .collect();
    let _ = writeln!(out, "{}", updates.join(";\n"));
    out.push_str("end\n\n");

    let mut params = Vec::new();
    match variant {
        MuddyVariant::Spr => {
            for j in 1..n {
                params.push(format!("info{j}: observable Bool"));
            }
        }
        MuddyVariant::Clk => {
            for j in 1..n {
                params.push(format!("muddy{j}: observable Bool"));
            }
            for j in 0..n {
                params.push(format!("said{j}: observable Bool"));
            }
        }
    }
    let _ = writeln!(out, "protocol \"child\" ( {} )", params.join(", "));
    out.push_str("begin\n");
    let stmt = "if (Knows Self muddy[Self]) \\/ (Knows Self neg muddy[Self]) -> << SayYes >>\n\
                [] otherwise -> skip fi";
    let stmts: Vec<&str> = (0..steps).map(|_| stmt).collect();
    let _ = writeln!(out, "{}", stmts.join(";\n"));
    out.push_str("end\n");
    out
}

/// Leader election on a ring of `n` agents running `steps` rounds.
///
/// Agent `i` sends to `(i mod n) + 1`; a crashed agent's input buffer is
/// forwarded in place of the message it would have sent. Buffers start as
/// "from i: 0", the environment crashes an arbitrary subset each round, and
/// `leader` tracks the highest non-crashed agent. Each branch controlling
/// the crash of agent `i` puts the no-crash arm first, so schedule-driven
/// simulation can select crashes by arm index.
pub fn election(n: usize, steps: usize) -> String {
    assert!((2..=9).contains(&n), "election supports 2..=9 agents");
    assert!(steps >= 1);
    let agent = |i: usize| format!("A{i}"); // 1-based
    let mut out = String::new();
    out.push_str("crashed: Bool[Agent]\n");
    let _ = writeln!(out, "leader: 0..{n}");
    let _ = writeln!(out, "num: 0..{n}[Agent]");
    let _ = writeln!(out, "from: 0..{n}[Agent]");
    let _ = writeln!(out, "msg: 0..{n}[Agent]");
    let _ = writeln!(out, "oldfrom: 0..{n}[Agent]");
    let _ = writeln!(out, "oldmsg: 0..{n}[Agent]");
    out.push('\n');

    let mut init = vec![
        format!("leader == {n}"),
        "Forall x:Agent (neg crashed[x])".to_string(),
    ];
    for i in 1..=n {
        init.push(format!("num[{}] == {i}", agent(i)));
        init.push(format!("from[{}] == {i}", agent(i)));
        init.push(format!("msg[{}] == 0", agent(i)));
        init.push(format!("oldfrom[{}] == 0", agent(i)));
        init.push(format!("oldmsg[{}] == 0", agent(i)));
    }
    let _ = writeln!(out, "init_cond = {}", init.join(" /\\ "));
    out.push('\n');

    for i in 1..=n {
        let a = agent(i);
        let _ = writeln!(
            out,
            "agent {a} \"elect\" ( crashed[{a}], num[{a}], from[{a}], msg[{a}] )"
        );
    }
    out.push('\n');

    out.push_str("transitions\nbegin\n");
    let mut stmts: Vec<String> = Vec::new();
    // Crashes first: one nondeterministic choice per agent, no-crash arm 0.
    for i in 1..=n {
        stmts.push(format!(
            "if true -> skip [] true -> crashed[{}] := true fi",
            agent(i)
        ));
    }
    // Leader: highest non-crashed agent, 0 when all crashed.
    stmts.push("leader := 0".to_string());
    for i in 1..=n {
        stmts.push(format!("if neg crashed[{}] -> leader := {i} fi", agent(i)));
    }
    // Snapshot buffers, then deliver around the ring.
    for i in 1..=n {
        stmts.push(format!("oldfrom[{a}] := from[{a}]", a = agent(i)));
        stmts.push(format!("oldmsg[{a}] := msg[{a}]", a = agent(i)));
    }
    for i in 1..=n {
        let a = agent(i);
        let r = agent(i % n + 1);
        let sends: Vec<String> = (1..=n).map(|j| format!("{a}.Send{j}")).collect();
        stmts.push(format!(
            "if (neg crashed[{a}]) /\\ ({}) -> from[{r}] := {i} [] otherwise -> from[{r}] := oldfrom[{a}] fi",
            sends.join(" \\/ ")
        ));
        let arms: Vec<String> = (1..=n)
            .map(|j| format!("(neg crashed[{a}]) /\\ {a}.Send{j} -> msg[{r}] := {j}"))
            .collect();
        stmts.push(format!(
            "if {} [] otherwise -> msg[{r}] := oldmsg[{a}] fi",
            arms.join(" [] ")
        ));
    }
    let _ = writeln!(out, "{}", stmts.join(";\n"));
    out.push_str("end\n\n");

    let _ = writeln!(
        out,
        "protocol \"elect\" ( crashed: Bool, my_num: observable 0..{n}, \
         from_field: observable 0..{n}, message: observable 0..{n} )"
    );
    let _ = writeln!(out, "presumed: 0..{n}");
    let _ = writeln!(out, "init_cond = presumed == {n}");
    out.push_str("begin\n");
    let mut arms: Vec<String> = Vec::new();
    for j in (1..=n).rev() {
        let mut conj = vec!["(neg crashed)".to_string()];
        for y in (j + 1..=n).rev() {
            conj.push(format!("(Knows Self neg leader == {y})"));
        }
        conj.push(format!("neg Knows Self neg leader == {j}"));
        arms.push(format!(
            "{} -> << Send{j} | presumed := {j} >>",
            conj.join(" /\\ ")
        ));
    }
    let stmt = format!("if {} [] otherwise -> skip fi", arms.join("\n[] "));
    let stmts: Vec<&str> = (0..steps).map(|_| stmt.as_str()).collect();
    let _ = writeln!(out, "{}", stmts.join(";\n"));
    out.push_str("end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang;

    #[test]
    fn generated_muddy_parses_and_validates() {
        for variant in [MuddyVariant::Spr, MuddyVariant::Clk] {
            for n in 2..=4 {
                let text = muddy(n, n, variant);
                let model = lang::parse(&text).unwrap();
                lang::ensure_valid(&model).unwrap();
                assert_eq!(model.agents.len(), n);
                assert_eq!(model.horizon(), n);
                assert_eq!(model.kind(), lang::ModelKind::KnowledgeBased);
            }
        }
    }

    #[test]
    fn generated_election_parses_and_validates() {
        for n in 2..=4 {
            let text = election(n, 3);
            let model = lang::parse(&text).unwrap();
            lang::ensure_valid(&model).unwrap();
            assert_eq!(model.agents.len(), n);
            assert_eq!(model.horizon(), 3);
        }
    }

    #[test]
    fn figure_style_muddy_has_expected_shape() {
        let model = lang::parse(&muddy(4, 4, MuddyVariant::Spr)).unwrap();
        assert_eq!(model.agents.len(), 4);
        for p in &model.protocols {
            assert_eq!(p.program.len(), 4);
            assert_eq!(p.params.len(), 3);
            assert!(p.params.iter().all(|b| b.observable));
        }
    }
}
