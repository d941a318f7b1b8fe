//! The two source-to-source transforms: skeleton extraction (maximal
//! knowledge subformulas become time-indexed placeholder variables) and the
//! history-variable transform that reduces perfect recall to the clock view.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::model::*;
use super::print::Printer;
use crate::error::KbpError;

/// A knowledge condition replaced at a given time in a given agent's
/// program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonVar {
    pub agent: AgentId,
    pub time: usize,
    pub formula: Expr,
}

#[derive(Debug, Clone, Default)]
pub struct Skeleton {
    /// Per-agent programs with every replaced condition swapped for
    /// [`Expr::SkelVar`].
    pub programs: Vec<Program>,
    pub vars: Vec<SkeletonVar>,
}

impl Skeleton {
    /// Largest time of occurrence of any skeleton variable, if any.
    pub fn max_time(&self) -> Option<usize> {
        self.vars.iter().map(|v| v.time).max()
    }

    pub fn at_time(&self, t: usize) -> impl Iterator<Item = (SkelId, &SkeletonVar)> {
        self.vars.iter().enumerate().filter(move |(_, v)| v.time == t)
    }
}

/// Replaces every maximal subformula that contains a knowledge operator and
/// no non-observable parameter variable by a fresh `v_φ^t`, where `t` is the
/// 0-based index of the enclosing statement.
pub fn skeleton(model: &SystemModel) -> Result<Skeleton, KbpError> {
    let mut sk = Skeleton::default();
    let mut interned: HashMap<(AgentId, usize, Expr), SkelId> = HashMap::new();
    for (agent, proto) in model.protocols.iter().enumerate() {
        let nonobs: BTreeSet<TVarId> = proto
            .params
            .iter()
            .filter(|p| !p.observable)
            .map(|p| p.var)
            .collect();
        let mut prog = Vec::new();
        for (time, stmt) in proto.program.0.iter().enumerate() {
            let mut ctx = ReplaceCtx {
                model,
                agent,
                time,
                nonobs: &nonobs,
                interned: &mut interned,
                vars: &mut sk.vars,
            };
            prog.push(ctx.statement(stmt)?);
        }
        sk.programs.push(Program(prog));
    }
    Ok(sk)
}

struct ReplaceCtx<'a> {
    model: &'a SystemModel,
    agent: AgentId,
    time: usize,
    nonobs: &'a BTreeSet<TVarId>,
    interned: &'a mut HashMap<(AgentId, usize, Expr), SkelId>,
    vars: &'a mut Vec<SkeletonVar>,
}

impl ReplaceCtx<'_> {
    fn statement(&mut self, stmt: &Statement) -> Result<Statement, KbpError> {
        Ok(match stmt {
            Statement::Atomic(a) => Statement::Atomic(self.atomic(a)?),
            Statement::Branch(arms) => {
                let mut out = Vec::new();
                for arm in arms {
                    out.push(Arm { guard: self.replace(&arm.guard)?, body: self.atomic(&arm.body)? });
                }
                Statement::Branch(out)
            }
        })
    }

    fn atomic(&mut self, a: &AtomicStatement) -> Result<AtomicStatement, KbpError> {
        let mut assigns = Vec::new();
        for (t, rhs) in &a.assigns {
            let rhs = match rhs {
                Rhs::Bool(e) => Rhs::Bool(self.replace(e)?),
                other => other.clone(),
            };
            assigns.push((*t, rhs));
        }
        Ok(AtomicStatement { action: a.action, assigns })
    }

    fn blocked(&self, e: &Expr) -> bool {
        let mut vars = Vec::new();
        e.all_vars(&mut vars);
        vars.iter().any(|v| self.nonobs.contains(v))
    }

    fn replace(&mut self, e: &Expr) -> Result<Expr, KbpError> {
        if !e.has_knowledge() {
            return Ok(e.clone());
        }
        if !self.blocked(e) {
            let key = (self.agent, self.time, e.clone());
            let id = match self.interned.get(&key) {
                Some(&id) => id,
                None => {
                    let id = self.vars.len();
                    self.vars.push(SkeletonVar {
                        agent: self.agent,
                        time: self.time,
                        formula: e.clone(),
                    });
                    self.interned.insert(key, id);
                    id
                }
            };
            return Ok(Expr::SkelVar(id));
        }
        // Blocked by a non-observable parameter: recurse into the structure.
        match e {
            Expr::Not(a) => Ok(Expr::not(self.replace(a)?)),
            Expr::And(a, b) => Ok(Expr::and(self.replace(a)?, self.replace(b)?)),
            Expr::Or(a, b) => Ok(Expr::or(self.replace(a)?, self.replace(b)?)),
            Expr::Iff(a, b) => {
                Ok(Expr::Iff(Box::new(self.replace(a)?), Box::new(self.replace(b)?)))
            }
            Expr::Knows(..) => Err(KbpError::Synthesis(format!(
                "{}, statement {}: knowledge condition {} mixes a knowledge operator \
                 with non-observable parameters at every enclosing level",
                self.model.agents[self.agent],
                self.time,
                Printer::for_agent(self.model, self.agent).formula(e),
            ))),
            other => Ok(other.clone()),
        }
    }
}

/// The history-variable transform: every observable variable `v` of agent
/// `i` gains observable local copies `v@k` for `0 ≤ k < m`, recorded by
/// simultaneous assignments `v@k := v` added to the statement at time `k`
/// (on every arm, and on a fresh fallthrough arm so recording is
/// unconditional). History variables start at zero so that a slice at time
/// `t` carries exactly the observations made strictly before `t`.
pub fn history_transform(model: &SystemModel) -> Result<SystemModel, KbpError> {
    let mut out = model.clone();
    let m = model.horizon();
    if m == 0 {
        return Ok(out);
    }
    for (agent, proto) in model.protocols.iter().enumerate() {
        let obs = proto.observables();
        let mut copies: Vec<Vec<TVarId>> = Vec::new(); // [obs index][k]
        let taken: BTreeSet<String> = proto
            .params
            .iter()
            .map(|p| p.name.clone())
            .chain(proto.locals.iter().map(|(v, _)| {
                let full = &model.vars[*v].name;
                full.split_once('.').map_or(full.clone(), |(_, n)| n.to_string())
            }))
            .collect();
        for &v in &obs {
            let base_name = proto
                .local_name(model, v)
                .expect("observable outside protocol scope");
            let mut per_time = Vec::new();
            for k in 0..m {
                let bare = format!("{base_name}@{k}");
                if taken.contains(&bare) {
                    return Err(KbpError::Synthesis(format!(
                        "{}: history variable {bare} collides with an existing identifier",
                        model.agents[agent]
                    )));
                }
                let tv = out.vars.len();
                out.vars.push(TypedVar {
                    name: format!("{}.{bare}", model.agents[agent]),
                    ty: model.vars[v].ty.clone(),
                    owner: VarOwner::Local(agent),
                    history: Some(HistoryInfo { base: v, time: k }),
                });
                out.protocols[agent].locals.push((tv, true));
                per_time.push(tv);
            }
            copies.push(per_time);
        }

        // Initialize every history copy to zero.
        let zeros = copies.iter().flatten().map(|&tv| match out.vars[tv].ty {
            Ty::Bool => Expr::not(Expr::Var(tv)),
            _ => Expr::EqConst(tv, 0),
        });
        let existing = match &out.protocols[agent].init {
            Expr::Bool(true) => None,
            other => Some(other.clone()),
        };
        out.protocols[agent].init = Expr::conj(existing.into_iter().chain(zeros));

        // Record observations at each time step.
        let program = &mut out.protocols[agent].program;
        for (k, stmt) in program.0.iter_mut().enumerate() {
            let recorder: Vec<(TVarId, Rhs)> = obs
                .iter()
                .enumerate()
                .map(|(ix, &v)| {
                    let tv = copies[ix][k];
                    let rhs = match out.vars[v].ty {
                        Ty::Bool => Rhs::Bool(Expr::Var(v)),
                        _ => Rhs::Copy(v),
                    };
                    (tv, rhs)
                })
                .collect();
            match stmt {
                Statement::Atomic(a) => a.assigns.extend(recorder),
                Statement::Branch(arms) => {
                    for arm in arms.iter_mut() {
                        arm.body.assigns.extend(recorder.iter().cloned());
                    }
                    // Recording must happen even when no guard holds, so the
                    // implicit skip arm becomes explicit — unless the last
                    // arm is already the negated disjunction of the others
                    // (what `otherwise` desugars to).
                    let exhaustive = arms.len() > 1
                        && arms.last().unwrap().guard
                            == Expr::not(Expr::disj(
                                arms[..arms.len() - 1].iter().map(|a| a.guard.clone()),
                            ));
                    if !exhaustive {
                        let fallthrough_guard = Expr::not(Expr::disj(
                            arms.iter().map(|a| a.guard.clone()),
                        ));
                        arms.push(Arm {
                            guard: fallthrough_guard,
                            body: AtomicStatement { action: None, assigns: recorder },
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Applies a substitution to skeleton programs, producing a standard model.
/// Every image must read only the owning agent's observable variables.
pub fn substitute(
    model: &SystemModel,
    sk: &Skeleton,
    theta: &BTreeMap<SkelId, Expr>,
) -> Result<SystemModel, KbpError> {
    for (id, var) in sk.vars.iter().enumerate() {
        let image = theta.get(&id).ok_or_else(|| {
            KbpError::Synthesis(format!(
                "no binding for skeleton variable of {} at time {}",
                model.agents[var.agent], var.time
            ))
        })?;
        let obs: BTreeSet<TVarId> = model.protocols[var.agent].observables().into_iter().collect();
        let mut vars = Vec::new();
        image.all_vars(&mut vars);
        for v in vars {
            if !obs.contains(&v) {
                return Err(KbpError::Synthesis(format!(
                    "substitution image for {} at time {} reads non-observable {}",
                    model.agents[var.agent], var.time, model.vars[v].name
                )));
            }
        }
        if image.has_knowledge() {
            return Err(KbpError::Synthesis(
                "substitution image contains a knowledge operator".into(),
            ));
        }
    }
    let mut out = model.clone();
    for (agent, prog) in sk.programs.iter().enumerate() {
        let resolved = Program(
            prog.0
                .iter()
                .map(|stmt| map_stmt_exprs(stmt, &|e| resolve(e, theta)))
                .collect(),
        );
        out.protocols[agent].program = resolved;
    }
    Ok(out)
}

fn resolve(e: &Expr, theta: &BTreeMap<SkelId, Expr>) -> Expr {
    e.map(&|node| match node {
        Expr::SkelVar(id) => theta[&id].clone(),
        other => other,
    })
}

pub(crate) fn map_stmt_exprs(stmt: &Statement, f: &impl Fn(&Expr) -> Expr) -> Statement {
    let map_atomic = |a: &AtomicStatement| AtomicStatement {
        action: a.action,
        assigns: a
            .assigns
            .iter()
            .map(|(t, rhs)| {
                let rhs = match rhs {
                    Rhs::Bool(e) => Rhs::Bool(f(e)),
                    other => other.clone(),
                };
                (*t, rhs)
            })
            .collect(),
    };
    match stmt {
        Statement::Atomic(a) => Statement::Atomic(map_atomic(a)),
        Statement::Branch(arms) => Statement::Branch(
            arms.iter()
                .map(|arm| Arm { guard: f(&arm.guard), body: map_atomic(&arm.body) })
                .collect(),
        ),
    }
}
