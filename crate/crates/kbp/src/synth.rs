//! The synthesizer: incremental construction of the substitution θ and the
//! slice sequence M_0..M_N. At each time step the knowledge conditions due
//! at that step are extracted as boolean expressions over the owning
//! agent's observable variables (with don't-care simplification against the
//! realized observations), then the step relation resolved by the partial θ
//! advances the slice.

use std::collections::{BTreeMap, HashMap};

use robdd::{BddManager, BddRef, VarId};

use crate::epistemic::{EpistemicStructure, View};
use crate::error::KbpError;
use crate::lang::model::*;
use crate::lang::transform::{history_transform, skeleton, substitute, Skeleton};
use crate::lang::{ensure_valid, parse_agent_formula, Printer};
use crate::sym::{statements_at, OrderOptions, SymbolicSpace};

#[derive(Debug, Clone, Copy, Default)]
pub struct SynthOptions {
    pub order: OrderOptions,
}

/// One synthesized condition: the replaced formula, the expression over
/// observables, its function as a BDD over the observation bits, and the
/// care set of realized observations.
pub struct CondInfo {
    pub agent: AgentId,
    pub time: usize,
    pub formula: Expr,
    pub expr: Expr,
    pub obs_fn: BddRef,
    pub care: BddRef,
    pub care_count: Option<u128>,
}

pub struct SynthesisResult {
    pub view: View,
    /// The model synthesis actually ran on: the history transform of the
    /// input under spr, the input itself under clk.
    pub transformed: SystemModel,
    pub skeleton: Skeleton,
    /// Indexed by skeleton variable id.
    pub conditions: Vec<CondInfo>,
    pub standard_model: SystemModel,
    /// S_0..S_N, where N is the last time any knowledge condition occurs.
    pub slices: Vec<BddRef>,
    pub space: SymbolicSpace,
    /// The initial set was empty: every condition defaulted to `false`.
    pub vacuous: bool,
}

impl SynthesisResult {
    pub fn theta_exprs(&self) -> BTreeMap<SkelId, Expr> {
        self.conditions.iter().enumerate().map(|(i, c)| (i, c.expr.clone())).collect()
    }

    pub fn slice_counts(&self) -> Vec<Option<u128>> {
        self.slices.iter().map(|&s| self.space.count_states(s)).collect()
    }
}

/// Synthesizes the implementation of a knowledge-based model with respect
/// to the clock or synchronous-perfect-recall view.
pub fn synthesize(
    model: &SystemModel,
    view: View,
    opts: SynthOptions,
) -> Result<SynthesisResult, KbpError> {
    ensure_valid(model)?;
    let transformed = match view {
        View::Clk => model.clone(),
        View::Spr => history_transform(model)?,
        View::Obs => {
            return Err(KbpError::Synthesis(
                "synthesis is supported for the clk and spr views only".into(),
            ))
        }
    };
    let sk = skeleton(&transformed)?;
    let space = SymbolicSpace::new(&transformed, opts.order);
    let s0 = space.initial_set(&transformed)?;
    let vacuous = s0.is_zero();

    let mut conditions: Vec<Option<CondInfo>> = (0..sk.vars.len()).map(|_| None).collect();
    let mut theta_bdds: BTreeMap<SkelId, BddRef> = BTreeMap::new();
    let mut slices = vec![s0];

    if let Some(last) = sk.max_time() {
        for k in 0..=last {
            let m_k = EpistemicStructure::new(&space, &transformed, slices[k]);
            let due: Vec<(SkelId, usize)> =
                sk.at_time(k).map(|(id, sv)| (id, sv.agent)).collect();
            for (id, _) in due {
                let cond = extract_condition(&m_k, &sk.vars[id])?;
                theta_bdds.insert(id, cond.obs_fn);
                conditions[id] = Some(cond);
            }
            if k < last {
                let stmts = statements_at(&sk.programs, k);
                let rel = space.build_step(&transformed, &stmts, Some(&theta_bdds))?;
                slices.push(space.image(slices[k], &rel));
            }
        }
    }

    let conditions: Vec<CondInfo> = conditions.into_iter().map(|c| c.unwrap()).collect();
    let theta: BTreeMap<SkelId, Expr> =
        conditions.iter().enumerate().map(|(i, c)| (i, c.expr.clone())).collect();
    let standard_model = substitute(&transformed, &sk, &theta)?;
    if let Err(e) = ensure_valid(&standard_model) {
        return Err(KbpError::Internal(format!("synthesized model fails validation: {e}")));
    }
    Ok(SynthesisResult {
        view,
        transformed,
        skeleton: sk,
        conditions,
        standard_model,
        slices,
        space,
        vacuous,
    })
}

/// Extracts a boolean expression over the agent's observables that agrees
/// with the observation-level truth of `sv.formula` on every realized
/// observation; unrealized observations take the generalized cofactor's
/// value and the printed cover is exact for it.
pub fn extract_condition(
    m_k: &EpistemicStructure,
    sv: &crate::lang::SkeletonVar,
) -> Result<CondInfo, KbpError> {
    let mgr = &m_k.space.mgr;
    let (f_obs, care) = m_k.obs_sat(sv.agent, &sv.formula)?;
    let obs_fn = if care.is_zero() { mgr.zero() } else { mgr.restrict(f_obs, care) };
    let obs_bits = m_k.space.obs_bit_set(m_k.model, sv.agent);
    let care_count = mgr.sat_count(care, &obs_bits);
    let cover = isop_cover(mgr, obs_fn);
    let expr = cover_to_expr(m_k.model, m_k.space, sv.agent, &cover);
    Ok(CondInfo {
        agent: sv.agent,
        time: sv.time,
        formula: sv.formula.clone(),
        expr,
        obs_fn,
        care,
        care_count,
    })
}

/// A product of literals over observation bits.
pub type Cube = Vec<(VarId, bool)>;

/// Irredundant sum-of-products of `f` by the interval-cover recursion on
/// `[f, f]` (shortest-cube first at each branch point).
pub fn isop_cover(mgr: &BddManager, f: BddRef) -> Vec<Cube> {
    let mut memo = HashMap::new();
    let (cover, g) = isop(mgr, f, f, &mut memo);
    debug_assert_eq!(g, f, "exact cover must rebuild the function");
    cover
}

#[allow(clippy::type_complexity)]
fn isop(
    mgr: &BddManager,
    l: BddRef,
    u: BddRef,
    memo: &mut HashMap<(BddRef, BddRef), (Vec<Cube>, BddRef)>,
) -> (Vec<Cube>, BddRef) {
    if l.is_zero() {
        return (Vec::new(), mgr.zero());
    }
    if u.is_one() {
        return (vec![Vec::new()], mgr.one());
    }
    if let Some(hit) = memo.get(&(l, u)) {
        return hit.clone();
    }
    let v = top_var(mgr, l, u);
    let (l0, l1) = cofactors(mgr, l, v);
    let (u0, u1) = cofactors(mgr, u, v);

    let (mut cover0, f0) = isop(mgr, mgr.and(l0, mgr.not(u1)), u0, memo);
    let (mut cover1, f1) = isop(mgr, mgr.and(l1, mgr.not(u0)), u1, memo);
    let lnew = mgr.or(mgr.and(l0, mgr.not(f0)), mgr.and(l1, mgr.not(f1)));
    let (cover_d, fd) = isop(mgr, lnew, mgr.and(u0, u1), memo);

    let lit = mgr.mk_var(v);
    let f = mgr.or(
        mgr.or(mgr.and(mgr.not(lit), f0), mgr.and(lit, f1)),
        fd,
    );
    for c in &mut cover0 {
        c.insert(0, (v, false));
    }
    for c in &mut cover1 {
        c.insert(0, (v, true));
    }
    let mut cover = cover0;
    cover.extend(cover1);
    cover.extend(cover_d);
    memo.insert((l, u), (cover.clone(), f));
    (cover, f)
}

fn top_var(mgr: &BddManager, a: BddRef, b: BddRef) -> VarId {
    match (mgr.children(a), mgr.children(b)) {
        (Some((va, ..)), Some((vb, ..))) => va.min(vb),
        (Some((va, ..)), None) => va,
        (None, Some((vb, ..))) => vb,
        (None, None) => unreachable!("terminal cases handled above"),
    }
}

fn cofactors(mgr: &BddManager, f: BddRef, v: VarId) -> (BddRef, BddRef) {
    match mgr.children(f) {
        Some((var, low, high)) if var == v => (low, high),
        _ => (f, f),
    }
}

/// Renders a cube cover as an expression over typed observable variables:
/// boolean bits become literals, constrained multi-bit variables become
/// disjunctions of `v == c` over the consistent in-range values. Cubes that
/// only cover invalid encodings are dropped.
fn cover_to_expr(
    model: &SystemModel,
    space: &SymbolicSpace,
    agent: AgentId,
    cover: &[Cube],
) -> Expr {
    // observation bit → (typed var, bit position)
    let mut of_bit: BTreeMap<VarId, (TVarId, usize)> = BTreeMap::new();
    let obs = model.protocols[agent].observables();
    for &tv in &obs {
        for (j, &b) in space.cur_bits(tv).iter().enumerate() {
            of_bit.insert(b, (tv, j));
        }
    }
    let mut terms = Vec::new();
    'cubes: for cube in cover {
        let mut per_var: BTreeMap<TVarId, Vec<(usize, bool)>> = BTreeMap::new();
        for &(bit, value) in cube {
            let (tv, j) = of_bit[&bit];
            per_var.entry(tv).or_default().push((j, value));
        }
        let mut lits = Vec::new();
        // Deterministic output: follow the observable declaration order.
        for &tv in &obs {
            let Some(constraints) = per_var.get(&tv) else { continue };
            match model.vars[tv].ty {
                Ty::Bool => {
                    let (_, value) = constraints[0];
                    lits.push(if value {
                        Expr::Var(tv)
                    } else {
                        Expr::not(Expr::Var(tv))
                    });
                }
                _ => {
                    let domain = model.vars[tv].ty.domain();
                    let consistent: Vec<u64> = (0..domain)
                        .filter(|d| constraints.iter().all(|&(j, v)| (d >> j & 1 == 1) == v))
                        .collect();
                    if consistent.is_empty() {
                        continue 'cubes; // covers invalid encodings only
                    }
                    if consistent.len() as u64 == domain {
                        continue; // no constraint on the valid range
                    }
                    lits.push(Expr::disj(consistent.into_iter().map(|d| Expr::EqConst(tv, d))));
                }
            }
        }
        terms.push(Expr::conj(lits));
    }
    Expr::disj(terms)
}

/// Emits the synthesized standard model plus the sidecar mapping: one
/// record per condition with the agent, time, replaced formula, synthesized
/// expression and the number of realized observations.
pub fn emit(result: &SynthesisResult) -> (String, String) {
    let document = crate::lang::print_document(&result.standard_model);
    let mut sidecar = String::new();
    use std::fmt::Write as _;
    for c in &result.conditions {
        let printer = Printer::for_agent(&result.transformed, c.agent);
        let care = c
            .care_count
            .map(|n| n.to_string())
            .unwrap_or_else(|| "overflow".to_string());
        let _ = writeln!(
            sidecar,
            "condition agent={} time={} care={}",
            result.transformed.agents[c.agent], c.time, care
        );
        let _ = writeln!(sidecar, "formula {}", printer.formula(&c.formula));
        let _ = writeln!(sidecar, "expr {}", printer.formula(&c.expr));
        sidecar.push_str("end\n");
    }
    (document, sidecar)
}

/// A sidecar record, re-parsed.
pub struct SidecarEntry {
    pub agent: AgentId,
    pub time: usize,
    pub formula: Expr,
    pub expr: Expr,
}

/// Parses a sidecar mapping against the (transformed) model it was written
/// for.
pub fn parse_sidecar(model: &SystemModel, text: &str) -> Result<Vec<SidecarEntry>, KbpError> {
    let bad = |msg: &str, line: usize| KbpError::Check(format!("sidecar line {}: {msg}", line + 1));
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((n, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("--") {
            continue;
        }
        let rest = line
            .strip_prefix("condition ")
            .ok_or_else(|| bad("expected `condition agent=... time=... care=...`", n))?;
        let mut agent = None;
        let mut time = None;
        for field in rest.split_whitespace() {
            if let Some(v) = field.strip_prefix("agent=") {
                agent = model.agent_id(v);
                if agent.is_none() {
                    return Err(bad(&format!("unknown agent {v}"), n));
                }
            } else if let Some(v) = field.strip_prefix("time=") {
                time = v.parse::<usize>().ok();
            }
        }
        let agent = agent.ok_or_else(|| bad("missing agent=", n))?;
        let time = time.ok_or_else(|| bad("missing time=", n))?;
        let (fn_, formula_line) = lines.next().ok_or_else(|| bad("missing formula line", n))?;
        let formula_text = formula_line
            .trim()
            .strip_prefix("formula ")
            .ok_or_else(|| bad("expected `formula <text>`", fn_))?;
        let (en, expr_line) = lines.next().ok_or_else(|| bad("missing expr line", n))?;
        let expr_text = expr_line
            .trim()
            .strip_prefix("expr ")
            .ok_or_else(|| bad("expected `expr <text>`", en))?;
        let (endn, end_line) = lines.next().ok_or_else(|| bad("missing end line", n))?;
        if end_line.trim() != "end" {
            return Err(bad("expected `end`", endn));
        }
        out.push(SidecarEntry {
            agent,
            time,
            formula: parse_agent_formula(model, agent, formula_text)?,
            expr: parse_agent_formula(model, agent, expr_text)?,
        });
    }
    Ok(out)
}
