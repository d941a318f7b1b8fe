//! Event-update product on explicit epistemic models: worlds pair with
//! events whose preconditions they satisfy, indistinguishability is
//! componentwise, and valuations carry over (propositions never change).
//! An optional quotient by the maximal bisimulation keeps products small.

use std::collections::BTreeMap;

use super::ExplicitModel;
use crate::error::KbpError;
use crate::exec::{BitState, Layout};
use crate::lang::model::*;

/// `(E, {∼_i^E}, pre)`: events, per-agent event equivalences (class id per
/// event) and one precondition formula per event.
#[derive(Debug, Clone)]
pub struct UpdateStructure {
    pub equiv: Vec<Vec<usize>>,
    pub pre: Vec<Expr>,
}

impl UpdateStructure {
    pub fn events(&self) -> usize {
        self.pre.len()
    }
}

/// The product `M ∘ U`: worlds `(w, e)` with `M, w ⊨ pre(e)`, related for
/// agent `i` when both components are, labeled by `w`'s valuation.
pub fn apply_update(
    model: &SystemModel,
    layout: &Layout,
    m: &ExplicitModel,
    u: &UpdateStructure,
    quotient_result: bool,
) -> Result<ExplicitModel, KbpError> {
    let pre_sat: Vec<Vec<bool>> = u
        .pre
        .iter()
        .map(|pre| m.sat_vec(model, layout, pre))
        .collect::<Result<_, _>>()?;
    let mut worlds = Vec::new();
    let mut pairs = Vec::new();
    for (w, label) in m.worlds.iter().enumerate() {
        for e in 0..u.events() {
            if pre_sat[e][w] {
                worlds.push(label.clone());
                pairs.push((w, e));
            }
        }
    }
    let mut equiv = Vec::new();
    for agent in 0..model.agents.len() {
        let mut renumber: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut ids = Vec::new();
        for &(w, e) in &pairs {
            let key = (m.equiv[agent][w], u.equiv[agent][e]);
            let next = renumber.len();
            ids.push(*renumber.entry(key).or_insert(next));
        }
        equiv.push(ids);
    }
    let product = ExplicitModel { worlds, equiv };
    Ok(if quotient_result { quotient(&product) } else { product })
}

/// `(M, S) ⊨ [U, T] φ`: φ must hold at every product world `(w, e)` with
/// `w ∈ S`, `e ∈ T` and `M, w ⊨ pre(e)`.
pub fn check_update_formula(
    model: &SystemModel,
    layout: &Layout,
    m: &ExplicitModel,
    s: &[usize],
    u: &UpdateStructure,
    t: &[usize],
    phi: &Expr,
) -> Result<bool, KbpError> {
    let pre_sat: Vec<Vec<bool>> = u
        .pre
        .iter()
        .map(|pre| m.sat_vec(model, layout, pre))
        .collect::<Result<_, _>>()?;
    // Build the unquotiented product, remembering the pair of each world.
    let product = apply_update(model, layout, m, u, false)?;
    let mut pairs = Vec::new();
    for w in 0..m.worlds.len() {
        for e in 0..u.events() {
            if pre_sat[e][w] {
                pairs.push((w, e));
            }
        }
    }
    let sat = product.sat_vec(model, layout, phi)?;
    for (ix, &(w, e)) in pairs.iter().enumerate() {
        if s.contains(&w) && t.contains(&e) && !sat[ix] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Partition refinement to the maximal bisimulation: blocks split on the
/// valuation and, per agent, on the set of blocks their equivalence class
/// meets, to a fixed point. The quotient keeps one world per block.
pub fn quotient(m: &ExplicitModel) -> ExplicitModel {
    let n = m.worlds.len();
    let mut block: Vec<usize> = {
        let mut by_label: BTreeMap<&BitState, usize> = BTreeMap::new();
        let mut ids = Vec::with_capacity(n);
        for w in &m.worlds {
            let next = by_label.len();
            ids.push(*by_label.entry(w).or_insert(next));
        }
        ids
    };
    loop {
        // Signature: own block plus, per agent, the sorted block set of the
        // agent's equivalence class.
        let mut signatures: Vec<(usize, Vec<Vec<usize>>)> = Vec::with_capacity(n);
        for w in 0..n {
            let mut per_agent = Vec::with_capacity(m.equiv.len());
            for ids in &m.equiv {
                let mut seen: Vec<usize> = (0..n)
                    .filter(|&v| ids[v] == ids[w])
                    .map(|v| block[v])
                    .collect();
                seen.sort_unstable();
                seen.dedup();
                per_agent.push(seen);
            }
            signatures.push((block[w], per_agent));
        }
        let mut renumber: BTreeMap<&(usize, Vec<Vec<usize>>), usize> = BTreeMap::new();
        let mut next: Vec<usize> = Vec::with_capacity(n);
        for sig in &signatures {
            let fresh = renumber.len();
            next.push(*renumber.entry(sig).or_insert(fresh));
        }
        let stable = next == block;
        block = next;
        if stable {
            break;
        }
    }
    let nblocks = block.iter().copied().max().map_or(0, |b| b + 1);
    let mut representative = vec![usize::MAX; nblocks];
    for (w, &b) in block.iter().enumerate() {
        if representative[b] == usize::MAX {
            representative[b] = w;
        }
    }
    let worlds: Vec<BitState> =
        representative.iter().map(|&w| m.worlds[w].clone()).collect();
    let mut equiv = Vec::new();
    for ids in &m.equiv {
        // Block-level relation: blocks are related when any members are.
        let mut related: BTreeMap<(usize, usize), bool> = BTreeMap::new();
        for w in 0..n {
            for v in 0..n {
                if ids[w] == ids[v] {
                    related.insert((block[w], block[v]), true);
                }
            }
        }
        // Class ids from the transitive relation (it is transitive at the
        // fixed point): union-find over blocks.
        let mut parent: Vec<usize> = (0..nblocks).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for (&(a, b), _) in related.iter() {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
        let mut out = Vec::with_capacity(nblocks);
        for b in 0..nblocks {
            let root = find(&mut parent, b);
            let fresh = renumber.len();
            out.push(*renumber.entry(root).or_insert(fresh));
        }
        equiv.push(out);
    }
    ExplicitModel { worlds, equiv }
}

/// The muddy children puzzle as an epistemic model plus a per-round update:
/// worlds are the non-empty muddy subsets of `model` (a muddy corpus
/// instance), `∼_i` is equality of the other children's mud, events are the
/// answer patterns `{0,1}^n` identified only with themselves, and
/// `pre(e) = ⋀_i φ_i^{e_i}` where φ_i says child i knows its status.
pub fn muddy_update_instance(
    model: &SystemModel,
    layout: &Layout,
) -> Result<(ExplicitModel, UpdateStructure), KbpError> {
    let n = model.agents.len();
    let muddy_vars: Vec<TVarId> = model
        .env_decls
        .iter()
        .find(|d| d.base == "muddy")
        .ok_or_else(|| KbpError::Oracle("model has no muddy[] array".into()))?
        .vars
        .clone();
    let mut worlds = Vec::new();
    for mask in 1u32..1 << n {
        let mut s = layout.blank();
        for (i, &v) in muddy_vars.iter().enumerate() {
            layout.set(&mut s, v, (mask >> i & 1) as u64);
        }
        worlds.push(s);
    }
    // ∼_i: equal mud on everyone else.
    let mut equiv = Vec::new();
    for i in 0..n {
        let mut renumber: BTreeMap<u32, usize> = BTreeMap::new();
        let mut ids = Vec::new();
        for (ix, _) in worlds.iter().enumerate() {
            let mask = ix as u32 + 1;
            let key = mask & !(1 << i);
            let next = renumber.len();
            ids.push(*renumber.entry(key).or_insert(next));
        }
        equiv.push(ids);
    }
    let m = ExplicitModel { worlds, equiv };

    let knows_status = |i: usize| {
        let v = muddy_vars[i];
        Expr::or(
            Expr::Knows(i, Box::new(Expr::Var(v))),
            Expr::Knows(i, Box::new(Expr::not(Expr::Var(v)))),
        )
    };
    let mut pre = Vec::new();
    for pattern in 0u32..1 << n {
        let conj = Expr::conj((0..n).map(|i| {
            if pattern >> i & 1 == 1 {
                knows_status(i)
            } else {
                Expr::not(knows_status(i))
            }
        }));
        pre.push(conj);
    }
    // Answers are public: agents distinguish every pair of events.
    let event_equiv: Vec<Vec<usize>> = (0..n).map(|_| (0..1 << n).collect()).collect();
    Ok((m, UpdateStructure { equiv: event_equiv, pre }))
}
