//! d-separation, inducing-path detection and do-calculus rule preconditions.
//!
//! Both reachability searches walk a doubled state space `(vertex, arrival
//! orientation)`: whether a walk junction is a collider depends on how the
//! walk arrived, so plain vertex-marking is not sound. A minimal valid walk
//! is always a simple path, which makes the walk-based search equivalent to
//! the path-based definitions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, VarId};

/// Orientation of the edge a walk used to arrive at a vertex.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
enum Arrival {
    /// The edge points into the vertex (arrived from a parent).
    Into,
    /// The edge points out of the vertex (arrived from a child).
    OutOf,
}

fn check_disjoint(g: &CausalGraph, sets: &[&BTreeSet<VarId>]) -> Result<()> {
    for (i, a) in sets.iter().enumerate() {
        for &v in *a {
            if !g.contains(v) {
                return Err(Error::VertexNotPresent(g.universe().name(v).to_string()));
            }
            for b in &sets[i + 1..] {
                if b.contains(&v) {
                    return Err(Error::Precondition(format!(
                        "argument sets overlap on `{}`",
                        g.universe().name(v)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// True iff every path between `xs` and `ys` is blocked by `zs`.
///
/// Linear-time ancestral reachability; a collider is open exactly when it is
/// an ancestor (inclusive) of the conditioning set.
pub fn d_separated(
    g: &CausalGraph,
    xs: &BTreeSet<VarId>,
    ys: &BTreeSet<VarId>,
    zs: &BTreeSet<VarId>,
) -> Result<bool> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Precondition(
            "d-separation requires non-empty endpoint sets".into(),
        ));
    }
    check_disjoint(g, &[xs, ys, zs])?;
    let anc_z = g.ancestors(zs)?;

    let n = g.universe().len();
    let mut seen = vec![[false; 2]; n];
    let mut stack: Vec<(VarId, Arrival)> = Vec::new();
    for &x in xs {
        for &c in g.children(x)? {
            stack.push((c, Arrival::Into));
        }
        for &p in g.parents(x)? {
            stack.push((p, Arrival::OutOf));
        }
    }

    while let Some((v, arr)) = stack.pop() {
        let slot = &mut seen[v.index()][matches!(arr, Arrival::Into) as usize];
        if *slot {
            continue;
        }
        *slot = true;
        if ys.contains(&v) {
            return Ok(false);
        }
        let conditioned = zs.contains(&v);
        match arr {
            Arrival::Into => {
                // chain v -> child: open unless v is conditioned on
                if !conditioned {
                    for &c in g.children(v)? {
                        stack.push((c, Arrival::Into));
                    }
                }
                // collider at v: open iff v is ancestral to the conditioning set
                if anc_z.contains(&v) {
                    for &p in g.parents(v)? {
                        stack.push((p, Arrival::OutOf));
                    }
                }
            }
            Arrival::OutOf => {
                if !conditioned {
                    for &c in g.children(v)? {
                        stack.push((c, Arrival::Into));
                    }
                    for &p in g.parents(v)? {
                        stack.push((p, Arrival::OutOf));
                    }
                }
            }
        }
    }
    Ok(true)
}

/// True iff some path between `x` and `y` has only colliders as non-endpoint
/// observed vertices, every collider being ancestral to `{x, y}`.
pub fn inducing_path_exists(g: &CausalGraph, x: VarId, y: VarId) -> Result<bool> {
    for v in [x, y] {
        if !g.contains(v) {
            return Err(Error::VertexNotPresent(g.universe().name(v).to_string()));
        }
        if !g.universe().is_observed(v) {
            return Err(Error::Precondition(format!(
                "inducing-path endpoints must be observed, `{}` is latent",
                g.universe().name(v)
            )));
        }
    }
    if x == y {
        return Err(Error::Precondition(
            "inducing-path endpoints must be distinct".into(),
        ));
    }
    let endpoints: BTreeSet<VarId> = [x, y].into_iter().collect();
    let anc_xy = g.ancestors(&endpoints)?;

    let n = g.universe().len();
    let mut seen = vec![[false; 2]; n];
    let mut stack: Vec<(VarId, Arrival)> = Vec::new();
    for &c in g.children(x)? {
        stack.push((c, Arrival::Into));
    }
    for &p in g.parents(x)? {
        stack.push((p, Arrival::OutOf));
    }

    while let Some((v, arr)) = stack.pop() {
        let slot = &mut seen[v.index()][matches!(arr, Arrival::Into) as usize];
        if *slot {
            continue;
        }
        *slot = true;
        if v == y {
            return Ok(true);
        }
        let latent = !g.universe().is_observed(v);
        match arr {
            Arrival::Into => {
                // continuing to a parent makes v a collider
                if anc_xy.contains(&v) {
                    for &p in g.parents(v)? {
                        stack.push((p, Arrival::OutOf));
                    }
                }
                // continuing to a child makes v a non-collider, allowed only for latents
                if latent {
                    for &c in g.children(v)? {
                        stack.push((c, Arrival::Into));
                    }
                }
            }
            Arrival::OutOf => {
                if latent {
                    for &c in g.children(v)? {
                        stack.push((c, Arrival::Into));
                    }
                    for &p in g.parents(v)? {
                        stack.push((p, Arrival::OutOf));
                    }
                }
            }
        }
    }
    Ok(false)
}

/// d-separability of a non-adjacent observed pair given the canonical set
/// `(Anc({x, y}) ∩ observed) \ {x, y}`.
///
/// The result must be the exact complement of [`inducing_path_exists`]; the
/// equivalence is asserted on every call and a violation reports an internal
/// error, since it can only arise from an implementation bug.
pub fn verma_equivalence_check(g: &CausalGraph, x: VarId, y: VarId) -> Result<bool> {
    if g.has_edge(x, y) || g.has_edge(y, x) {
        return Err(Error::Precondition(format!(
            "`{}` and `{}` are adjacent",
            g.universe().name(x),
            g.universe().name(y)
        )));
    }
    let endpoints: BTreeSet<VarId> = [x, y].into_iter().collect();
    let cond: BTreeSet<VarId> = g
        .ancestors(&endpoints)?
        .into_iter()
        .filter(|&v| g.universe().is_observed(v) && v != x && v != y)
        .collect();
    let xset: BTreeSet<VarId> = [x].into_iter().collect();
    let yset: BTreeSet<VarId> = [y].into_iter().collect();
    let separated = d_separated(g, &xset, &yset, &cond)?;
    let inducing = inducing_path_exists(g, x, y)?;
    if separated == inducing {
        return Err(Error::Internal(format!(
            "inducing-path and d-separability disagree for ({}, {}): separated={}, inducing={}",
            g.universe().name(x),
            g.universe().name(y),
            separated,
            inducing
        )));
    }
    Ok(separated)
}

/// The three do-calculus rewrite rules.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Rule {
    /// Insertion/deletion of observations.
    Rule1,
    /// Action/observation exchange.
    Rule2,
    /// Insertion/deletion of actions.
    Rule3,
}

/// Evaluates the d-separation precondition of a do-calculus rule.
///
/// Rule 1 tests `Y ⊥ Z | X, W` with the in-edges of `X` cut; rule 2
/// additionally cuts the out-edges of `Z`; rule 3 cuts the in-edges of
/// `X ∪ Z(W)` where `Z(W)` drops the members of `Z` ancestral to `W` once
/// `X`'s in-edges are gone. Empty `Y` or `Z` makes the statement vacuous.
pub fn docalc_rule_holds(
    g: &CausalGraph,
    rule: Rule,
    ys: &BTreeSet<VarId>,
    zs: &BTreeSet<VarId>,
    xs: &BTreeSet<VarId>,
    ws: &BTreeSet<VarId>,
) -> Result<bool> {
    check_disjoint(g, &[ys, zs, xs, ws])?;
    if ys.is_empty() || zs.is_empty() {
        return Ok(true);
    }
    let cond: BTreeSet<VarId> = xs.union(ws).copied().collect();
    let mutilated = match rule {
        Rule::Rule1 => g.mutilate(xs, &BTreeSet::new()),
        Rule::Rule2 => g.mutilate(xs, zs),
        Rule::Rule3 => {
            let x_bar = g.mutilate(xs, &BTreeSet::new());
            let anc_w = x_bar.ancestors(ws)?;
            let z_of_w: BTreeSet<VarId> =
                zs.iter().copied().filter(|v| !anc_w.contains(v)).collect();
            let cut: BTreeSet<VarId> = xs.union(&z_of_w).copied().collect();
            g.mutilate(&cut, &BTreeSet::new())
        }
    };
    d_separated(&mutilated, ys, zs, &cond)
}
