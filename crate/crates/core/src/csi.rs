//! Identification from a labeled graph, and label learning from a joint.
//!
//! [`identify_csi`] normalizes the label set to maximal-regular form, then
//! solves one plain identification problem per control context on the graph
//! with the controls removed and the context's labeled edges deleted. The
//! per-context formulas are conditioned on the context and combined into a
//! mixture weighted by the observational context probabilities.
//!
//! [`learn_labels`] tests, for every edge over observed endpoints and every
//! context, the context-specific independence of child and parent given the
//! observed non-control ancestors of the pair.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::admg::Admg;
use crate::dist::{csi_holds, JointTable};
use crate::error::{Error, Result};
use crate::estimand::Estimand;
use crate::graph::{CausalGraph, Context, Edge, VarId};
use crate::ident::identify;
use crate::labels::{maximalize, regularize, ControlSpec, LabelSet};
use crate::sep::verma_equivalence_check;

/// Identifies `P_t(S)` from a graph and a label set over control contexts.
///
/// With an empty control set the single context degenerates to plain
/// identification and the inner estimand is returned unwrapped. Otherwise
/// the result is a [`Estimand::ContextMixture`] in lexicographic context
/// order, or [`Estimand::NonIdentifiable`] naming the first failing context.
pub fn identify_csi(
    g: &CausalGraph,
    labels: &LabelSet,
    c_spec: &ControlSpec,
    treatment: &BTreeSet<VarId>,
    outcome: &BTreeSet<VarId>,
) -> Result<Estimand> {
    identify_csi_ordered(g, labels, c_spec, treatment, outcome, c_spec.contexts(g.universe()))
}

/// [`identify_csi`] over an explicit context order. Contexts run in
/// parallel and the mixture is assembled in canonical context order, so the
/// result tree is independent of the order given here.
pub(crate) fn identify_csi_ordered(
    g: &CausalGraph,
    labels: &LabelSet,
    c_spec: &ControlSpec,
    treatment: &BTreeSet<VarId>,
    outcome: &BTreeSet<VarId>,
    contexts: Vec<Context>,
) -> Result<Estimand> {
    let uni = g.universe().clone();
    let cset = c_spec.control_set();
    if treatment.is_empty() || outcome.is_empty() {
        return Err(Error::Precondition(
            "treatment and outcome must be non-empty".into(),
        ));
    }
    if !treatment.is_disjoint(outcome) {
        return Err(Error::Precondition(
            "treatment and outcome must be disjoint".into(),
        ));
    }
    for &v in treatment.union(outcome) {
        if !g.contains(v) {
            return Err(Error::VertexNotPresent(uni.name(v).to_string()));
        }
        if !uni.is_observed(v) {
            return Err(Error::Precondition(format!(
                "`{}` is latent",
                uni.name(v)
            )));
        }
        if cset.contains(&v) {
            return Err(Error::Precondition(format!(
                "`{}` is a control variable",
                uni.name(v)
            )));
        }
    }

    // Normalization is idempotent, so callers may pass anything valid.
    let (graph, labels) = regularize(g, labels, c_spec)?;
    let labels = maximalize(&graph, &labels, c_spec)?;

    let keep: BTreeSet<VarId> = graph
        .vertex_set()
        .difference(&cset)
        .copied()
        .collect();
    let reduced = graph.restrict(&keep)?;

    let outcomes: Vec<(Context, Result<Estimand>)> = contexts
        .into_par_iter()
        .map(|ctx| {
            let result = (|| {
                let dead: BTreeSet<Edge> = labels
                    .edges_at(&ctx)
                    .iter()
                    .copied()
                    .filter(|e| reduced.edges().contains(e))
                    .collect();
                let g_ctx = reduced.delete_edges(&dead)?;
                let projected = Admg::latent_project(&g_ctx);
                identify(&projected, treatment, outcome)
            })();
            (ctx, result)
        })
        .collect();

    if c_spec.is_empty() {
        let (_, only) = outcomes.into_iter().next().expect("one empty context");
        return only;
    }

    let mut arms = Vec::with_capacity(outcomes.len());
    let mut failure: Option<(Context, String)> = None;
    for (ctx, result) in outcomes {
        let formula = result?;
        if let Estimand::NonIdentifiable { witness } = formula {
            // report the canonically first failing context
            if failure.as_ref().is_none_or(|(c, _)| ctx < *c) {
                failure = Some((ctx, witness));
            }
            continue;
        }
        arms.push((ctx.clone(), formula.with_context(&ctx)));
    }
    if let Some((ctx, witness)) = failure {
        return Ok(Estimand::NonIdentifiable {
            witness: format!("context {}: {}", ctx.to_display(&uni), witness),
        });
    }
    arms.sort_by(|(a, _), (b, _)| a.cmp(b));
    Ok(Estimand::ContextMixture(arms))
}

/// Learns a label set from an exact observational joint over the observed
/// vertices.
///
/// Requires a strictly positive joint unless `allow_degenerate` is set; a
/// degenerate joint can hide dependence inside zero-mass cells.
pub fn learn_labels(
    g: &CausalGraph,
    joint: &JointTable,
    c_spec: &ControlSpec,
    allow_degenerate: bool,
) -> Result<LabelSet> {
    let uni = g.universe().clone();
    if joint.var_set() != g.observed_vertices() {
        return Err(Error::Schema(
            "joint variables must be exactly the observed vertices".into(),
        ));
    }
    if !allow_degenerate && !joint.strictly_positive() {
        return Err(Error::Precondition(
            "joint is not strictly positive; pass allow_degenerate to proceed".into(),
        ));
    }
    let cset = c_spec.control_set();
    let mut labels = LabelSet::empty(c_spec, &uni);
    for ctx in c_spec.contexts(&uni) {
        for e in g.edges() {
            let (parent, child) = (e.parent, e.child);
            if !uni.is_observed(parent) || !uni.is_observed(child) {
                continue;
            }
            // an edge endpoint inside the control set cannot be labeled
            if cset.contains(&parent) || cset.contains(&child) {
                continue;
            }
            let pair: BTreeSet<VarId> = [parent, child].into_iter().collect();
            let cond: BTreeSet<VarId> = g
                .ancestors(&pair)?
                .into_iter()
                .filter(|v| {
                    uni.is_observed(*v)
                        && !cset.contains(v)
                        && *v != parent
                        && *v != child
                })
                .collect();
            if csi_holds(joint, child, parent, &ctx, &cond)? {
                labels.insert(&ctx, *e)?;
            }
        }
    }
    Ok(labels)
}

/// True iff a mechanism-level deletion of `edge` in some context is
/// guaranteed to be recovered by [`learn_labels`]: both endpoints observed
/// and no inducing path between them once the edge is removed.
pub fn learnable(g: &CausalGraph, edge: Edge) -> Result<bool> {
    if !g.edges().contains(&edge) {
        return Err(Error::EdgeAbsent(g.edge_to_string(edge)));
    }
    let uni = g.universe();
    if !uni.is_observed(edge.parent) || !uni.is_observed(edge.child) {
        return Ok(false);
    }
    let mut es = BTreeSet::new();
    es.insert(edge);
    let h = g.delete_edges(&es)?;
    verma_equivalence_check(&h, edge.child, edge.parent)
}
