//! Identification of `P_t(S)` from a latent-projected mixed graph.
//!
//! The algorithm factorizes the post-interventional distribution over the
//! c-components of the subgraph on `An(S)` with the treatment removed, and
//! derives each factor from the c-component of the full graph that contains
//! it by alternating ancestral marginalization with c-component refinement.
//! Failure of a factor derivation (the ancestral closure of the target spans
//! the whole component) is exactly non-identifiability.
//!
//! Estimand shapes are kept close to hand-derived formulas by tracking when
//! an intermediate distribution is still a plain marginal of the
//! observational joint: conditionals of a marginal are emitted as direct
//! probability terms instead of quotients of sums.

use std::collections::BTreeSet;

use crate::admg::Admg;
use crate::error::{Error, Result};
use crate::estimand::Estimand;
use crate::graph::VarId;

/// A distribution over `over`, either a marginal of the observational joint
/// or a derived expression.
#[derive(Debug, Clone)]
enum Dist {
    Obs { over: BTreeSet<VarId> },
    Expr { over: BTreeSet<VarId>, e: Estimand },
}

impl Dist {
    fn over(&self) -> &BTreeSet<VarId> {
        match self {
            Dist::Obs { over } | Dist::Expr { over, .. } => over,
        }
    }

    fn marginal_onto(&self, keep: &BTreeSet<VarId>) -> Dist {
        let drop: BTreeSet<VarId> = self.over().difference(keep).copied().collect();
        match self {
            Dist::Obs { .. } => Dist::Obs { over: keep.clone() },
            Dist::Expr { e, .. } => Dist::Expr {
                over: keep.clone(),
                e: Estimand::sum_over(drop, e.clone()),
            },
        }
    }

    /// The conditional of this distribution for one variable given its
    /// predecessors `pred` (both within `over`).
    fn conditional(&self, v: VarId, pred: &[VarId]) -> Estimand {
        match self {
            Dist::Obs { .. } => Estimand::obs_prob(vec![v], pred.to_vec()),
            Dist::Expr { over, e } => {
                let pred_set: BTreeSet<VarId> = pred.iter().copied().collect();
                let mut num_drop: BTreeSet<VarId> = over.difference(&pred_set).copied().collect();
                num_drop.remove(&v);
                let den_drop: BTreeSet<VarId> = over.difference(&pred_set).copied().collect();
                Estimand::quotient(
                    Estimand::sum_over(num_drop, e.clone()),
                    Estimand::sum_over(den_drop, e.clone()),
                )
            }
        }
    }

    fn into_estimand(self) -> Estimand {
        match self {
            Dist::Obs { over } => Estimand::obs_prob(over.into_iter().collect(), Vec::new()),
            Dist::Expr { e, .. } => e,
        }
    }
}

struct Hedge {
    target: BTreeSet<VarId>,
    component: BTreeSet<VarId>,
}

/// Derives `Q[target]` from `Q[from]` within the directed structure of `g`.
fn derive_q_factor(
    target: &BTreeSet<VarId>,
    from: &BTreeSet<VarId>,
    q_from: Dist,
    g: &Admg,
) -> std::result::Result<Dist, Hedge> {
    let g_from = g.induced(from);
    let closure = g_from.ancestors(target);
    if closure == *target {
        return Ok(q_from.marginal_onto(target));
    }
    if closure == *from {
        return Err(Hedge {
            target: target.clone(),
            component: from.clone(),
        });
    }
    let q_closure = q_from.marginal_onto(&closure);
    let g_closure = g.induced(&closure);
    let refined = g_closure.c_component_of(*target.iter().next().expect("target is non-empty"));
    debug_assert!(target.is_subset(&refined));
    let q_refined = component_factor(&refined, &closure, &q_closure, g);
    derive_q_factor(target, &refined, q_refined, g)
}

/// `Q[comp]` for a c-component `comp` of the graph on `pool`, as a product
/// of conditionals of `q_pool` along the topological order.
fn component_factor(
    comp: &BTreeSet<VarId>,
    pool: &BTreeSet<VarId>,
    q_pool: &Dist,
    g: &Admg,
) -> Dist {
    let order: Vec<VarId> = g
        .topo_order()
        .iter()
        .copied()
        .filter(|v| pool.contains(v))
        .collect();
    let mut factors = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        if comp.contains(&v) {
            factors.push(q_pool.conditional(v, &order[..i]));
        }
    }
    Dist::Expr {
        over: comp.clone(),
        e: Estimand::product(factors),
    }
}

fn hedge_witness(g: &Admg, h: &Hedge) -> String {
    let uni = g.universe();
    format!(
        "Q[{}] is not derivable within c-component {}: the ancestral closure of the target spans the whole component",
        uni.set_to_string(&h.target),
        uni.set_to_string(&h.component),
    )
}

/// Identifies the causal effect of `treatment` on `outcome` in `g`.
///
/// Returns an estimand over observational probability terms whose free
/// variables are exactly the treatment and outcome variables, or a
/// [`Estimand::NonIdentifiable`] root carrying a witness description.
pub fn identify(
    g: &Admg,
    treatment: &BTreeSet<VarId>,
    outcome: &BTreeSet<VarId>,
) -> Result<Estimand> {
    if treatment.is_empty() || outcome.is_empty() {
        return Err(Error::Precondition(
            "treatment and outcome must be non-empty".into(),
        ));
    }
    if let Some(v) = treatment.intersection(outcome).next() {
        return Err(Error::Precondition(format!(
            "treatment and outcome overlap on `{}`",
            g.universe().name(*v)
        )));
    }
    for &v in treatment.union(outcome) {
        if !g.vertices().contains(&v) {
            return Err(Error::VertexNotPresent(g.universe().name(v).to_string()));
        }
    }

    // Work inside the ancestral closure of the outcome; treatments outside
    // it cannot influence the outcome.
    let closure = g.ancestors(outcome);
    let g = g.induced(&closure);
    let treatment_eff: BTreeSet<VarId> =
        treatment.intersection(&closure).copied().collect();
    let obs = Dist::Obs {
        over: closure.clone(),
    };
    if treatment_eff.is_empty() {
        return Ok(obs.marginal_onto(outcome).into_estimand());
    }

    let rest: BTreeSet<VarId> = closure.difference(&treatment_eff).copied().collect();
    let reachable = g.induced(&rest).ancestors(outcome);
    let g_reachable = g.induced(&reachable);

    let full_components = g.c_components();
    let mut factors = Vec::new();
    for comp in g_reachable.c_components() {
        let anchor = *comp.iter().next().expect("component is non-empty");
        let host = full_components
            .iter()
            .find(|c| c.contains(&anchor))
            .expect("every vertex lies in a c-component");
        let q_host = if *host == closure {
            obs.clone()
        } else {
            component_factor(host, &closure, &obs, &g)
        };
        match derive_q_factor(&comp, host, q_host, &g) {
            Ok(q) => factors.push(q.into_estimand()),
            Err(h) => {
                return Ok(Estimand::NonIdentifiable {
                    witness: hedge_witness(&g, &h),
                })
            }
        }
    }

    let marginalized: BTreeSet<VarId> = reachable.difference(outcome).copied().collect();
    let mut result = Estimand::sum_over(marginalized, Estimand::product(factors));

    // Conditioning sides can mention ancestors that reach the outcome only
    // through the treatment. The expression is constant in them; averaging
    // against their observational marginal pins them without changing the
    // value and leaves the treatment and outcome as the only free variables.
    let wanted: BTreeSet<VarId> = treatment_eff.union(outcome).copied().collect();
    let dangling: BTreeSet<VarId> = result
        .free_vars()
        .difference(&wanted)
        .copied()
        .collect();
    if !dangling.is_empty() {
        let weight = Estimand::obs_prob(dangling.iter().copied().collect(), Vec::new());
        result = Estimand::sum_over(dangling, Estimand::product(vec![weight, result]));
    }
    Ok(result)
}
