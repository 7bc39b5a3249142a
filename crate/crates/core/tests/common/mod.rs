//! Shared helpers for the integration suites: seeded random DAGs, random
//! label sets, and an exhaustive path-enumeration d-separation oracle that
//! is independent of the reachability implementation under test.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use csid_core::graph::{CausalGraph, Context, Edge, Universe, VarId, VariableDecl};
use csid_core::labels::{ControlSpec, LabelSet};

/// X -> Z -> W -> Y with T entering W and Y, and U confounding X and Z.
pub const RELAY: &str = "
var U latent
var X observed
var Z observed
var W observed
var T observed
var Y observed
edge U Z
edge U X
edge X Z
edge Z W
edge T W
edge T Y
edge W Y
";

/// Two roots T, Z feeding X and Y, with X -> Y; Y has a three-value domain.
pub const XOR_GRAPH: &str = "
var T observed
var Z observed
var X observed
var Y observed domain=3
edge T Y
edge Z Y
edge X Y
edge T X
edge Z X
";

/// Two treatment-to-outcome lanes X1 -> Z1 -> Y and X2 -> Z2 -> Y with a
/// root T entering Z2 and Y, braided by three latent confounders.
pub const BRAID: &str = "
var X1 observed
var X2 observed
var Z1 observed
var Z2 observed
var Y observed
var T observed
var U1 latent
var U2 latent
var U3 latent
edge X1 Z1
edge X2 Z2
edge Z1 Y
edge Z2 Y
edge T Y
edge T Z2
edge U1 X1
edge U1 X2
edge U2 X2
edge U2 Z1
edge U3 Z1
edge U3 Z2
";

/// Bow X -> Y confounded by latent U, plus an observed root C feeding both.
pub const BOW_CONTROL: &str = "
var C observed
var U latent
var X observed
var Y observed
edge X Y
edge U X
edge U Y
edge C X
edge C Y
";

pub fn lookup(g: &CausalGraph, name: &str) -> VarId {
    g.universe().lookup(name).unwrap()
}

pub fn vset(g: &CausalGraph, names: &[&str]) -> BTreeSet<VarId> {
    names.iter().map(|n| lookup(g, n)).collect()
}

/// Random DAG: `n_obs` observed and `n_lat` latent vertices in a random
/// topological ranking, each forward pair an edge with probability `p_edge`.
/// A sprinkle of three-valued domains exercises the non-binary paths.
pub fn random_dag(rng: &mut ChaCha8Rng, n_obs: usize, n_lat: usize, p_edge: f64) -> CausalGraph {
    let n = n_obs + n_lat;
    let mut decls = Vec::with_capacity(n);
    for i in 0..n_obs {
        let domain_size = if rng.gen_bool(0.15) { 3 } else { 2 };
        decls.push(VariableDecl {
            name: format!("o{i}"),
            observed: true,
            domain_size,
        });
    }
    for i in 0..n_lat {
        decls.push(VariableDecl {
            name: format!("l{i}"),
            observed: false,
            domain_size: 2,
        });
    }
    let universe = Universe::new(decls).unwrap();
    let ids: Vec<VarId> = universe.var_ids().collect();

    let mut rank: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        rank.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p_edge) {
                if rank[i] < rank[j] {
                    edges.insert(Edge::new(ids[i], ids[j]));
                } else {
                    edges.insert(Edge::new(ids[j], ids[i]));
                }
            }
        }
    }
    CausalGraph::new(universe, edges).unwrap()
}

/// Random control spec (up to two observed roots) and a raw label set:
/// each eligible edge is labeled in one random context with probability
/// `p_label`. The result may be non-regular on purpose.
pub fn random_labels(
    rng: &mut ChaCha8Rng,
    g: &CausalGraph,
    p_label: f64,
) -> (ControlSpec, LabelSet) {
    let mut controls: Vec<VarId> = Vec::new();
    for v in g.observed_roots() {
        if controls.len() < 2 && rng.gen_bool(0.6) {
            controls.push(v);
        }
    }
    let c_spec = ControlSpec::new(g, controls).unwrap();
    let cset = c_spec.control_set();
    let contexts = c_spec.contexts(g.universe());
    let mut labels = LabelSet::empty(&c_spec, g.universe());
    if !c_spec.is_empty() {
        for e in g.edges() {
            if cset.contains(&e.parent) || cset.contains(&e.child) {
                continue;
            }
            if rng.gen_bool(p_label) {
                let ctx = &contexts[rng.gen_range(0..contexts.len())];
                labels.insert(ctx, *e).unwrap();
            }
        }
    }
    (c_spec, labels)
}

/// Random disjoint non-empty treatment/outcome split over the observed
/// non-control vertices; `None` when fewer than two candidates exist.
pub fn random_split(
    rng: &mut ChaCha8Rng,
    g: &CausalGraph,
    c_spec: &ControlSpec,
) -> Option<(BTreeSet<VarId>, BTreeSet<VarId>)> {
    let candidates: Vec<VarId> = g
        .observed_vertices()
        .into_iter()
        .filter(|v| !c_spec.control_set().contains(v))
        .collect();
    if candidates.len() < 2 {
        return None;
    }
    loop {
        let mut t = BTreeSet::new();
        let mut s = BTreeSet::new();
        for &v in &candidates {
            // leave some variables out of both sets now and then
            match rng.gen_range(0..5) {
                0 | 1 => {
                    t.insert(v);
                }
                2 | 3 => {
                    s.insert(v);
                }
                _ => {}
            }
        }
        if !t.is_empty() && !s.is_empty() {
            return Some((t, s));
        }
    }
}

/// Full assignments of a variable set, via the library's odometer.
pub fn contexts_over(g: &CausalGraph, vars: &BTreeSet<VarId>) -> Vec<Context> {
    let list: Vec<VarId> = vars.iter().copied().collect();
    csid_core::graph::assignments(g.universe(), &list)
}

/// The xor model over [`XOR_GRAPH`]: T, Z fair coins, X = T xor Z (flipped
/// with probability `noise` when given), Y = T·X + Z exactly.
pub fn xor_model(noise: Option<(i64, i64)>) -> csid_core::DiscreteModel {
    use csid_core::dist::{ratio, Cpt};
    use std::collections::BTreeMap;

    let g = CausalGraph::parse(XOR_GRAPH).unwrap();
    let uni = g.universe().clone();
    let (t, z, x, y) = (
        uni.lookup("T").unwrap(),
        uni.lookup("Z").unwrap(),
        uni.lookup("X").unwrap(),
        uni.lookup("Y").unwrap(),
    );
    let half = ratio(1, 2);
    let mut cpts = BTreeMap::new();
    for root in [t, z] {
        cpts.insert(
            root,
            Cpt {
                child: root,
                parents: vec![],
                rows: vec![vec![half.clone(), half.clone()]],
            },
        );
    }
    let (keep, flip) = match noise {
        Some((n, d)) => (ratio(d - n, d), ratio(n, d)),
        None => (ratio(1, 1), ratio(0, 1)),
    };
    let x_rows = (0..4)
        .map(|row| {
            let want = (row / 2) ^ (row % 2);
            let mut r = vec![flip.clone(), flip.clone()];
            r[want] = keep.clone();
            r
        })
        .collect();
    cpts.insert(
        x,
        Cpt {
            child: x,
            parents: vec![t, z],
            rows: x_rows,
        },
    );
    let y_rows = (0..8)
        .map(|row| {
            let (tv, zv, xv) = (row / 4, (row / 2) % 2, row % 2);
            let mut r = vec![ratio(0, 1), ratio(0, 1), ratio(0, 1)];
            r[tv * xv + zv] = ratio(1, 1);
            r
        })
        .collect();
    cpts.insert(
        y,
        Cpt {
            child: y,
            parents: vec![t, z, x],
            rows: y_rows,
        },
    );
    csid_core::DiscreteModel::new(g, cpts, Vec::new()).unwrap()
}

// ── path-enumeration d-separation oracle ────────────────────────────────

fn undirected_neighbors(g: &CausalGraph, v: VarId) -> Vec<VarId> {
    let mut out: Vec<VarId> = g.parents(v).unwrap().to_vec();
    out.extend_from_slice(g.children(v).unwrap());
    out
}

fn path_blocked(g: &CausalGraph, path: &[VarId], zs: &BTreeSet<VarId>) -> bool {
    for i in 1..path.len() - 1 {
        let (prev, v, next) = (path[i - 1], path[i], path[i + 1]);
        let collider = g.has_edge(prev, v) && g.has_edge(next, v);
        if collider {
            let de: BTreeSet<VarId> = g
                .descendants(&[v].into_iter().collect())
                .unwrap();
            if de.is_disjoint(zs) {
                return true;
            }
        } else if zs.contains(&v) {
            return true;
        }
    }
    false
}

fn open_path_between(
    g: &CausalGraph,
    x: VarId,
    y: VarId,
    zs: &BTreeSet<VarId>,
) -> Option<Vec<VarId>> {
    // DFS over simple paths in the skeleton
    let mut stack: Vec<Vec<VarId>> = vec![vec![x]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if last == y {
            if !path_blocked(g, &path, zs) {
                return Some(path);
            }
            continue;
        }
        for w in undirected_neighbors(g, last) {
            if !path.contains(&w) {
                let mut next = path.clone();
                next.push(w);
                stack.push(next);
            }
        }
    }
    None
}

/// Exhaustive oracle: returns an open (unblocked) path between the sets if
/// one exists, in which case the sets are d-connected given `zs`.
pub fn dsep_oracle_witness(
    g: &CausalGraph,
    xs: &BTreeSet<VarId>,
    ys: &BTreeSet<VarId>,
    zs: &BTreeSet<VarId>,
) -> Option<Vec<VarId>> {
    for &x in xs {
        for &y in ys {
            if let Some(path) = open_path_between(g, x, y, zs) {
                return Some(path);
            }
        }
    }
    None
}

pub fn dsep_oracle(
    g: &CausalGraph,
    xs: &BTreeSet<VarId>,
    ys: &BTreeSet<VarId>,
    zs: &BTreeSet<VarId>,
) -> bool {
    dsep_oracle_witness(g, xs, ys, zs).is_none()
}
