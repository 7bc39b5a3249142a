//! Latent projection of a causal DAG onto its observed vertices.
//!
//! The projected graph keeps a directed edge `a -> b` whenever the DAG has a
//! directed path from `a` to `b` through latent vertices only, and adds a
//! bidirected edge `a <-> b` whenever some latent vertex reaches both `a`
//! and `b` along such paths. Latent vertices may themselves have latent
//! parents; projection follows paths, not single edges.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, Edge, Universe, VarId};

/// Acyclic directed mixed graph over observed vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admg {
    universe: Arc<Universe>,
    vertices: BTreeSet<VarId>,
    directed: BTreeSet<Edge>,
    bidirected: BTreeSet<(VarId, VarId)>,
    parents: BTreeMap<VarId, BTreeSet<VarId>>,
    children: BTreeMap<VarId, BTreeSet<VarId>>,
    spouses: BTreeMap<VarId, BTreeSet<VarId>>,
    topo: Vec<VarId>,
}

impl Admg {
    pub fn new(
        universe: Arc<Universe>,
        vertices: BTreeSet<VarId>,
        directed: BTreeSet<Edge>,
        bidirected: BTreeSet<(VarId, VarId)>,
    ) -> Result<Self> {
        let mut parents: BTreeMap<VarId, BTreeSet<VarId>> =
            vertices.iter().map(|&v| (v, BTreeSet::new())).collect();
        let mut children = parents.clone();
        let mut spouses = parents.clone();
        for e in &directed {
            if e.parent == e.child {
                return Err(Error::Precondition(format!(
                    "self-loop on `{}`",
                    universe.name(e.parent)
                )));
            }
            if !vertices.contains(&e.parent) || !vertices.contains(&e.child) {
                return Err(Error::Precondition(
                    "directed edge endpoint outside the vertex set".into(),
                ));
            }
            parents.get_mut(&e.child).unwrap().insert(e.parent);
            children.get_mut(&e.parent).unwrap().insert(e.child);
        }
        for &(a, b) in &bidirected {
            if a >= b {
                return Err(Error::Precondition(
                    "bidirected pairs must be stored as (min, max)".into(),
                ));
            }
            if !vertices.contains(&a) || !vertices.contains(&b) {
                return Err(Error::Precondition(
                    "bidirected edge endpoint outside the vertex set".into(),
                ));
            }
            spouses.get_mut(&a).unwrap().insert(b);
            spouses.get_mut(&b).unwrap().insert(a);
        }

        // Kahn with a min-id frontier, doubling as the acyclicity check.
        let mut indeg: BTreeMap<VarId, usize> =
            vertices.iter().map(|&v| (v, parents[&v].len())).collect();
        let mut frontier: BTreeSet<VarId> = vertices
            .iter()
            .copied()
            .filter(|v| indeg[v] == 0)
            .collect();
        let mut topo = Vec::with_capacity(vertices.len());
        while let Some(&v) = frontier.iter().next() {
            frontier.remove(&v);
            topo.push(v);
            for &c in &children[&v] {
                let d = indeg.get_mut(&c).unwrap();
                *d -= 1;
                if *d == 0 {
                    frontier.insert(c);
                }
            }
        }
        if topo.len() != vertices.len() {
            return Err(Error::Precondition(
                "directed part contains a cycle".into(),
            ));
        }

        Ok(Admg {
            universe,
            vertices,
            directed,
            bidirected,
            parents,
            children,
            spouses,
            topo,
        })
    }

    /// Projects a DAG with latent vertices onto its observed vertices.
    pub fn latent_project(g: &CausalGraph) -> Admg {
        let uni = g.universe().clone();
        let observed = g.observed_vertices();

        // Observed vertices reachable from each start through latent-interior
        // directed paths.
        let reach = |start: VarId| -> BTreeSet<VarId> {
            let mut out = BTreeSet::new();
            let mut seen: BTreeSet<VarId> = BTreeSet::new();
            let mut stack: Vec<VarId> = g
                .children(start)
                .expect("projection start is present")
                .to_vec();
            while let Some(v) = stack.pop() {
                if !seen.insert(v) {
                    continue;
                }
                if uni.is_observed(v) {
                    out.insert(v);
                } else {
                    stack.extend_from_slice(g.children(v).expect("vertex present"));
                }
            }
            out
        };

        let mut directed = BTreeSet::new();
        let mut bidirected = BTreeSet::new();
        for &v in g.vertices() {
            let targets = reach(v);
            if uni.is_observed(v) {
                for &t in &targets {
                    directed.insert(Edge::new(v, t));
                }
            } else {
                for &a in &targets {
                    for &b in &targets {
                        if a < b {
                            bidirected.insert((a, b));
                        }
                    }
                }
            }
        }

        Admg::new(uni, observed, directed, bidirected)
            .expect("projection of a DAG is acyclic")
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn vertices(&self) -> &BTreeSet<VarId> {
        &self.vertices
    }

    pub fn directed(&self) -> &BTreeSet<Edge> {
        &self.directed
    }

    pub fn bidirected(&self) -> &BTreeSet<(VarId, VarId)> {
        &self.bidirected
    }

    pub fn topo_order(&self) -> &[VarId] {
        &self.topo
    }

    pub fn parents(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.parents[&v]
    }

    /// Connected components of the bidirected part, each a sorted set,
    /// ordered by their smallest vertex.
    pub fn c_components(&self) -> Vec<BTreeSet<VarId>> {
        let mut unseen: BTreeSet<VarId> = self.vertices.clone();
        let mut comps = Vec::new();
        while let Some(&start) = unseen.iter().next() {
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            unseen.remove(&start);
            while let Some(v) = stack.pop() {
                comp.insert(v);
                for &s in &self.spouses[&v] {
                    if unseen.remove(&s) {
                        stack.push(s);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    /// The c-component containing `v`.
    pub fn c_component_of(&self, v: VarId) -> BTreeSet<VarId> {
        let mut comp = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if comp.insert(u) {
                stack.extend(self.spouses[&u].iter().copied());
            }
        }
        comp
    }

    /// Induced sub-ADMG on `keep`.
    pub fn induced(&self, keep: &BTreeSet<VarId>) -> Admg {
        let directed = self
            .directed
            .iter()
            .copied()
            .filter(|e| keep.contains(&e.parent) && keep.contains(&e.child))
            .collect();
        let bidirected = self
            .bidirected
            .iter()
            .copied()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .collect();
        Admg::new(
            self.universe.clone(),
            keep.clone(),
            directed,
            bidirected,
        )
        .expect("induced subgraph of an ADMG is valid")
    }

    /// Ancestors of `xs` (inclusive) in the directed part.
    pub fn ancestors(&self, xs: &BTreeSet<VarId>) -> BTreeSet<VarId> {
        let mut seen = xs.clone();
        let mut stack: Vec<VarId> = xs.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[&v] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }
}
