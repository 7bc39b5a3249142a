//! Immutable causal DAGs over named, finite-domain variables.
//!
//! A [`CausalGraph`] is a directed acyclic graph whose vertices live in a
//! shared [`Universe`] of variable declarations. Graphs derived by
//! [`CausalGraph::restrict`], [`CausalGraph::delete_edges`] and
//! [`CausalGraph::mutilate`] share the universe, so a [`VarId`] stays valid
//! across every graph derived from the same input file.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a variable within its [`Universe`].
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A declared variable: name, observability and finite domain `0..domain_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub observed: bool,
    pub domain_size: usize,
}

/// The full set of variable declarations backing one or more graphs.
///
/// Declaration order is the canonical vertex order; every set-valued result
/// in this crate iterates in that order.
#[derive(Debug, PartialEq, Eq)]
pub struct Universe {
    vars: Vec<VariableDecl>,
    by_name: HashMap<String, VarId>,
}

fn valid_token(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Universe {
    pub fn new(vars: Vec<VariableDecl>) -> Result<Arc<Self>> {
        let mut by_name = HashMap::new();
        for (i, decl) in vars.iter().enumerate() {
            if !valid_token(&decl.name) {
                return Err(Error::Precondition(format!(
                    "variable name `{}` is not a letters/digits/underscore token",
                    decl.name
                )));
            }
            if decl.domain_size < 2 {
                return Err(Error::Precondition(format!(
                    "variable `{}` has domain size {}, need at least 2",
                    decl.name, decl.domain_size
                )));
            }
            if by_name.insert(decl.name.clone(), VarId(i as u32)).is_some() {
                return Err(Error::Precondition(format!(
                    "duplicate variable `{}`",
                    decl.name
                )));
            }
        }
        Ok(Arc::new(Universe { vars, by_name }))
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len() as u32).map(VarId)
    }

    pub fn get(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<VarId> {
        self.get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    pub fn domain_size(&self, v: VarId) -> usize {
        self.vars[v.index()].domain_size
    }

    pub fn is_observed(&self, v: VarId) -> bool {
        self.vars[v.index()].observed
    }

    pub fn decls(&self) -> &[VariableDecl] {
        &self.vars
    }

    /// Renders a set of variables as `{A, B, C}` for error messages.
    pub fn set_to_string(&self, vs: &BTreeSet<VarId>) -> String {
        let names: Vec<&str> = vs.iter().map(|&v| self.name(v)).collect();
        format!("{{{}}}", names.join(", "))
    }
}

/// A directed edge `parent -> child`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Edge {
    pub parent: VarId,
    pub child: VarId,
}

impl Edge {
    pub fn new(parent: VarId, child: VarId) -> Self {
        Edge { parent, child }
    }
}

/// A partial assignment of values to variables, ordered by variable id.
///
/// Contexts name the realizations of control variables, the fixed
/// assignments inside estimand terms, and interventions on models.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Context {
    map: BTreeMap<VarId, usize>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        Context {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, v: VarId, value: usize) {
        self.map.insert(v, value);
    }

    pub fn get(&self, v: VarId) -> Option<usize> {
        self.map.get(&v).copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.map.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.map.iter().map(|(&v, &x)| (v, x))
    }

    pub fn keys(&self) -> impl Iterator<Item = VarId> + '_ {
        self.map.keys().copied()
    }

    pub fn key_set(&self) -> BTreeSet<VarId> {
        self.map.keys().copied().collect()
    }

    /// The sub-assignment on `vars`.
    pub fn restricted_to(&self, vars: &BTreeSet<VarId>) -> Context {
        Context {
            map: self
                .map
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(&v, &x)| (v, x))
                .collect(),
        }
    }

    /// Union of two disjoint contexts; later entries win on overlap.
    pub fn merged_with(&self, other: &Context) -> Context {
        let mut map = self.map.clone();
        for (v, x) in other.iter() {
            map.insert(v, x);
        }
        Context { map }
    }

    pub fn to_display(&self, uni: &Universe) -> String {
        let parts: Vec<String> = self
            .map
            .iter()
            .map(|(&v, &x)| format!("{}={}", uni.name(v), x))
            .collect();
        parts.join(",")
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Context(")?;
        for (i, (v, x)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{:?}={}", v, x)?;
        }
        write!(f, ")")
    }
}

/// Immutable DAG with observability flags and finite domains.
#[derive(Clone)]
pub struct CausalGraph {
    universe: Arc<Universe>,
    present: Vec<bool>,
    vertices: Vec<VarId>,
    edges: BTreeSet<Edge>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
    topo: Vec<VarId>,
}

impl fmt::Debug for CausalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CausalGraph {{ vertices: [")?;
        for (i, &v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.universe.name(v))?;
        }
        write!(f, "], edges: [")?;
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "{}->{}",
                self.universe.name(e.parent),
                self.universe.name(e.child)
            )?;
        }
        write!(f, "] }}")
    }
}

impl CausalGraph {
    /// Builds a graph over the full universe.
    pub fn new(universe: Arc<Universe>, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let present = vec![true; universe.len()];
        Self::build(universe, present, edges.into_iter().collect())
    }

    fn build(universe: Arc<Universe>, present: Vec<bool>, edges: BTreeSet<Edge>) -> Result<Self> {
        let n = universe.len();
        let mut parents: Vec<Vec<VarId>> = vec![Vec::new(); n];
        let mut children: Vec<Vec<VarId>> = vec![Vec::new(); n];
        for e in &edges {
            if e.parent == e.child {
                return Err(Error::Precondition(format!(
                    "self-loop on `{}`",
                    universe.name(e.parent)
                )));
            }
            if !present[e.parent.index()] || !present[e.child.index()] {
                return Err(Error::VertexNotPresent(
                    universe
                        .name(if present[e.parent.index()] {
                            e.child
                        } else {
                            e.parent
                        })
                        .to_string(),
                ));
            }
            parents[e.child.index()].push(e.parent);
            children[e.parent.index()].push(e.child);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let vertices: Vec<VarId> = universe
            .var_ids()
            .filter(|v| present[v.index()])
            .collect();

        // Kahn's algorithm with a min-id frontier: deterministic topological
        // order, also the acyclicity check.
        let mut indeg: Vec<usize> = vec![0; n];
        for &v in &vertices {
            indeg[v.index()] = parents[v.index()].len();
        }
        let mut frontier: BTreeSet<VarId> = vertices
            .iter()
            .copied()
            .filter(|v| indeg[v.index()] == 0)
            .collect();
        let mut topo = Vec::with_capacity(vertices.len());
        while let Some(&v) = frontier.iter().next() {
            frontier.remove(&v);
            topo.push(v);
            for &c in &children[v.index()] {
                indeg[c.index()] -= 1;
                if indeg[c.index()] == 0 {
                    frontier.insert(c);
                }
            }
        }
        if topo.len() != vertices.len() {
            let stuck: Vec<&str> = vertices
                .iter()
                .filter(|v| indeg[v.index()] > 0)
                .map(|&v| universe.name(v))
                .collect();
            return Err(Error::Precondition(format!(
                "graph contains a directed cycle through {{{}}}",
                stuck.join(", ")
            )));
        }

        Ok(CausalGraph {
            universe,
            present,
            vertices,
            edges,
            parents,
            children,
            topo,
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    /// Vertices of this graph in canonical (declaration) order.
    pub fn vertices(&self) -> &[VarId] {
        &self.vertices
    }

    pub fn vertex_set(&self) -> BTreeSet<VarId> {
        self.vertices.iter().copied().collect()
    }

    pub fn contains(&self, v: VarId) -> bool {
        v.index() < self.present.len() && self.present[v.index()]
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, parent: VarId, child: VarId) -> bool {
        self.edges.contains(&Edge::new(parent, child))
    }

    /// Deterministic topological order of the present vertices.
    pub fn topo_order(&self) -> &[VarId] {
        &self.topo
    }

    pub fn edge_to_string(&self, e: Edge) -> String {
        format!(
            "{}->{}",
            self.universe.name(e.parent),
            self.universe.name(e.child)
        )
    }

    fn check_present(&self, v: VarId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::VertexNotPresent(self.universe.name(v).to_string()))
        }
    }

    /// Exact in-neighborhood of `x`.
    pub fn parents(&self, x: VarId) -> Result<&[VarId]> {
        self.check_present(x)?;
        Ok(&self.parents[x.index()])
    }

    /// Exact out-neighborhood of `x`.
    pub fn children(&self, x: VarId) -> Result<&[VarId]> {
        self.check_present(x)?;
        Ok(&self.children[x.index()])
    }

    pub fn parent_set(&self, x: VarId) -> Result<BTreeSet<VarId>> {
        Ok(self.parents(x)?.iter().copied().collect())
    }

    /// Union of ancestor sets, each vertex counting as its own ancestor.
    pub fn ancestors(&self, xs: &BTreeSet<VarId>) -> Result<BTreeSet<VarId>> {
        for &x in xs {
            self.check_present(x)?;
        }
        let mut seen: BTreeSet<VarId> = xs.clone();
        let mut stack: Vec<VarId> = xs.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v.index()] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        Ok(seen)
    }

    /// Union of descendant sets, each vertex counting as its own descendant.
    pub fn descendants(&self, xs: &BTreeSet<VarId>) -> Result<BTreeSet<VarId>> {
        for &x in xs {
            self.check_present(x)?;
        }
        let mut seen: BTreeSet<VarId> = xs.clone();
        let mut stack: Vec<VarId> = xs.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &c in &self.children[v.index()] {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        Ok(seen)
    }

    /// All observed vertices with an empty parent set.
    pub fn observed_roots(&self) -> BTreeSet<VarId> {
        self.vertices
            .iter()
            .copied()
            .filter(|&v| self.universe.is_observed(v) && self.parents[v.index()].is_empty())
            .collect()
    }

    pub fn observed_vertices(&self) -> BTreeSet<VarId> {
        self.vertices
            .iter()
            .copied()
            .filter(|&v| self.universe.is_observed(v))
            .collect()
    }

    /// The same graph minus `es`; every edge of `es` must be present.
    pub fn delete_edges(&self, es: &BTreeSet<Edge>) -> Result<CausalGraph> {
        for e in es {
            if !self.edges.contains(e) {
                return Err(Error::EdgeAbsent(self.edge_to_string(*e)));
            }
        }
        let edges: BTreeSet<Edge> = self.edges.difference(es).copied().collect();
        Self::build(self.universe.clone(), self.present.clone(), edges)
    }

    /// Induced subgraph on `keep`.
    pub fn restrict(&self, keep: &BTreeSet<VarId>) -> Result<CausalGraph> {
        for &v in keep {
            self.check_present(v)?;
        }
        let mut present = vec![false; self.universe.len()];
        for &v in keep {
            present[v.index()] = true;
        }
        let edges: BTreeSet<Edge> = self
            .edges
            .iter()
            .copied()
            .filter(|e| present[e.parent.index()] && present[e.child.index()])
            .collect();
        Self::build(self.universe.clone(), present, edges)
    }

    /// Removes the in-edges of `cut_in` and the out-edges of `cut_out`.
    pub fn mutilate(&self, cut_in: &BTreeSet<VarId>, cut_out: &BTreeSet<VarId>) -> CausalGraph {
        let edges: BTreeSet<Edge> = self
            .edges
            .iter()
            .copied()
            .filter(|e| !cut_in.contains(&e.child) && !cut_out.contains(&e.parent))
            .collect();
        Self::build(self.universe.clone(), self.present.clone(), edges)
            .expect("edge removal cannot introduce a cycle")
    }

    /// Parses the line-based graph text format:
    ///
    /// ```text
    /// # comment
    /// var <name> observed|latent [domain=<k>]
    /// edge <parent> <child>
    /// ```
    ///
    /// Parsing is strict; unknown directives, duplicate variables, duplicate
    /// edges and cycles are hard errors carrying a line number.
    pub fn parse(text: &str) -> Result<CausalGraph> {
        let mut decls: Vec<VariableDecl> = Vec::new();
        let mut names: HashMap<String, usize> = HashMap::new();
        let mut raw_edges: Vec<(String, String, usize)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let directive = tokens.next().unwrap();
            match directive {
                "var" => {
                    let name = tokens
                        .next()
                        .ok_or_else(|| Error::Parse {
                            line: line_no,
                            msg: "expected `var <name> observed|latent [domain=<k>]`".into(),
                        })?
                        .to_string();
                    if !valid_token(&name) {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("invalid variable name `{name}`"),
                        });
                    }
                    if names.contains_key(&name) {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("duplicate variable `{name}`"),
                        });
                    }
                    let observed = match tokens.next() {
                        Some("observed") => true,
                        Some("latent") => false,
                        other => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!(
                                    "expected `observed` or `latent`, found `{}`",
                                    other.unwrap_or("")
                                ),
                            })
                        }
                    };
                    let mut domain_size = 2usize;
                    for extra in tokens {
                        if let Some(k) = extra.strip_prefix("domain=") {
                            domain_size = k.parse().map_err(|_| Error::Parse {
                                line: line_no,
                                msg: format!("invalid domain size `{k}`"),
                            })?;
                            if domain_size < 2 {
                                return Err(Error::Parse {
                                    line: line_no,
                                    msg: "domain size must be at least 2".into(),
                                });
                            }
                        } else {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("unexpected token `{extra}`"),
                            });
                        }
                    }
                    names.insert(name.clone(), decls.len());
                    decls.push(VariableDecl {
                        name,
                        observed,
                        domain_size,
                    });
                }
                "edge" => {
                    let parent = tokens.next().map(str::to_string);
                    let child = tokens.next().map(str::to_string);
                    let (Some(parent), Some(child)) = (parent, child) else {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "expected `edge <parent> <child>`".into(),
                        });
                    };
                    if tokens.next().is_some() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "trailing tokens after edge".into(),
                        });
                    }
                    raw_edges.push((parent, child, line_no));
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown directive `{other}`"),
                    });
                }
            }
        }

        let universe = Universe::new(decls)?;
        let mut edges: BTreeSet<Edge> = BTreeSet::new();
        let mut edge_lines: BTreeMap<Edge, usize> = BTreeMap::new();
        for (parent, child, line_no) in raw_edges {
            let p = universe.get(&parent).ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("unknown variable `{parent}`"),
            })?;
            let c = universe.get(&child).ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("unknown variable `{child}`"),
            })?;
            if p == c {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("self-loop on `{parent}`"),
                });
            }
            let e = Edge::new(p, c);
            if !edges.insert(e) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate edge `{parent} -> {child}`"),
                });
            }
            edge_lines.insert(e, line_no);
        }

        Self::new(universe, edges.iter().copied()).map_err(|err| match err {
            // Attach the line of one edge on the cycle so the message is
            // actionable for hand-written files.
            Error::Precondition(msg) if msg.contains("cycle") => {
                let line = edge_lines.values().copied().max().unwrap_or(0);
                Error::Parse { line, msg }
            }
            other => other,
        })
    }
}

/// Enumerates every full assignment of `vars` (each over its domain in
/// `uni`), in lexicographic order with the first variable most significant.
pub fn assignments(uni: &Universe, vars: &[VarId]) -> Vec<Context> {
    let mut out = Vec::new();
    let mut current = vec![0usize; vars.len()];
    loop {
        out.push(Context::from_pairs(
            vars.iter().copied().zip(current.iter().copied()),
        ));
        // odometer increment, last variable fastest
        let mut i = vars.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            current[i] += 1;
            if current[i] < uni.domain_size(vars[i]) {
                break;
            }
            current[i] = 0;
        }
    }
}
