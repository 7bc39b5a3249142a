//! Control variables and per-context label sets.
//!
//! A label set maps every full realization of the control variables to a set
//! of directed edges that vanish in that context. [`regularize`] and
//! [`maximalize`] bring a label set into maximal-regular form: every labeled
//! edge's child keeps at least one control parent, and labels are closed
//! under copying across contexts that agree on the child's control parents.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{assignments, CausalGraph, Context, Edge, Universe, VarId};

/// An ordered set of control variables, a subset of the observed roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlSpec {
    controls: Vec<VarId>,
}

impl ControlSpec {
    pub fn new(g: &CausalGraph, controls: Vec<VarId>) -> Result<Self> {
        let roots = g.observed_roots();
        let mut seen = BTreeSet::new();
        for &c in &controls {
            if !roots.contains(&c) {
                return Err(Error::Precondition(format!(
                    "control `{}` is not an observed root",
                    g.universe().name(c)
                )));
            }
            if !seen.insert(c) {
                return Err(Error::Precondition(format!(
                    "duplicate control `{}`",
                    g.universe().name(c)
                )));
            }
        }
        Ok(ControlSpec { controls })
    }

    pub fn empty() -> Self {
        ControlSpec { controls: Vec::new() }
    }

    pub fn controls(&self) -> &[VarId] {
        &self.controls
    }

    pub fn control_set(&self) -> BTreeSet<VarId> {
        self.controls.iter().copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    /// Every full context over the controls, lexicographic in spec order.
    /// An empty spec yields the single empty context.
    pub fn contexts(&self, uni: &Universe) -> Vec<Context> {
        assignments(uni, &self.controls)
    }
}

/// Per-context sets of removable directed edges over the full control domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    by_context: BTreeMap<Context, BTreeSet<Edge>>,
}

impl LabelSet {
    /// A label set with every context of `c_spec` present and empty.
    pub fn empty(c_spec: &ControlSpec, uni: &Universe) -> Self {
        LabelSet {
            by_context: c_spec
                .contexts(uni)
                .into_iter()
                .map(|c| (c, BTreeSet::new()))
                .collect(),
        }
    }

    /// Adds `edge` to the context `ctx`, which must be one of the
    /// materialized full contexts.
    pub fn insert(&mut self, ctx: &Context, edge: Edge) -> Result<()> {
        match self.by_context.get_mut(ctx) {
            Some(set) => {
                set.insert(edge);
                Ok(())
            }
            None => Err(Error::Label(format!(
                "context {ctx:?} is not a full control assignment"
            ))),
        }
    }

    pub fn edges_at(&self, ctx: &Context) -> &BTreeSet<Edge> {
        static EMPTY: BTreeSet<Edge> = BTreeSet::new();
        self.by_context.get(ctx).unwrap_or(&EMPTY)
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.by_context.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Context, &BTreeSet<Edge>)> {
        self.by_context.iter()
    }

    /// Union of the labeled edges across all contexts.
    pub fn all_edges(&self) -> BTreeSet<Edge> {
        self.by_context.values().flatten().copied().collect()
    }

    pub fn has_labels(&self) -> bool {
        self.by_context.values().any(|s| !s.is_empty())
    }

    /// Structural validity against a graph: every labeled edge exists, no
    /// endpoint is a control, and the context keys are exactly the full
    /// product domain of the controls.
    pub fn validate(&self, g: &CausalGraph, c_spec: &ControlSpec) -> Result<()> {
        let expected: BTreeSet<Context> =
            c_spec.contexts(g.universe()).into_iter().collect();
        let got: BTreeSet<Context> = self.by_context.keys().cloned().collect();
        if expected != got {
            return Err(Error::Label(
                "context keys do not cover the control domain exactly".into(),
            ));
        }
        let cset = c_spec.control_set();
        for (ctx, edges) in &self.by_context {
            for (v, x) in ctx.iter() {
                if x >= g.universe().domain_size(v) {
                    return Err(Error::Label(format!(
                        "value {x} out of domain for `{}`",
                        g.universe().name(v)
                    )));
                }
            }
            for e in edges {
                if !g.edges().contains(e) {
                    return Err(Error::Label(format!(
                        "labeled edge `{}` is not in the graph",
                        g.edge_to_string(*e)
                    )));
                }
                if cset.contains(&e.parent) || cset.contains(&e.child) {
                    return Err(Error::Label(format!(
                        "labeled edge `{}` touches a control variable",
                        g.edge_to_string(*e)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses the label file format against a graph:
    ///
    /// ```text
    /// control <name>
    /// label <name>=<value>[,<name>=<value>...] remove <parent>-><child>
    /// ```
    ///
    /// Every `label` line must assign all declared controls; partial contexts
    /// are rejected rather than expanded.
    pub fn parse(text: &str, g: &CausalGraph) -> Result<(ControlSpec, LabelSet)> {
        let uni = g.universe();
        let mut controls: Vec<VarId> = Vec::new();
        let mut entries: Vec<(Context, Edge, usize)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            match tokens.next().unwrap() {
                "control" => {
                    let name = tokens.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "expected `control <name>`".into(),
                    })?;
                    if tokens.next().is_some() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "trailing tokens after control".into(),
                        });
                    }
                    let v = uni.get(name).ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("unknown variable `{name}`"),
                    })?;
                    if controls.contains(&v) {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("duplicate control `{name}`"),
                        });
                    }
                    controls.push(v);
                }
                "label" => {
                    if controls.is_empty() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "label line before any control declaration".into(),
                        });
                    }
                    let ctx_tok = tokens.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "expected context assignments".into(),
                    })?;
                    let mut ctx = Context::new();
                    for part in ctx_tok.split(',') {
                        let (name, value) = part.split_once('=').ok_or_else(|| Error::Parse {
                            line: line_no,
                            msg: format!("expected `<name>=<value>`, found `{part}`"),
                        })?;
                        let v = uni.get(name).ok_or_else(|| Error::Parse {
                            line: line_no,
                            msg: format!("unknown variable `{name}`"),
                        })?;
                        if !controls.contains(&v) {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("`{name}` is not a declared control"),
                            });
                        }
                        let x: usize = value.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            msg: format!("invalid value `{value}`"),
                        })?;
                        if x >= uni.domain_size(v) {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("value {x} out of domain for `{name}`"),
                            });
                        }
                        if ctx.contains(v) {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("`{name}` assigned twice"),
                            });
                        }
                        ctx.insert(v, x);
                    }
                    if ctx.len() != controls.len() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "partial context: every control must be assigned".into(),
                        });
                    }
                    match tokens.next() {
                        Some("remove") => {}
                        other => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!(
                                    "expected `remove`, found `{}`",
                                    other.unwrap_or("")
                                ),
                            })
                        }
                    }
                    let edge_tok = tokens.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "expected `<parent>-><child>`".into(),
                    })?;
                    if tokens.next().is_some() {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "trailing tokens after edge".into(),
                        });
                    }
                    let (pname, cname) = edge_tok.split_once("->").ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("expected `<parent>-><child>`, found `{edge_tok}`"),
                    })?;
                    let p = uni.get(pname).ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("unknown variable `{pname}`"),
                    })?;
                    let c = uni.get(cname).ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("unknown variable `{cname}`"),
                    })?;
                    entries.push((ctx, Edge::new(p, c), line_no));
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown directive `{other}`"),
                    });
                }
            }
        }

        let c_spec = ControlSpec::new(g, controls)?;
        let mut labels = LabelSet::empty(&c_spec, uni);
        for (ctx, edge, line_no) in entries {
            labels.insert(&ctx, edge).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        labels.validate(g, &c_spec)?;
        Ok((c_spec, labels))
    }

    /// Serializes in the label file format, deterministically.
    pub fn to_file_string(&self, g: &CausalGraph, c_spec: &ControlSpec) -> String {
        let uni = g.universe();
        let mut out = String::new();
        for &c in c_spec.controls() {
            out.push_str(&format!("control {}\n", uni.name(c)));
        }
        for ctx in c_spec.contexts(uni) {
            let rendered: Vec<String> = c_spec
                .controls()
                .iter()
                .map(|&c| format!("{}={}", uni.name(c), ctx.get(c).unwrap()))
                .collect();
            for e in self.edges_at(&ctx) {
                out.push_str(&format!(
                    "label {} remove {}->{}\n",
                    rendered.join(","),
                    uni.name(e.parent),
                    uni.name(e.child)
                ));
            }
        }
        out
    }
}

fn control_parents(g: &CausalGraph, c_spec: &ControlSpec, child: VarId) -> Result<BTreeSet<VarId>> {
    let cset = c_spec.control_set();
    Ok(g.parent_set(child)?.intersection(&cset).copied().collect())
}

/// Edges labeled anywhere whose child has no control parent.
fn irregular_edges(
    g: &CausalGraph,
    l: &LabelSet,
    c_spec: &ControlSpec,
) -> Result<BTreeSet<Edge>> {
    let mut out = BTreeSet::new();
    for e in l.all_edges() {
        if control_parents(g, c_spec, e.child)?.is_empty() {
            out.insert(e);
        }
    }
    Ok(out)
}

/// Deletes every labeled edge whose child has no control parent from both
/// the graph and all contexts of the label set, until a fixpoint.
///
/// A deleted edge never touches a control, so one pass cannot create new
/// irregular edges; the fixpoint is still asserted.
pub fn regularize(
    g: &CausalGraph,
    l: &LabelSet,
    c_spec: &ControlSpec,
) -> Result<(CausalGraph, LabelSet)> {
    l.validate(g, c_spec)?;
    let mut graph = g.clone();
    let mut labels = l.clone();
    let mut passes = 0usize;
    loop {
        let dead = irregular_edges(&graph, &labels, c_spec)?;
        if dead.is_empty() {
            break;
        }
        if passes > 0 {
            return Err(Error::Internal(
                "regularize did not reach a fixpoint in one pass".into(),
            ));
        }
        graph = graph.delete_edges(&dead)?;
        labels = LabelSet {
            by_context: labels
                .by_context
                .iter()
                .map(|(ctx, es)| (ctx.clone(), es.difference(&dead).copied().collect()))
                .collect(),
        };
        passes += 1;
    }
    Ok((graph, labels))
}

/// Copies every label across the contexts that agree on the child's control
/// parents. Requires a regular input.
pub fn maximalize(g: &CausalGraph, l: &LabelSet, c_spec: &ControlSpec) -> Result<LabelSet> {
    l.validate(g, c_spec)?;
    if !irregular_edges(g, l, c_spec)?.is_empty() {
        return Err(Error::NotRegular(
            "maximalize requires a regular label set".into(),
        ));
    }
    let all_contexts = c_spec.contexts(g.universe());
    let mut out = l.clone();
    for (ctx, edges) in l.iter() {
        for e in edges {
            let cx = control_parents(g, c_spec, e.child)?;
            let anchor = ctx.restricted_to(&cx);
            for other in &all_contexts {
                if other.restricted_to(&cx) == anchor {
                    out.by_context
                        .get_mut(other)
                        .expect("contexts cover the product domain")
                        .insert(*e);
                }
            }
        }
    }
    Ok(out)
}

/// True iff both [`regularize`] and [`maximalize`] leave the input unchanged.
pub fn is_maximal_regular(g: &CausalGraph, l: &LabelSet, c_spec: &ControlSpec) -> Result<bool> {
    l.validate(g, c_spec)?;
    if !irregular_edges(g, l, c_spec)?.is_empty() {
        return Ok(false);
    }
    Ok(maximalize(g, l, c_spec)? == *l)
}
