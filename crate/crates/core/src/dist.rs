//! Exact discrete models and the ground-truth oracle.
//!
//! A [`DiscreteModel`] stores one conditional probability table per vertex
//! with exact rational entries. Joint enumeration, truncated-factorization
//! interventions, context-specific-independence tests and estimand
//! evaluation all run in exact arithmetic by default; `f64` tables are an
//! opt-in fast path sharing the same evaluation code.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimand::{render, Estimand, RenderStyle};
use crate::graph::{CausalGraph, Context, Edge, Universe, VarId, VariableDecl};
use crate::labels::{ControlSpec, LabelSet};

/// Hard cap on dense-table cells and on enumeration size.
pub const CELL_CAP: u64 = 1 << 24;

/// Number type shared by the exact and floating-point paths.
pub trait Prob:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl Prob for BigRational {}
impl Prob for f64 {}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Conditional probability table of one vertex given its parents.
///
/// Rows are indexed by the mixed-radix encoding of the parent assignment
/// (first parent most significant); each row is a distribution over the
/// child's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub rows: Vec<Vec<BigRational>>,
}

impl Cpt {
    fn row_index(&self, uni: &Universe, assign: &dyn Fn(VarId) -> usize) -> usize {
        let mut idx = 0;
        for &p in &self.parents {
            idx = idx * uni.domain_size(p) + assign(p);
        }
        idx
    }
}

/// Marks that the CPT of `edge.child` ignores `edge.parent` whenever the
/// control assignment matches `context`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSwitch {
    pub edge: Edge,
    pub context: Context,
}

/// A discrete structural model: a graph plus one exact CPT per vertex.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    graph: CausalGraph,
    cpts: BTreeMap<VarId, Cpt>,
    switches: Vec<ContextSwitch>,
}

impl DiscreteModel {
    pub fn new(
        graph: CausalGraph,
        cpts: BTreeMap<VarId, Cpt>,
        switches: Vec<ContextSwitch>,
    ) -> Result<Self> {
        let uni = graph.universe().clone();
        for &v in graph.vertices() {
            let cpt = cpts.get(&v).ok_or_else(|| {
                Error::Schema(format!("missing CPT for `{}`", uni.name(v)))
            })?;
            if cpt.child != v {
                return Err(Error::Schema(format!(
                    "CPT child mismatch for `{}`",
                    uni.name(v)
                )));
            }
            let declared: BTreeSet<VarId> = cpt.parents.iter().copied().collect();
            if declared != graph.parent_set(v)? || declared.len() != cpt.parents.len() {
                return Err(Error::Schema(format!(
                    "CPT parents of `{}` do not match the graph",
                    uni.name(v)
                )));
            }
            let expected_rows: usize = cpt
                .parents
                .iter()
                .map(|&p| uni.domain_size(p))
                .product();
            if cpt.rows.len() != expected_rows {
                return Err(Error::Schema(format!(
                    "CPT of `{}` has {} rows, expected {}",
                    uni.name(v),
                    cpt.rows.len(),
                    expected_rows
                )));
            }
            for row in &cpt.rows {
                if row.len() != uni.domain_size(v) {
                    return Err(Error::Schema(format!(
                        "CPT row width mismatch for `{}`",
                        uni.name(v)
                    )));
                }
                if row.iter().any(|p| p < &BigRational::zero()) {
                    return Err(Error::Schema(format!(
                        "negative probability in CPT of `{}`",
                        uni.name(v)
                    )));
                }
                let total: BigRational = row.iter().cloned().sum();
                if total != BigRational::one() {
                    return Err(Error::Schema(format!(
                        "CPT row of `{}` sums to {}, expected 1",
                        uni.name(v),
                        total
                    )));
                }
            }
        }
        let model = DiscreteModel {
            graph,
            cpts,
            switches,
        };
        model.verify_switches()?;
        Ok(model)
    }

    /// Structural check: rows differing only in the dropped parent's value
    /// are identical whenever the control parents match the context.
    fn verify_switches(&self) -> Result<()> {
        let uni = self.graph.universe();
        for sw in &self.switches {
            let cpt = self.cpts.get(&sw.edge.child).ok_or_else(|| {
                Error::Schema(format!(
                    "context switch names `{}` which has no CPT",
                    uni.name(sw.edge.child)
                ))
            })?;
            let slot = cpt
                .parents
                .iter()
                .position(|&p| p == sw.edge.parent)
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "context switch edge `{}` is not a CPT parent",
                        self.graph.edge_to_string(sw.edge)
                    ))
                })?;
            for (idx, row) in cpt.rows.iter().enumerate() {
                let values = decode_row(uni, &cpt.parents, idx);
                let matches = sw
                    .context
                    .iter()
                    .all(|(c, x)| match cpt.parents.iter().position(|&p| p == c) {
                        Some(i) => values[i] == x,
                        None => true,
                    });
                if !matches || values[slot] == 0 {
                    continue;
                }
                let mut base = values.clone();
                base[slot] = 0;
                let base_idx = encode_row(uni, &cpt.parents, &base);
                if cpt.rows[base_idx] != *row {
                    return Err(Error::Schema(format!(
                        "CPT of `{}` does not ignore `{}` in context {}",
                        uni.name(sw.edge.child),
                        uni.name(sw.edge.parent),
                        sw.context.to_display(uni)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn switches(&self) -> &[ContextSwitch] {
        &self.switches
    }

    pub fn cpt(&self, v: VarId) -> &Cpt {
        &self.cpts[&v]
    }

    /// Exact joint over `over`, summing out every other vertex.
    pub fn joint(&self, over: &BTreeSet<VarId>) -> Result<JointTable<BigRational>> {
        let uni = self.graph.universe().clone();
        for &v in over {
            if !self.graph.contains(v) {
                return Err(Error::VertexNotPresent(uni.name(v).to_string()));
            }
        }
        let enum_cells: u128 = self
            .graph
            .vertices()
            .iter()
            .map(|&v| uni.domain_size(v) as u128)
            .product();
        if enum_cells > CELL_CAP as u128 {
            return Err(Error::TableTooLarge {
                cells: enum_cells,
                cap: CELL_CAP,
            });
        }
        let mut table = JointTable::zeroed(uni.clone(), over.iter().copied().collect())?;

        // DFS over the topological order with a running product; zero
        // branches are pruned, which makes point-mass CPTs cheap.
        let order: Vec<VarId> = self.graph.topo_order().to_vec();
        let mut assign: Vec<usize> = vec![0; uni.len()];
        fn expand(
            model: &DiscreteModel,
            uni: &Universe,
            order: &[VarId],
            depth: usize,
            weight: BigRational,
            assign: &mut Vec<usize>,
            table: &mut JointTable<BigRational>,
        ) {
            if depth == order.len() {
                let idx = table.index_of(&|v| assign[v.index()]);
                let cell = &mut table.cells[idx];
                *cell = std::mem::replace(cell, BigRational::zero()) + weight;
                return;
            }
            let v = order[depth];
            let cpt = &model.cpts[&v];
            let row = cpt.row_index(uni, &|p| assign[p.index()]);
            for value in 0..uni.domain_size(v) {
                let p = &cpt.rows[row][value];
                if p.is_zero() {
                    continue;
                }
                assign[v.index()] = value;
                expand(
                    model,
                    uni,
                    order,
                    depth + 1,
                    weight.clone() * p.clone(),
                    assign,
                    table,
                );
            }
        }
        expand(
            self,
            &uni,
            &order,
            0,
            BigRational::one(),
            &mut assign,
            &mut table,
        );
        Ok(table)
    }

    /// Truncated factorization: CPTs of assigned variables become point
    /// masses; everything else is untouched.
    pub fn intervene(&self, assignment: &Context) -> Result<DiscreteModel> {
        let uni = self.graph.universe();
        let mut cpts = self.cpts.clone();
        for (v, value) in assignment.iter() {
            if !self.graph.contains(v) {
                return Err(Error::VertexNotPresent(uni.name(v).to_string()));
            }
            if value >= uni.domain_size(v) {
                return Err(Error::Precondition(format!(
                    "value {value} out of domain for `{}`",
                    uni.name(v)
                )));
            }
            let cpt = cpts.get_mut(&v).unwrap();
            let mut row = vec![BigRational::zero(); uni.domain_size(v)];
            row[value] = BigRational::one();
            for r in cpt.rows.iter_mut() {
                *r = row.clone();
            }
        }
        // Interventions can invalidate switch annotations; drop them.
        Ok(DiscreteModel {
            graph: self.graph.clone(),
            cpts,
            switches: Vec::new(),
        })
    }

    /// Parses the model file format:
    ///
    /// ```text
    /// cpt <name> | <parents...>
    /// <parent values...> : <p0> <p1> ...
    /// ```
    ///
    /// Probabilities are `num/den` rationals or plain integers.
    pub fn parse(text: &str, graph: &CausalGraph) -> Result<DiscreteModel> {
        // child, declared parents, rows collected so far
        type OpenBlock = (VarId, Vec<VarId>, Vec<Option<Vec<BigRational>>>);

        let uni = graph.universe();
        let mut cpts: BTreeMap<VarId, Cpt> = BTreeMap::new();
        let mut current: Option<OpenBlock> = None;

        fn flush(
            cpts: &mut BTreeMap<VarId, Cpt>,
            uni: &Universe,
            current: Option<OpenBlock>,
        ) -> Result<()> {
            if let Some((child, parents, rows)) = current {
                let mut filled = Vec::with_capacity(rows.len());
                for (i, row) in rows.into_iter().enumerate() {
                    filled.push(row.ok_or_else(|| {
                        Error::Schema(format!(
                            "missing CPT row {} for `{}`",
                            i,
                            uni.name(child)
                        ))
                    })?);
                }
                cpts.insert(
                    child,
                    Cpt {
                        child,
                        parents,
                        rows: filled,
                    },
                );
            }
            Ok(())
        }

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("cpt ") {
                flush(&mut cpts, uni, current.take())?;
                let (name, parents_part) = match rest.split_once('|') {
                    Some((n, p)) => (n.trim(), p.trim()),
                    None => {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: "expected `cpt <name> | <parents...>`".into(),
                        })
                    }
                };
                let child = uni.get(name).ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("unknown variable `{name}`"),
                })?;
                let mut parents = Vec::new();
                for tok in parents_part.split_whitespace() {
                    parents.push(uni.get(tok).ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("unknown variable `{tok}`"),
                    })?);
                }
                let row_count: usize =
                    parents.iter().map(|&p| uni.domain_size(p)).product();
                current = Some((child, parents, vec![None; row_count]));
            } else {
                let Some((child, parents, rows)) = current.as_mut() else {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "row outside of a cpt block".into(),
                    });
                };
                let (values_part, probs_part) =
                    line.split_once(':').ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: "expected `<parent values...> : <probs...>`".into(),
                    })?;
                let values: Vec<usize> = values_part
                    .split_whitespace()
                    .map(|t| {
                        t.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            msg: format!("invalid parent value `{t}`"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if values.len() != parents.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!(
                            "expected {} parent values, found {}",
                            parents.len(),
                            values.len()
                        ),
                    });
                }
                for (&v, &p) in values.iter().zip(parents.iter()) {
                    if v >= uni.domain_size(p) {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("value {v} out of domain for `{}`", uni.name(p)),
                        });
                    }
                }
                let probs: Vec<BigRational> = probs_part
                    .split_whitespace()
                    .map(|t| parse_rational(t, line_no))
                    .collect::<Result<_>>()?;
                if probs.len() != uni.domain_size(*child) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!(
                            "expected {} probabilities, found {}",
                            uni.domain_size(*child),
                            probs.len()
                        ),
                    });
                }
                let idx = encode_row(uni, parents, &values);
                if rows[idx].is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "duplicate CPT row".into(),
                    });
                }
                rows[idx] = Some(probs);
            }
        }
        flush(&mut cpts, uni, current.take())?;
        DiscreteModel::new(graph.clone(), cpts, Vec::new())
    }

    /// Serializes in the model file format.
    pub fn to_file_string(&self) -> String {
        let uni = self.graph.universe();
        let mut out = String::new();
        for &v in self.graph.vertices() {
            let cpt = &self.cpts[&v];
            let parent_names: Vec<&str> =
                cpt.parents.iter().map(|&p| uni.name(p)).collect();
            out.push_str(&format!(
                "cpt {} | {}\n",
                uni.name(v),
                parent_names.join(" ")
            ));
            for (idx, row) in cpt.rows.iter().enumerate() {
                let values = decode_row(uni, &cpt.parents, idx);
                let vals: Vec<String> = values.iter().map(|x| x.to_string()).collect();
                let probs: Vec<String> = row.iter().map(|p| p.to_string()).collect();
                out.push_str(&format!("{} : {}\n", vals.join(" "), probs.join(" ")));
            }
        }
        out
    }
}

fn parse_rational(tok: &str, line_no: usize) -> Result<BigRational> {
    let bad = || Error::Parse {
        line: line_no,
        msg: format!("invalid probability `{tok}`"),
    };
    match tok.split_once('/') {
        Some((n, d)) => {
            let num: BigInt = n.parse().map_err(|_| bad())?;
            let den: BigInt = d.parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(num, den))
        }
        None => {
            let num: BigInt = tok.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(num))
        }
    }
}

fn encode_row(uni: &Universe, parents: &[VarId], values: &[usize]) -> usize {
    let mut idx = 0;
    for (&p, &v) in parents.iter().zip(values) {
        idx = idx * uni.domain_size(p) + v;
    }
    idx
}

fn decode_row(uni: &Universe, parents: &[VarId], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; parents.len()];
    for i in (0..parents.len()).rev() {
        let d = uni.domain_size(parents[i]);
        out[i] = idx % d;
        idx /= d;
    }
    out
}

/// Dense probability table over a sorted variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<T = BigRational> {
    universe: Arc<Universe>,
    vars: Vec<VarId>,
    strides: Vec<usize>,
    cells: Vec<T>,
}

impl<T: Prob> JointTable<T> {
    fn zeroed(universe: Arc<Universe>, mut vars: Vec<VarId>) -> Result<Self> {
        vars.sort_unstable();
        vars.dedup();
        let mut cells: u128 = 1;
        for &v in &vars {
            cells *= universe.domain_size(v) as u128;
        }
        if cells > CELL_CAP as u128 {
            return Err(Error::TableTooLarge {
                cells,
                cap: CELL_CAP,
            });
        }
        let mut strides = vec![0usize; vars.len()];
        let mut acc = 1usize;
        for i in (0..vars.len()).rev() {
            strides[i] = acc;
            acc *= universe.domain_size(vars[i]);
        }
        Ok(JointTable {
            universe,
            vars,
            strides,
            cells: vec![T::zero(); acc],
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn var_set(&self) -> BTreeSet<VarId> {
        self.vars.iter().copied().collect()
    }

    fn index_of(&self, assign: &dyn Fn(VarId) -> usize) -> usize {
        self.vars
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| assign(v) * s)
            .sum()
    }

    /// Probability of one full assignment.
    pub fn prob(&self, ctx: &Context) -> Result<T> {
        let mut idx = 0usize;
        for (&v, &s) in self.vars.iter().zip(&self.strides) {
            let value = ctx.get(v).ok_or_else(|| {
                Error::Precondition(format!(
                    "assignment missing `{}`",
                    self.universe.name(v)
                ))
            })?;
            idx += value * s;
        }
        Ok(self.cells[idx].clone())
    }

    /// Total mass of all cells consistent with a partial assignment.
    pub fn mass(&self, partial: &Context) -> T {
        let free: Vec<(usize, usize)> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, &v)| !partial.contains(v))
            .map(|(i, &v)| (i, self.universe.domain_size(v)))
            .collect();
        let base: usize = self
            .vars
            .iter()
            .zip(&self.strides)
            .filter_map(|(&v, &s)| partial.get(v).map(|x| x * s))
            .sum();
        let mut total = T::zero();
        let mut counters = vec![0usize; free.len()];
        loop {
            let idx: usize = base
                + free
                    .iter()
                    .zip(&counters)
                    .map(|((i, _), &c)| c * self.strides[*i])
                    .sum::<usize>();
            total = total + self.cells[idx].clone();
            let mut k = free.len();
            loop {
                if k == 0 {
                    return total;
                }
                k -= 1;
                counters[k] += 1;
                if counters[k] < free[k].1 {
                    break;
                }
                counters[k] = 0;
            }
        }
    }

    pub fn marginal(&self, keep: &BTreeSet<VarId>) -> Result<JointTable<T>> {
        let mut out: JointTable<T> = JointTable::zeroed(
            self.universe.clone(),
            keep.iter().copied().filter(|v| self.vars.contains(v)).collect(),
        )?;
        let all = crate::graph::assignments(&self.universe, &self.vars);
        for ctx in all {
            let idx = out.index_of(&|v| ctx.get(v).unwrap());
            let p = self.prob(&ctx)?;
            out.cells[idx] = out.cells[idx].clone() + p;
        }
        Ok(out)
    }

    pub fn total_mass(&self) -> T {
        self.cells
            .iter()
            .fold(T::zero(), |acc, c| acc + c.clone())
    }

    pub fn strictly_positive(&self) -> bool {
        self.cells.iter().all(|c| *c > T::zero())
    }
}

impl JointTable<BigRational> {
    pub fn to_f64(&self) -> JointTable<f64> {
        JointTable {
            universe: self.universe.clone(),
            vars: self.vars.clone(),
            strides: self.strides.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| c.to_f64().expect("rational fits in f64"))
                .collect(),
        }
    }

    /// Parses the joint-table format: lines `<name>=<v> ... p=<num>/<den>`.
    ///
    /// Unlisted assignments have zero probability; total mass must be 1.
    /// When `graph` is given, names resolve against it and the variables
    /// must be exactly its observed vertices; otherwise a fresh universe is
    /// inferred with domains sized by the largest value seen per variable.
    pub fn parse(text: &str, graph: Option<&CausalGraph>) -> Result<JointTable<BigRational>> {
        struct RawLine {
            assigns: Vec<(String, usize)>,
            p: BigRational,
            line: usize,
        }
        let mut raws: Vec<RawLine> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut assigns = Vec::new();
            let mut p: Option<BigRational> = None;
            for tok in line.split_whitespace() {
                let (name, value) = tok.split_once('=').ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("expected `<name>=<value>`, found `{tok}`"),
                })?;
                if name == "p" {
                    p = Some(parse_rational(value, line_no)?);
                } else {
                    let v: usize = value.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("invalid value `{value}`"),
                    })?;
                    assigns.push((name.to_string(), v));
                }
            }
            let p = p.ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "missing `p=<prob>`".into(),
            })?;
            raws.push(RawLine {
                assigns,
                p,
                line: line_no,
            });
        }
        if raws.is_empty() {
            return Err(Error::Schema("empty distribution file".into()));
        }

        let universe: Arc<Universe> = match graph {
            Some(g) => g.universe().clone(),
            None => {
                let mut maxima: BTreeMap<String, usize> = BTreeMap::new();
                for raw in &raws {
                    for (name, v) in &raw.assigns {
                        let m = maxima.entry(name.clone()).or_insert(0);
                        *m = (*m).max(*v);
                    }
                }
                Universe::new(
                    maxima
                        .into_iter()
                        .map(|(name, m)| VariableDecl {
                            name,
                            observed: true,
                            domain_size: (m + 1).max(2),
                        })
                        .collect(),
                )?
            }
        };

        let vars: Vec<VarId> = match graph {
            Some(g) => g.observed_vertices().into_iter().collect(),
            None => universe.var_ids().collect(),
        };
        let var_set: BTreeSet<VarId> = vars.iter().copied().collect();
        let mut table = JointTable::zeroed(universe.clone(), vars)?;
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for raw in &raws {
            let mut ctx = Context::new();
            for (name, v) in &raw.assigns {
                let var = universe.get(name).ok_or_else(|| Error::Parse {
                    line: raw.line,
                    msg: format!("unknown variable `{name}`"),
                })?;
                if !var_set.contains(&var) {
                    return Err(Error::Parse {
                        line: raw.line,
                        msg: format!("`{name}` is not an observed variable of the graph"),
                    });
                }
                if *v >= universe.domain_size(var) {
                    return Err(Error::Parse {
                        line: raw.line,
                        msg: format!("value {v} out of domain for `{name}`"),
                    });
                }
                ctx.insert(var, *v);
            }
            if ctx.len() != table.vars.len() {
                return Err(Error::Parse {
                    line: raw.line,
                    msg: "line does not assign every variable".into(),
                });
            }
            if raw.p < BigRational::zero() {
                return Err(Error::Parse {
                    line: raw.line,
                    msg: "negative probability".into(),
                });
            }
            let key: Vec<usize> =
                table.vars.iter().map(|&v| ctx.get(v).unwrap()).collect();
            if !seen.insert(key) {
                return Err(Error::Parse {
                    line: raw.line,
                    msg: "duplicate assignment".into(),
                });
            }
            let idx = table.index_of(&|v| ctx.get(v).unwrap());
            table.cells[idx] = raw.p.clone();
        }
        if table.total_mass() != BigRational::one() {
            return Err(Error::Schema(format!(
                "total mass is {}, expected 1",
                table.total_mass()
            )));
        }
        Ok(table)
    }

    /// Serializes in the joint-table format, skipping zero cells.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for ctx in crate::graph::assignments(&self.universe, &self.vars) {
            let p = self.prob(&ctx).expect("full assignment");
            if p.is_zero() {
                continue;
            }
            let parts: Vec<String> = self
                .vars
                .iter()
                .map(|&v| format!("{}={}", self.universe.name(v), ctx.get(v).unwrap()))
                .collect();
            out.push_str(&format!("{} p={}\n", parts.join(" "), p));
        }
        out
    }
}

// ── context-specific independence ───────────────────────────────────────

/// Exact CSI test: `x ⊥ y | context, cond` holds iff for every assignment
/// `s` of `cond` with positive mass together with `context`,
/// `P(x, y, ctx, s) · P(ctx, s) = P(x, ctx, s) · P(y, ctx, s)` for all
/// values of `x` and `y`. Degenerate conditioning cells are skipped.
pub fn csi_holds(
    j: &JointTable<BigRational>,
    x: VarId,
    y: VarId,
    context: &Context,
    cond: &BTreeSet<VarId>,
) -> Result<bool> {
    csi_check(j, x, y, context, cond, |lhs, rhs| lhs == rhs)
}

/// Float-path CSI test with an absolute tolerance on
/// `|P(x,y|s) - P(x|s)·P(y|s)| · P(s)`.
pub fn csi_holds_f64(
    j: &JointTable<f64>,
    x: VarId,
    y: VarId,
    context: &Context,
    cond: &BTreeSet<VarId>,
    tol: f64,
) -> Result<bool> {
    csi_check(j, x, y, context, cond, move |lhs, rhs| {
        (lhs - rhs).abs() <= tol
    })
}

fn csi_check<T: Prob>(
    j: &JointTable<T>,
    x: VarId,
    y: VarId,
    context: &Context,
    cond: &BTreeSet<VarId>,
    close: impl Fn(&T, &T) -> bool,
) -> Result<bool> {
    let vars = j.var_set();
    for &v in [x, y].iter().chain(cond.iter()).chain(context.keys().collect::<Vec<_>>().iter()) {
        if !vars.contains(&v) {
            return Err(Error::Precondition(format!(
                "`{}` is not a table variable",
                j.universe().name(v)
            )));
        }
    }
    if x == y || cond.contains(&x) || cond.contains(&y) || context.contains(x) || context.contains(y)
    {
        return Err(Error::Precondition(
            "CSI arguments must be disjoint".into(),
        ));
    }
    let uni = j.universe().clone();
    let cond_vars: Vec<VarId> = cond.iter().copied().collect();
    for s in crate::graph::assignments(&uni, &cond_vars) {
        let base = context.merged_with(&s);
        let mass_s = j.mass(&base);
        if mass_s.is_zero() {
            continue;
        }
        // normalization: compare P(x,y,s)·P(s) with P(x,s)·P(y,s)
        for vx in 0..uni.domain_size(x) {
            let mut with_x = base.clone();
            with_x.insert(x, vx);
            let mass_x = j.mass(&with_x);
            for vy in 0..uni.domain_size(y) {
                let mut with_y = base.clone();
                with_y.insert(y, vy);
                let mass_y = j.mass(&with_y);
                let mut with_xy = with_x.clone();
                with_xy.insert(y, vy);
                let mass_xy = j.mass(&with_xy);
                let lhs = mass_xy * mass_s.clone();
                let rhs = mass_x.clone() * mass_y;
                if !close(&lhs, &rhs) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ── estimand evaluation ─────────────────────────────────────────────────

/// Memoizing estimand evaluator against one joint table.
///
/// Results are cached per tree node keyed by the values of the node's free
/// variables, so sweeping all treatment/outcome assignments shares work.
pub struct Evaluator<'a, T: Prob> {
    joint: &'a JointTable<T>,
    nodes: Vec<&'a Estimand>,
    free: Vec<Vec<VarId>>,
    children: Vec<Vec<usize>>,
    memo: HashMap<(usize, Vec<usize>), T>,
}

impl<'a, T: Prob> Evaluator<'a, T> {
    pub fn new(root: &'a Estimand, joint: &'a JointTable<T>) -> Result<Self> {
        let mut ev = Evaluator {
            joint,
            nodes: Vec::new(),
            free: Vec::new(),
            children: Vec::new(),
            memo: HashMap::new(),
        };
        ev.index(root)?;
        Ok(ev)
    }

    fn index(&mut self, e: &'a Estimand) -> Result<usize> {
        let id = self.nodes.len();
        self.nodes.push(e);
        self.free.push(e.free_vars().into_iter().collect());
        self.children.push(Vec::new());
        let kids: Vec<&'a Estimand> = match e {
            Estimand::ObsProb { vars, given, ctx } => {
                let table_vars = self.joint.var_set();
                for &v in vars.iter().chain(given.iter()) {
                    if !table_vars.contains(&v) {
                        return Err(Error::UnknownVariable(
                            self.joint.universe().name(v).to_string(),
                        ));
                    }
                }
                for v in ctx.keys() {
                    if !table_vars.contains(&v) {
                        return Err(Error::UnknownVariable(
                            self.joint.universe().name(v).to_string(),
                        ));
                    }
                }
                Vec::new()
            }
            Estimand::SumOver { body, .. } => vec![body.as_ref()],
            Estimand::Product(children) => children.iter().collect(),
            Estimand::Quotient { num, den } => vec![num.as_ref(), den.as_ref()],
            Estimand::ContextMixture(arms) => {
                for (ctx, _) in arms {
                    for v in ctx.keys() {
                        if !self.joint.var_set().contains(&v) {
                            return Err(Error::UnknownVariable(
                                self.joint.universe().name(v).to_string(),
                            ));
                        }
                    }
                }
                arms.iter().map(|(_, c)| c).collect()
            }
            Estimand::NonIdentifiable { .. } => {
                return Err(Error::Precondition(
                    "cannot evaluate a non-identifiable result".into(),
                ))
            }
        };
        for kid in kids {
            let kid_id = self.index(kid)?;
            let parent = id;
            self.children[parent].push(kid_id);
        }
        Ok(id)
    }

    /// Evaluates the root under `env`, which must bind every free variable.
    pub fn eval(&mut self, env: &Context) -> Result<T> {
        for &v in &self.free[0] {
            if !env.contains(v) {
                return Err(Error::Precondition(format!(
                    "environment does not bind `{}`",
                    self.joint.universe().name(v)
                )));
            }
        }
        let mut env_vec: Vec<Option<usize>> = vec![None; self.joint.universe().len()];
        for (v, x) in env.iter() {
            env_vec[v.index()] = Some(x);
        }
        self.eval_node(0, &mut env_vec)
    }

    fn eval_node(&mut self, id: usize, env: &mut Vec<Option<usize>>) -> Result<T> {
        let key: Vec<usize> = self.free[id]
            .iter()
            .map(|v| env[v.index()].expect("free variable bound"))
            .collect();
        if let Some(hit) = self.memo.get(&(id, key.clone())) {
            return Ok(hit.clone());
        }
        let node = self.nodes[id];
        let value = match node {
            Estimand::ObsProb { vars, given, ctx } => {
                let mut den_ctx = ctx.clone();
                for &v in given {
                    den_ctx.insert(v, env[v.index()].expect("free variable bound"));
                }
                let den = self.joint.mass(&den_ctx);
                if den.is_zero() {
                    return Err(Error::ZeroMass(render(
                        node,
                        self.joint.universe(),
                        RenderStyle::Text,
                    )));
                }
                let mut num_ctx = den_ctx.clone();
                for &v in vars {
                    num_ctx.insert(v, env[v.index()].expect("free variable bound"));
                }
                self.joint.mass(&num_ctx) / den
            }
            Estimand::SumOver { vars, .. } => {
                let vars = vars.clone();
                let body = self.children[id][0];
                let uni = self.joint.universe().clone();
                let saved: Vec<Option<usize>> =
                    vars.iter().map(|v| env[v.index()]).collect();
                let mut total = T::zero();
                let mut counters = vec![0usize; vars.len()];
                'outer: loop {
                    for (v, &c) in vars.iter().zip(&counters) {
                        env[v.index()] = Some(c);
                    }
                    total = total + self.eval_node(body, env)?;
                    let mut k = vars.len();
                    loop {
                        if k == 0 {
                            break 'outer;
                        }
                        k -= 1;
                        counters[k] += 1;
                        if counters[k] < uni.domain_size(vars[k]) {
                            break;
                        }
                        counters[k] = 0;
                    }
                }
                for (v, old) in vars.iter().zip(saved) {
                    env[v.index()] = old;
                }
                total
            }
            Estimand::Product(_) => {
                let kids = self.children[id].clone();
                let mut acc = T::one();
                for kid in kids {
                    acc = acc * self.eval_node(kid, env)?;
                }
                acc
            }
            Estimand::Quotient { .. } => {
                let num_id = self.children[id][0];
                let den_id = self.children[id][1];
                let den = self.eval_node(den_id, env)?;
                if den.is_zero() {
                    return Err(Error::ZeroMass(render(
                        self.nodes[den_id],
                        self.joint.universe(),
                        RenderStyle::Text,
                    )));
                }
                self.eval_node(num_id, env)? / den
            }
            Estimand::ContextMixture(arms) => {
                let kids = self.children[id].clone();
                let mut acc = T::zero();
                for ((ctx, _), kid) in arms.iter().zip(kids) {
                    let weight = self.joint.mass(ctx);
                    if weight.is_zero() {
                        return Err(Error::ZeroMass(format!(
                            "context {}",
                            ctx.to_display(self.joint.universe())
                        )));
                    }
                    acc = acc + weight * self.eval_node(kid, env)?;
                }
                acc
            }
            Estimand::NonIdentifiable { .. } => unreachable!("rejected at indexing"),
        };
        self.memo.insert((id, key), value.clone());
        Ok(value)
    }
}

/// One-shot evaluation of `e` against `j` under `env`.
pub fn evaluate<T: Prob>(e: &Estimand, j: &JointTable<T>, env: &Context) -> Result<T> {
    Evaluator::new(e, j)?.eval(env)
}

// ── random model generation ─────────────────────────────────────────────

/// Strictly positive random CPT rows: integers in `1..=100`, normalized.
pub fn random_model<R: Rng>(g: &CausalGraph, rng: &mut R) -> DiscreteModel {
    let uni = g.universe();
    let mut cpts = BTreeMap::new();
    for &v in g.vertices() {
        let parents: Vec<VarId> = g.parents(v).expect("vertex present").to_vec();
        let row_count: usize = parents.iter().map(|&p| uni.domain_size(p)).product();
        let width = uni.domain_size(v);
        let rows: Vec<Vec<BigRational>> = (0..row_count)
            .map(|_| {
                let raw: Vec<i64> = (0..width).map(|_| rng.gen_range(1..=100)).collect();
                let total: i64 = raw.iter().sum();
                raw.into_iter().map(|n| ratio(n, total)).collect()
            })
            .collect();
        cpts.insert(
            v,
            Cpt {
                child: v,
                parents,
                rows,
            },
        );
    }
    DiscreteModel::new(g.clone(), cpts, Vec::new()).expect("random CPTs are well-formed")
}

/// Random strictly positive model compatible with a label set: for every
/// labeled edge, rows whose control-parent values match the context copy the
/// row with the dropped parent at its reference value.
pub fn random_compatible_model<R: Rng>(
    g: &CausalGraph,
    labels: &LabelSet,
    c_spec: &ControlSpec,
    rng: &mut R,
) -> DiscreteModel {
    let base = random_model(g, rng);
    let uni = g.universe().clone();
    let cset = c_spec.control_set();
    let mut cpts: BTreeMap<VarId, Cpt> = g
        .vertices()
        .iter()
        .map(|&v| (v, base.cpt(v).clone()))
        .collect();
    let mut switches = Vec::new();

    for (ctx, edges) in labels.iter() {
        for e in edges {
            let cpt = cpts.get_mut(&e.child).expect("labeled child has a CPT");
            let slot = cpt
                .parents
                .iter()
                .position(|&p| p == e.parent)
                .expect("labeled edge is a graph edge");
            let control_slots: Vec<(usize, usize)> = cpt
                .parents
                .iter()
                .enumerate()
                .filter(|(_, p)| cset.contains(p))
                .map(|(i, &p)| (i, ctx.get(p).expect("full context")))
                .collect();
            for idx in 0..cpt.rows.len() {
                let values = decode_row(&uni, &cpt.parents, idx);
                if !control_slots.iter().all(|&(i, want)| values[i] == want) {
                    continue;
                }
                if values[slot] == 0 {
                    continue;
                }
                let mut reference = values.clone();
                reference[slot] = 0;
                let ref_idx = encode_row(&uni, &cpt.parents, &reference);
                cpt.rows[idx] = cpt.rows[ref_idx].clone();
            }
            switches.push(ContextSwitch {
                edge: *e,
                context: ctx.restricted_to(&cset),
            });
        }
    }
    DiscreteModel::new(g.clone(), cpts, switches)
        .expect("compatibility enforcement preserves well-formedness")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{set, XOR_GRAPH};
    use rand::SeedableRng;

    /// CPTs of the xor model: T, Z fair coins, X = T xor Z (optionally with
    /// flip noise), Y = T*X + Z exactly.
    pub(crate) fn xor_model(noise_on_x: Option<(i64, i64)>) -> DiscreteModel {
        let g = CausalGraph::parse(XOR_GRAPH).unwrap();
        let uni = g.universe().clone();
        let t = uni.lookup("T").unwrap();
        let z = uni.lookup("Z").unwrap();
        let x = uni.lookup("X").unwrap();
        let y = uni.lookup("Y").unwrap();
        let half = ratio(1, 2);
        let mut cpts = BTreeMap::new();
        cpts.insert(
            t,
            Cpt {
                child: t,
                parents: vec![],
                rows: vec![vec![half.clone(), half.clone()]],
            },
        );
        cpts.insert(
            z,
            Cpt {
                child: z,
                parents: vec![],
                rows: vec![vec![half.clone(), half.clone()]],
            },
        );
        // parents of X are (T, Z) in declaration order
        let (keep, flip) = match noise_on_x {
            Some((n, d)) => (ratio(d - n, d), ratio(n, d)),
            None => (ratio(1, 1), ratio(0, 1)),
        };
        let x_rows: Vec<Vec<BigRational>> = [0usize, 1, 2, 3]
            .iter()
            .map(|&row| {
                let tv = row / 2;
                let zv = row % 2;
                let want = tv ^ zv;
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
        // parents of Y are (T, Z, X); Y = T*X + Z over domain {0,1,2}
        let y_rows: Vec<Vec<BigRational>> = (0..8)
            .map(|row| {
                let tv = row / 4;
                let zv = (row / 2) % 2;
                let xv = row % 2;
                let want = tv * xv + zv;
                let mut r = vec![ratio(0, 1), ratio(0, 1), ratio(0, 1)];
                r[want] = ratio(1, 1);
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
        DiscreteModel::new(g, cpts, Vec::new()).unwrap()
    }

    #[test]
    fn xor_joint_matches_noise_enumeration() {
        let m = xor_model(None);
        let uni = m.graph().universe().clone();
        let j = m.joint(&m.graph().vertex_set()).unwrap();
        let ctx = Context::from_pairs([
            (uni.lookup("T").unwrap(), 0),
            (uni.lookup("Z").unwrap(), 0),
            (uni.lookup("X").unwrap(), 0),
            (uni.lookup("Y").unwrap(), 0),
        ]);
        assert_eq!(j.prob(&ctx).unwrap(), ratio(1, 4));
        assert_eq!(j.total_mass(), ratio(1, 1));
    }

    #[test]
    fn single_root_joint() {
        let g = CausalGraph::parse("var A observed").unwrap();
        let a = g.universe().lookup("A").unwrap();
        let mut cpts = BTreeMap::new();
        cpts.insert(
            a,
            Cpt {
                child: a,
                parents: vec![],
                rows: vec![vec![ratio(1, 2), ratio(1, 2)]],
            },
        );
        let m = DiscreteModel::new(g.clone(), cpts, Vec::new()).unwrap();
        let j = m.joint(&g.vertex_set()).unwrap();
        assert_eq!(j.mass(&Context::from_pairs([(a, 0)])), ratio(1, 2));
    }

    #[test]
    fn do_x_pushes_mass_to_sum() {
        // forcing X to 1 makes Y = T + Z, so P(Y=2) = P(T=1)P(Z=1) = 1/4
        let m = xor_model(None);
        let uni = m.graph().universe().clone();
        let x = uni.lookup("X").unwrap();
        let y = uni.lookup("Y").unwrap();
        let m2 = m.intervene(&Context::from_pairs([(x, 1)])).unwrap();
        let j = m2.joint(&[y].into_iter().collect()).unwrap();
        assert_eq!(j.prob(&Context::from_pairs([(y, 2)])).unwrap(), ratio(1, 4));
    }

    #[test]
    fn intervention_on_root_preserves_descendant_marginal() {
        let m = xor_model(Some((1, 10)));
        let g = m.graph().clone();
        let uni = g.universe().clone();
        let t = uni.lookup("T").unwrap();
        // do(T = t) then mix manually over the root marginal
        let j_obs = m.joint(&g.vertex_set()).unwrap();
        let m0 = m.intervene(&Context::from_pairs([(t, 0)])).unwrap();
        let j0 = m0.joint(&g.vertex_set()).unwrap();
        for ctx in crate::graph::assignments(&uni, j_obs.vars()) {
            if ctx.get(t) == Some(0) {
                assert_eq!(
                    j_obs.prob(&ctx).unwrap(),
                    j0.prob(&ctx).unwrap() * ratio(1, 2),
                    "root intervention must equal conditioning at the root"
                );
            }
        }
        // empty intervention is the identity
        let same = m.intervene(&Context::new()).unwrap();
        assert_eq!(
            same.joint(&g.vertex_set()).unwrap(),
            m.joint(&g.vertex_set()).unwrap()
        );
    }

    #[test]
    fn intervening_on_everything_is_a_point_mass() {
        let m = xor_model(Some((1, 10)));
        let g = m.graph().clone();
        let uni = g.universe().clone();
        let all = Context::from_pairs([
            (uni.lookup("T").unwrap(), 1),
            (uni.lookup("Z").unwrap(), 0),
            (uni.lookup("X").unwrap(), 1),
            (uni.lookup("Y").unwrap(), 2),
        ]);
        let j = m.intervene(&all).unwrap().joint(&g.vertex_set()).unwrap();
        assert_eq!(j.prob(&all).unwrap(), ratio(1, 1));
        assert_eq!(j.total_mass(), ratio(1, 1));
    }

    #[test]
    fn intervention_leaves_non_descendants_untouched() {
        let m = xor_model(Some((1, 10)));
        let g = m.graph().clone();
        let uni = g.universe().clone();
        let x = uni.lookup("X").unwrap();
        // T and Z are non-descendants of X
        let keep: BTreeSet<VarId> = [uni.lookup("T").unwrap(), uni.lookup("Z").unwrap()]
            .into_iter()
            .collect();
        let before = m.joint(&keep).unwrap();
        let after = m
            .intervene(&Context::from_pairs([(x, 1)]))
            .unwrap()
            .joint(&keep)
            .unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn xor_csi_examples() {
        let uni_m = xor_model(None);
        let g = uni_m.graph().clone();
        let uni = g.universe().clone();
        let t = uni.lookup("T").unwrap();
        let z = uni.lookup("Z").unwrap();
        let x = uni.lookup("X").unwrap();
        let y = uni.lookup("Y").unwrap();
        let j = uni_m.joint(&g.vertex_set()).unwrap();
        let zset: BTreeSet<VarId> = [z].into_iter().collect();
        assert!(csi_holds(&j, x, y, &Context::from_pairs([(t, 0)]), &zset).unwrap());

        let noisy = xor_model(Some((1, 10)));
        let jn = noisy.joint(&g.vertex_set()).unwrap();
        assert!(csi_holds(&jn, x, y, &Context::from_pairs([(t, 0)]), &zset).unwrap());
        assert!(!csi_holds(&jn, x, y, &Context::from_pairs([(t, 1)]), &zset).unwrap());
    }

    #[test]
    fn product_distribution_satisfies_every_csi() {
        let g = CausalGraph::parse(XOR_GRAPH).unwrap();
        let uni = g.universe().clone();
        // independent model over the same variables: strip the edges
        let empty = g.mutilate(&g.vertex_set(), &BTreeSet::new());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = random_model(&empty, &mut rng);
        let j = m.joint(&empty.vertex_set()).unwrap();
        let t = uni.lookup("T").unwrap();
        let x = uni.lookup("X").unwrap();
        let y = uni.lookup("Y").unwrap();
        let z = uni.lookup("Z").unwrap();
        assert!(csi_holds(&j, x, y, &Context::from_pairs([(t, 1)]), &[z].into_iter().collect()).unwrap());
        assert!(csi_holds(&j, t, z, &Context::new(), &BTreeSet::new()).unwrap());
        let _ = set(&g, &["T"]);
    }

    #[test]
    fn evaluate_plain_conditional() {
        let m = xor_model(Some((1, 10)));
        let g = m.graph().clone();
        let uni = g.universe().clone();
        let x = uni.lookup("X").unwrap();
        let y = uni.lookup("Y").unwrap();
        let j = m.joint(&g.vertex_set()).unwrap();
        let e = Estimand::obs_prob(vec![y], vec![x]);
        let env = Context::from_pairs([(x, 1), (y, 1)]);
        let got = evaluate(&e, &j, &env).unwrap();
        let mass_xy = j.mass(&Context::from_pairs([(x, 1), (y, 1)]));
        let mass_x = j.mass(&Context::from_pairs([(x, 1)]));
        assert_eq!(got, mass_xy / mass_x);
    }

    #[test]
    fn trivial_term_evaluates_to_one() {
        let m = xor_model(None);
        let j = m.joint(&m.graph().vertex_set()).unwrap();
        assert_eq!(
            evaluate(&Estimand::one(), &j, &Context::new()).unwrap(),
            ratio(1, 1)
        );
    }

    #[test]
    fn zero_mass_conditioning_is_reported() {
        let m = xor_model(None);
        let g = m.graph().clone();
        let uni = g.universe().clone();
        let y = uni.lookup("Y").unwrap();
        let x = uni.lookup("X").unwrap();
        let t = uni.lookup("T").unwrap();
        let z = uni.lookup("Z").unwrap();
        let j = m.joint(&g.vertex_set()).unwrap();
        // conditioning on Y=2 with T=0 is impossible in the exact model
        let e = Estimand::ObsProb {
            vars: vec![x],
            given: vec![y],
            ctx: Context::from_pairs([(t, 0), (z, 0)]),
        };
        let env = Context::from_pairs([(x, 0), (y, 2)]);
        assert!(matches!(
            evaluate(&e, &j, &env),
            Err(Error::ZeroMass(_))
        ));
    }

    #[test]
    fn missing_environment_binding_is_an_error() {
        let m = xor_model(None);
        let uni = m.graph().universe().clone();
        let y = uni.lookup("Y").unwrap();
        let x = uni.lookup("X").unwrap();
        let j = m.joint(&m.graph().vertex_set()).unwrap();
        let e = Estimand::obs_prob(vec![y], vec![x]);
        assert!(evaluate(&e, &j, &Context::from_pairs([(y, 0)])).is_err());
    }

    #[test]
    fn table_cap_fails_fast() {
        let mut text = String::new();
        for i in 0..25 {
            text.push_str(&format!("var V{i} observed\n"));
        }
        let g = CausalGraph::parse(&text).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = random_model(&g, &mut rng);
        assert!(matches!(
            m.joint(&g.vertex_set()),
            Err(Error::TableTooLarge { .. })
        ));
    }

    #[test]
    fn model_file_round_trip() {
        let m = xor_model(Some((1, 10)));
        let text = m.to_file_string();
        let parsed = DiscreteModel::parse(&text, m.graph()).unwrap();
        assert_eq!(parsed.cpt(m.graph().universe().lookup("X").unwrap()).rows,
                   m.cpt(m.graph().universe().lookup("X").unwrap()).rows);
        assert_eq!(parsed.to_file_string(), text);
    }

    #[test]
    fn joint_file_round_trip() {
        let m = xor_model(Some((1, 10)));
        let j = m.joint(&m.graph().observed_vertices()).unwrap();
        let text = j.to_file_string();
        let parsed = JointTable::parse(&text, Some(m.graph())).unwrap();
        assert_eq!(parsed, j);
        let inferred = JointTable::parse(&text, None).unwrap();
        assert_eq!(inferred.total_mass(), ratio(1, 1));
    }

    #[test]
    fn compatible_model_switch_is_verified() {
        use crate::labels::{ControlSpec, LabelSet};
        let g = CausalGraph::parse(XOR_GRAPH).unwrap();
        let uni = g.universe().clone();
        let t = uni.lookup("T").unwrap();
        let x = uni.lookup("X").unwrap();
        let y = uni.lookup("Y").unwrap();
        let c_spec = ControlSpec::new(&g, vec![t]).unwrap();
        let mut labels = LabelSet::empty(&c_spec, &uni);
        labels
            .insert(&Context::from_pairs([(t, 0)]), Edge::new(x, y))
            .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = random_compatible_model(&g, &labels, &c_spec, &mut rng);
        assert_eq!(m.switches().len(), 1);
        let j = m.joint(&g.vertex_set()).unwrap();
        assert!(j.strictly_positive());
        // the annotated independence must hold distributionally
        let z = uni.lookup("Z").unwrap();
        let cond: BTreeSet<VarId> = [z].into_iter().collect();
        assert!(csi_holds(&j, y, x, &Context::from_pairs([(t, 0)]), &cond).unwrap());
    }

    #[test]
    fn float_path_matches_exact_path() {
        let m = xor_model(Some((1, 10)));
        let g = m.graph().clone();
        let uni = g.universe().clone();
        let x = uni.lookup("X").unwrap();
        let y = uni.lookup("Y").unwrap();
        let j = m.joint(&g.vertex_set()).unwrap();
        let jf = j.to_f64();
        let e = Estimand::sum_over(
            [x].into_iter().collect(),
            Estimand::product(vec![
                Estimand::obs_prob(vec![x], vec![]),
                Estimand::obs_prob(vec![y], vec![x]),
            ]),
        );
        let env = Context::from_pairs([(y, 1)]);
        let exact = evaluate(&e, &j, &env).unwrap();
        let fast = evaluate(&e, &jf, &env).unwrap();
        assert!((exact.to_f64().unwrap() - fast).abs() < 1e-12);
    }
}
