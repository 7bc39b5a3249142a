//! Random-graph benchmark harness.
//!
//! Instances are Erdős–Rényi skeletons `G(n, log(n)/n)` oriented by a random
//! vertex ordering. Each vertex is observed with probability `p_observed`;
//! observed roots become controls with probability `p_control` and are then
//! merged into a single binary control variable whose children are the union
//! of the controls' children. Labeled edges are drawn among the edges whose
//! child is also a child of the merged control. The observed non-control
//! vertices are split into treatment and outcome.
//!
//! The baseline runs plain identification on the same instance with the
//! labels discarded and the control kept as an ordinary observed vertex.
//!
//! The PRNG is ChaCha8 seeded per instance with `seed ^ instance_index`
//! where `instance_index = (n << 32) | repetition`, so instances are
//! reproducible across platforms and independent of scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::admg::Admg;
use crate::csi::identify_csi;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, Edge, Universe, VarId, VariableDecl};
use crate::ident::identify;
use crate::labels::{ControlSpec, LabelSet};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Graph sizes to run, ascending.
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub p_observed: f64,
    pub p_control: f64,
    pub p_no_label: f64,
}

impl BenchConfig {
    pub fn new(ns: Vec<usize>, reps: usize, seed: u64) -> Self {
        BenchConfig {
            ns,
            reps,
            seed,
            p_observed: 0.7,
            p_control: 0.8,
            p_no_label: 0.2,
        }
    }

    pub fn from_range(n_min: usize, n_max: usize, n_step: usize, reps: usize, seed: u64) -> Self {
        let mut ns = Vec::new();
        let mut n = n_min;
        while n <= n_max {
            ns.push(n);
            n += n_step.max(1);
        }
        Self::new(ns, reps, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() {
            return Err(Error::Config("no graph sizes requested".into()));
        }
        if self.ns.iter().any(|&n| n < 3) {
            return Err(Error::Config("graph sizes must be at least 3".into()));
        }
        if self.reps < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        for (name, p) in [
            ("p_observed", self.p_observed),
            ("p_control", self.p_control),
            ("p_no_label", self.p_no_label),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One generated problem instance.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub graph: CausalGraph,
    pub c_spec: ControlSpec,
    pub labels: LabelSet,
    pub treatment: BTreeSet<VarId>,
    pub outcome: BTreeSet<VarId>,
}

/// Generates the instance for `(cfg, n, seed)`. Deterministic in all three.
pub fn random_instance(cfg: &BenchConfig, n: usize, seed: u64) -> BenchInstance {
    // Degenerate draws (fewer than two observed non-control vertices) are
    // resampled from the next PRNG stream.
    for attempt in 0.. {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        if let Some(inst) = try_instance(cfg, n, &mut rng) {
            return inst;
        }
    }
    unreachable!("resampling terminates almost surely")
}

fn try_instance(cfg: &BenchConfig, n: usize, rng: &mut ChaCha8Rng) -> Option<BenchInstance> {
    let p_edge = (n as f64).ln() / n as f64;

    // skeleton + orientation by a random vertex ranking
    let mut rank: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        rank.swap(i, rng.gen_range(0..=i));
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p_edge) {
                if rank[i] < rank[j] {
                    edges.push((i, j));
                } else {
                    edges.push((j, i));
                }
            }
        }
    }
    let observed: Vec<bool> = (0..n).map(|_| rng.gen_bool(cfg.p_observed)).collect();

    // control selection among observed roots of the preliminary graph
    let mut has_parent = vec![false; n];
    for &(_, c) in &edges {
        has_parent[c] = true;
    }
    let controls: Vec<usize> = (0..n)
        .filter(|&i| observed[i] && !has_parent[i] && rng.gen_bool(cfg.p_control))
        .collect();

    // merge the controls into one binary variable named C
    let control_set: BTreeSet<usize> = controls.iter().copied().collect();
    let mut decls: Vec<VariableDecl> = Vec::new();
    let mut index_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, &obs) in observed.iter().enumerate() {
        if control_set.contains(&i) {
            continue;
        }
        index_of.insert(i, decls.len());
        decls.push(VariableDecl {
            name: format!("v{i}"),
            observed: obs,
            domain_size: 2,
        });
    }
    let merged = if controls.is_empty() {
        None
    } else {
        decls.push(VariableDecl {
            name: "C".into(),
            observed: true,
            domain_size: 2,
        });
        Some(decls.len() - 1)
    };

    let universe = Universe::new(decls).expect("generated names are unique tokens");
    let var = |decl_idx: usize| -> VarId {
        universe.var_ids().nth(decl_idx).expect("index in range")
    };
    let mut final_edges: BTreeSet<Edge> = BTreeSet::new();
    for &(p, c) in &edges {
        if control_set.contains(&c) {
            continue; // controls are roots; no in-edges existed anyway
        }
        if control_set.contains(&p) {
            let m = merged.expect("control implies merged variable");
            final_edges.insert(Edge::new(var(m), var(index_of[&c])));
        } else {
            final_edges.insert(Edge::new(var(index_of[&p]), var(index_of[&c])));
        }
    }
    let graph = CausalGraph::new(universe.clone(), final_edges.iter().copied())
        .expect("orientation by ranking is acyclic");

    let c_spec = match merged {
        Some(m) => ControlSpec::new(&graph, vec![var(m)]).expect("C is an observed root"),
        None => ControlSpec::empty(),
    };

    // labels among edges whose child is also a child of C
    let mut labels = LabelSet::empty(&c_spec, &universe);
    if let Some(m) = merged {
        let c_id = var(m);
        let contexts = c_spec.contexts(&universe);
        for e in graph.edges() {
            if e.parent == c_id {
                continue;
            }
            if !graph.parents(e.child).expect("present").contains(&c_id) {
                continue;
            }
            if rng.gen_bool(cfg.p_no_label) {
                continue;
            }
            let ctx = &contexts[rng.gen_range(0..contexts.len())];
            labels.insert(ctx, *e).expect("context is materialized");
        }
    }

    // split the observed non-control vertices into treatment and outcome
    let candidates: Vec<VarId> = graph
        .observed_vertices()
        .into_iter()
        .filter(|v| !c_spec.control_set().contains(v))
        .collect();
    if candidates.len() < 2 {
        return None;
    }
    let mut treatment = BTreeSet::new();
    let mut outcome = BTreeSet::new();
    loop {
        treatment.clear();
        outcome.clear();
        for &v in &candidates {
            if rng.gen_bool(0.5) {
                treatment.insert(v);
            } else {
                outcome.insert(v);
            }
        }
        if !treatment.is_empty() && !outcome.is_empty() {
            break;
        }
    }

    Some(BenchInstance {
        graph,
        c_spec,
        labels,
        treatment,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub algorithm: &'static str,
    pub mean_runtime_s: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pct_identifiable: f64,
    pub identified: usize,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Instances where the baseline identified but the labeled run did not.
    /// Labels only remove edges, so anything above zero deserves a look.
    pub monotonicity_violations: usize,
}

impl BenchReport {
    /// CSV serialization. Timing columns are wall-clock and therefore not
    /// reproducible; `include_timing = false` yields the deterministic
    /// projection used for byte-identity checks.
    pub fn to_csv(&self, include_timing: bool) -> String {
        let mut out = String::new();
        if include_timing {
            out.push_str("n,algorithm,mean_runtime_s,ci_low,ci_high,pct_identifiable\n");
            for r in &self.rows {
                out.push_str(&format!(
                    "{},{},{:.9},{:.9},{:.9},{:.2}\n",
                    r.n, r.algorithm, r.mean_runtime_s, r.ci_low, r.ci_high, r.pct_identifiable
                ));
            }
        } else {
            out.push_str("n,algorithm,pct_identifiable\n");
            for r in &self.rows {
                out.push_str(&format!("{},{},{:.2}\n", r.n, r.algorithm, r.pct_identifiable));
            }
        }
        out
    }

    pub fn row(&self, n: usize, algorithm: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.algorithm == algorithm)
    }
}

struct RepOutcome {
    csi_seconds: f64,
    csi_identified: bool,
    plain_seconds: f64,
    plain_identified: bool,
}

fn run_rep(cfg: &BenchConfig, n: usize, rep: usize) -> Result<RepOutcome> {
    let instance_index = ((n as u64) << 32) | rep as u64;
    let inst = random_instance(cfg, n, cfg.seed ^ instance_index);

    let start = Instant::now();
    let labeled = identify_csi(
        &inst.graph,
        &inst.labels,
        &inst.c_spec,
        &inst.treatment,
        &inst.outcome,
    )?;
    let csi_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let plain = identify(
        &Admg::latent_project(&inst.graph),
        &inst.treatment,
        &inst.outcome,
    )?;
    let plain_seconds = start.elapsed().as_secs_f64();

    Ok(RepOutcome {
        csi_seconds,
        csi_identified: !labeled.is_non_identifiable(),
        plain_seconds,
        plain_identified: !plain.is_non_identifiable(),
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn summarize(n: usize, algorithm: &'static str, times: &[f64], identified: usize) -> BenchRow {
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite runtimes"));
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    BenchRow {
        n,
        algorithm,
        mean_runtime_s: mean,
        ci_low: quantile(&sorted, 0.1),
        ci_high: quantile(&sorted, 0.9),
        pct_identifiable: 100.0 * identified as f64 / times.len() as f64,
        identified,
        reps: times.len(),
    }
}

/// Runs the benchmark. Instance generation and I/O are excluded from the
/// timed sections; repetitions run on the rayon pool.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut violations = 0usize;
    for &n in &cfg.ns {
        let outcomes: Vec<RepOutcome> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_rep(cfg, n, rep))
            .collect::<Result<_>>()?;
        let csi_times: Vec<f64> = outcomes.iter().map(|o| o.csi_seconds).collect();
        let plain_times: Vec<f64> = outcomes.iter().map(|o| o.plain_seconds).collect();
        let csi_ok = outcomes.iter().filter(|o| o.csi_identified).count();
        let plain_ok = outcomes.iter().filter(|o| o.plain_identified).count();
        violations += outcomes
            .iter()
            .filter(|o| o.plain_identified && !o.csi_identified)
            .count();
        rows.push(summarize(n, "csi-id", &csi_times, csi_ok));
        rows.push(summarize(n, "plain-id", &plain_times, plain_ok));
    }
    Ok(BenchReport {
        rows,
        monotonicity_violations: violations,
    })
}

// ── plots ───────────────────────────────────────────────────────────────

/// Writes the two benchmark panels (runtime and identifiable fraction
/// against graph size) as standalone SVG files.
pub fn write_plots(report: &BenchReport, dir: &std::path::Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let runtime = plot_svg(
        report,
        "mean runtime (s)",
        |r| (r.mean_runtime_s, Some((r.ci_low, r.ci_high))),
    );
    std::fs::write(dir.join("runtime_vs_n.svg"), runtime)?;
    let pct = plot_svg(report, "% identifiable", |r| (r.pct_identifiable, None));
    std::fs::write(dir.join("pct_identifiable_vs_n.svg"), pct)?;
    Ok(())
}

fn plot_svg(
    report: &BenchReport,
    y_label: &str,
    value: impl Fn(&BenchRow) -> (f64, Option<(f64, f64)>),
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    let series = ["csi-id", "plain-id"];
    let colors = ["#1f77b4", "#d62728"];

    let xs: Vec<usize> = report.rows.iter().map(|r| r.n).collect();
    let (x_min, x_max) = (
        *xs.iter().min().unwrap_or(&0) as f64,
        *xs.iter().max().unwrap_or(&1) as f64,
    );
    let mut y_max = f64::EPSILON;
    for r in &report.rows {
        let (v, ci) = value(r);
        y_max = y_max.max(v);
        if let Some((_, hi)) = ci {
            y_max = y_max.max(hi);
        }
    }
    let sx = |x: f64| {
        if x_max > x_min {
            M + (x - x_min) / (x_max - x_min) * (W - 2.0 * M)
        } else {
            W / 2.0
        }
    };
    let sy = |y: f64| H - M - (y / y_max) * (H - 2.0 * M);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{M}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <text x=\"{xc}\" y=\"{yb}\" text-anchor=\"middle\" font-size=\"14\">n</text>\n\
         <text x=\"16\" y=\"{yc}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 {yc})\">{y_label}</text>\n",
        y0 = H - M,
        x1 = W - M,
        xc = W / 2.0,
        yb = H - 16.0,
        yc = H / 2.0,
    );
    for (si, algo) in series.iter().enumerate() {
        let rows: Vec<&BenchRow> = report.rows.iter().filter(|r| r.algorithm == *algo).collect();
        if rows.is_empty() {
            continue;
        }
        if rows.iter().any(|r| value(r).1.is_some()) {
            let mut band = String::from("<polygon points=\"");
            for r in &rows {
                let (_, ci) = value(r);
                let hi = ci.map(|c| c.1).unwrap_or_else(|| value(r).0);
                band.push_str(&format!("{:.2},{:.2} ", sx(r.n as f64), sy(hi)));
            }
            for r in rows.iter().rev() {
                let (_, ci) = value(r);
                let lo = ci.map(|c| c.0).unwrap_or_else(|| value(r).0);
                band.push_str(&format!("{:.2},{:.2} ", sx(r.n as f64), sy(lo)));
            }
            band.push_str(&format!(
                "\" fill=\"{}\" opacity=\"0.15\" stroke=\"none\"/>\n",
                colors[si]
            ));
            svg.push_str(&band);
        }
        let mut line = String::from("<polyline points=\"");
        for r in &rows {
            line.push_str(&format!("{:.2},{:.2} ", sx(r.n as f64), sy(value(r).0)));
        }
        line.push_str(&format!(
            "\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            colors[si]
        ));
        svg.push_str(&line);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"{}\">{}</text>\n",
            W - M + 4.0,
            M + 18.0 * si as f64,
            colors[si],
            algo
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
