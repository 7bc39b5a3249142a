//! End-to-end tests of the `csid` binary: exit codes, golden output, and
//! agreement between `eval` and the in-process oracle.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use csid_core::csi::identify_csi;
use csid_core::dist::random_compatible_model;
use csid_core::estimand::{render, RenderStyle};
use csid_core::graph::{CausalGraph, Context, VarId};
use csid_core::labels::LabelSet;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn csid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn identify_labeled_bow_prints_the_mixture() {
    let out = csid(&[
        "identify",
        fixture("bow_control.graph").to_str().unwrap(),
        "--labels",
        fixture("bow_control.labels").to_str().unwrap(),
        "--treatment",
        "X",
        "--outcome",
        "Y",
        "--format",
        "sexpr",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert_eq!(
        stdout(&out).trim(),
        "(ctxmix ((C 0) (p (Y) given (X) ctx ((C 0)))) ((C 1) (p (Y) given () ctx ((C 1)))))"
    );

    let text = csid(&[
        "identify",
        fixture("bow_control.graph").to_str().unwrap(),
        "--labels",
        fixture("bow_control.labels").to_str().unwrap(),
        "--treatment",
        "X",
        "--outcome",
        "Y",
    ]);
    assert_eq!(text.status.code(), Some(0));
    assert_eq!(
        stdout(&text).trim(),
        "P(C=0) · [P(Y | X, C=0)] + P(C=1) · [P(Y | C=1)]"
    );
}

#[test]
fn identify_unlabeled_bow_is_non_identifiable() {
    let out = csid(&[
        "identify",
        fixture("bow_control.graph").to_str().unwrap(),
        "--treatment",
        "X",
        "--outcome",
        "Y",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).starts_with("NON-IDENTIFIABLE"));
}

#[test]
fn malformed_graph_reports_line_and_exits_1() {
    let out = csid(&[
        "identify",
        fixture("bad.graph").to_str().unwrap(),
        "--treatment",
        "A",
        "--outcome",
        "B",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "stderr: {}", stderr(&out));
}

#[test]
fn bad_flags_exit_1_not_2() {
    let out = csid(&["identify", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn learn_recovers_the_xor_label() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("learned.labels");
    let out = csid(&[
        "learn",
        fixture("xor.graph").to_str().unwrap(),
        fixture("xor_noisy.dist").to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--controls",
        "T",
        "--allow-degenerate",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(written, "control T\nlabel T=0 remove X->Y\n");
}

#[test]
fn learn_refuses_degenerate_joint_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("learned.labels");
    let out = csid(&[
        "learn",
        fixture("xor.graph").to_str().unwrap(),
        fixture("xor_noisy.dist").to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--controls",
        "T",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("strictly positive"));
}

#[test]
fn learn_recovers_braid_labels_from_a_compatible_model() {
    let g = CausalGraph::parse(&std::fs::read_to_string(fixture("braid.graph")).unwrap()).unwrap();
    let uni = g.universe().clone();
    let t = uni.lookup("T").unwrap();
    let (z1, y) = (uni.lookup("Z1").unwrap(), uni.lookup("Y").unwrap());
    let (x2, z2) = (uni.lookup("X2").unwrap(), uni.lookup("Z2").unwrap());
    let c_spec = csid_core::labels::ControlSpec::new(&g, vec![t]).unwrap();
    let mut labels = LabelSet::empty(&c_spec, &uni);
    labels
        .insert(
            &Context::from_pairs([(t, 0)]),
            csid_core::graph::Edge::new(z1, y),
        )
        .unwrap();
    labels
        .insert(
            &Context::from_pairs([(t, 1)]),
            csid_core::graph::Edge::new(x2, z2),
        )
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let m = random_compatible_model(&g, &labels, &c_spec, &mut rng);
    let joint = m.joint(&g.observed_vertices()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let dist_path = dir.path().join("braid.dist");
    std::fs::write(&dist_path, joint.to_file_string()).unwrap();
    let out_path = dir.path().join("braid.labels");
    let out = csid(&[
        "learn",
        fixture("braid.graph").to_str().unwrap(),
        dist_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--controls",
        "T",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert!(written.contains("label T=0 remove Z1->Y"));
    assert!(written.contains("label T=1 remove X2->Z2"));
}

#[test]
fn eval_matches_the_in_process_oracle() {
    let g = CausalGraph::parse(&std::fs::read_to_string(fixture("bow_control.graph")).unwrap())
        .unwrap();
    let (c_spec, labels) = LabelSet::parse(
        &std::fs::read_to_string(fixture("bow_control.labels")).unwrap(),
        &g,
    )
    .unwrap();
    let uni = g.universe().clone();
    let x = uni.lookup("X").unwrap();
    let y = uni.lookup("Y").unwrap();
    let treatment: BTreeSet<VarId> = [x].into_iter().collect();
    let outcome: BTreeSet<VarId> = [y].into_iter().collect();
    let estimand = identify_csi(&g, &labels, &c_spec, &treatment, &outcome).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = random_compatible_model(&g, &labels, &c_spec, &mut rng);
    let joint = m.joint(&g.observed_vertices()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let est_path = dir.path().join("effect.sexpr");
    std::fs::write(&est_path, render(&estimand, &uni, RenderStyle::Sexpr)).unwrap();
    let dist_path = dir.path().join("bow.dist");
    std::fs::write(&dist_path, joint.to_file_string()).unwrap();

    for xv in 0..2 {
        let oracle = m
            .intervene(&Context::from_pairs([(x, xv)]))
            .unwrap()
            .joint(&outcome)
            .unwrap();
        for yv in 0..2 {
            let out = csid(&[
                "eval",
                est_path.to_str().unwrap(),
                dist_path.to_str().unwrap(),
                "--treatment-values",
                &format!("X={xv}"),
                "--outcome-values",
                &format!("Y={yv}"),
            ]);
            assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
            let text = stdout(&out);
            let exact = text.lines().next().unwrap();
            let want = oracle.prob(&Context::from_pairs([(y, yv)])).unwrap();
            assert_eq!(exact, want.to_string(), "do(X={xv}), Y={yv}");
        }
    }
}

#[test]
fn eval_trivial_term_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let est_path = dir.path().join("one.sexpr");
    std::fs::write(&est_path, "(p () given ())").unwrap();
    let out = csid(&[
        "eval",
        est_path.to_str().unwrap(),
        fixture("xor_noisy.dist").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().next().unwrap(), "1");
}

#[test]
fn eval_unknown_variable_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let est_path = dir.path().join("bad.sexpr");
    std::fs::write(&est_path, "(p (Q) given ())").unwrap();
    let out = csid(&[
        "eval",
        est_path.to_str().unwrap(),
        fixture("xor_noisy.dist").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_zero_mass_conditioning_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let est_path = dir.path().join("zero.sexpr");
    // conditioning on Y=2 under T=0 has zero mass in the xor joint
    std::fs::write(&est_path, "(p (X) given () ctx ((T 0) (Y 2)))").unwrap();
    let out = csid(&[
        "eval",
        est_path.to_str().unwrap(),
        fixture("xor_noisy.dist").to_str().unwrap(),
        "--outcome-values",
        "X=0",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}

#[test]
fn bench_fixed_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv1 = dir.path().join("a.csv");
    let csv2 = dir.path().join("b.csv");
    for (path, _) in [(&csv1, 0), (&csv2, 1)] {
        let out = csid(&[
            "bench",
            "--n-min",
            "10",
            "--n-max",
            "12",
            "--n-step",
            "2",
            "--reps",
            "3",
            "--seed",
            "7",
            "--no-timing",
            "--out-csv",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    assert_eq!(
        std::fs::read(&csv1).unwrap(),
        std::fs::read(&csv2).unwrap()
    );
}

#[test]
fn bench_rejects_zero_reps() {
    let dir = tempfile::tempdir().unwrap();
    let out = csid(&[
        "bench",
        "--n-min",
        "10",
        "--n-max",
        "10",
        "--reps",
        "0",
        "--out-csv",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_emits_plots_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = csid(&[
        "bench",
        "--n-min",
        "8",
        "--n-max",
        "10",
        "--n-step",
        "2",
        "--reps",
        "2",
        "--seed",
        "3",
        "--out-csv",
        dir.path().join("r.csv").to_str().unwrap(),
        "--plot-dir",
        dir.path().join("plots").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(dir.path().join("plots/runtime_vs_n.svg").exists());
    assert!(dir.path().join("plots/pct_identifiable_vs_n.svg").exists());
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("n,algorithm,mean_runtime_s"));
}
