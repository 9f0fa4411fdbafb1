use std::fs;
use std::process::{Command, Output};

fn ocsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocsr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn canon_ignores_spelling() {
    let a = ocsr(&["canon", "OCC"]);
    let b = ocsr(&["canon", "CCO"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let s = ocsr(&["canon", "--no-stereo", "N[C@@H](C)C(=O)O"]);
    assert!(!stdout(&s).contains('@'));
}

#[test]
fn exit_codes() {
    assert_eq!(ocsr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ocsr(&["canon"]).status.code(), Some(1));
    assert_eq!(ocsr(&["canon", "C1CC"]).status.code(), Some(2));
    assert_eq!(ocsr(&["--help"]).status.code(), Some(0));
    assert_eq!(
        ocsr(&["oks", "--pred", "[[0,0]]", "--gt", "[]"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn help_lists_every_subcommand() {
    let h = stdout(&ocsr(&["--help"]));
    for sub in [
        "parse",
        "canon",
        "compare",
        "reward",
        "evaluate",
        "gen-stereo",
        "grpo-toy",
        "oks",
    ] {
        assert!(h.contains(sub), "{sub} missing from help");
    }
    let g = stdout(&ocsr(&["gen-stereo", "--help"]));
    for flag in ["--seed", "--count", "--weights", "--out", "--threads"] {
        assert!(g.contains(flag));
    }
}

#[test]
fn reward_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    let smiles = "CCO\nC/C=C/C\nN[C@@H](C)C(=O)O\n[Ph]O\n";
    fs::write(&p, smiles).unwrap();
    let o = ocsr(&[
        "reward",
        "--pred",
        p.to_str().unwrap(),
        "--gt",
        p.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["r_combined"] == 1.0));
}

#[test]
fn reward_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let (p, g, c) = (
        dir.path().join("p"),
        dir.path().join("g"),
        dir.path().join("c.toml"),
    );
    fs::write(&p, "N[C@@H](C)C(=O)O\n").unwrap();
    fs::write(&g, "N[C@H](C)C(=O)O\n").unwrap();
    fs::write(&c, "w_tanimoto = 0.5\nw_stereo = 0.5\n").unwrap();
    let o = ocsr(&[
        "reward",
        "--pred",
        p.to_str().unwrap(),
        "--gt",
        g.to_str().unwrap(),
        "--config",
        c.to_str().unwrap(),
    ]);
    let r: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((r["r_combined"].as_f64().unwrap() - 0.65).abs() < 1e-12);
}

#[test]
fn evaluate_golden_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pairs.jsonl");
    let lines = [
        r#"{"pred":"CCO","gt":"OCC"}"#,
        r#"{"pred":"N[C@@H](C)C(=O)O","gt":"N[C@H](C)C(=O)O"}"#,
        r#"{"pred":"C/C=C/C","gt":"C/C=C/C","pred_coords":[[0,0],[0.3,0.4]],"gt_coords":[[0,0],[0,0]],"s":0.5}"#,
        r#"{"pred":"C1CC","gt":"CCC"}"#,
    ];
    fs::write(&p, lines.join("\n")).unwrap();
    let o = ocsr(&["evaluate", "--pairs", p.to_str().unwrap(), "--csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let json_end = text.rfind('}').unwrap() + 1;
    let r: serde_json::Value = serde_json::from_str(&text[..json_end]).unwrap();
    assert_eq!(r["total"], 4);
    assert_eq!(r["graph_acc"], 0.75);
    assert_eq!(r["exact_acc"], 0.5);
    assert_eq!(r["stereo_subset"], 2);
    assert_eq!(r["stereo_acc"], 0.5);
    assert_eq!(r["pred_parse_failures"], 1);
    assert_eq!(r["mean_tanimoto"], 0.75);
    let oks = r["mean_oks"].as_f64().unwrap();
    assert!((oks - (1.0 + (-0.5f64).exp()) / 2.0).abs() < 1e-12);
    assert!(text.contains("total,stereo_subset,graph_acc"));
    assert!(text.trim_end().ends_with(",1,0"));
}

#[test]
fn gen_stereo_to_file_and_evaluate_self() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    let o = ocsr(&[
        "gen-stereo",
        "--seed",
        "3",
        "--count",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 7);
    let pairs: Vec<String> = text
        .lines()
        .skip(1)
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            serde_json::json!({"pred": v["smiles"], "gt": v["smiles"]}).to_string()
        })
        .collect();
    let pf = dir.path().join("pairs.jsonl");
    fs::write(&pf, pairs.join("\n")).unwrap();
    let r: serde_json::Value = serde_json::from_str(&stdout(&ocsr(&[
        "evaluate",
        "--pairs",
        pf.to_str().unwrap(),
    ])))
    .unwrap();
    for k in ["graph_acc", "exact_acc", "stereo_acc", "mean_tanimoto"] {
        assert_eq!(r[k], 1.0, "{k}");
    }
}

#[test]
fn gen_stereo_count_zero_and_bad_weights() {
    let o = ocsr(&["gen-stereo", "--count", "0"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("\"count\":0"));
    let bad = ocsr(&["gen-stereo", "--weights", "1,2,3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn grpo_toy_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = ocsr(&[
        "grpo-toy",
        "--steps",
        "5",
        "--seed",
        "2",
        "--reward-mode",
        "tanimoto",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("step,mean_reward,mean_kl"));
    assert_eq!(lines.count(), 5);
    assert_eq!(
        ocsr(&["grpo-toy", "--reward-mode", "loud"]).status.code(),
        Some(1)
    );
}

#[test]
fn parse_and_markush() {
    let o = ocsr(&["parse", "C[R1]"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["atoms"][1]["element"], "R1");
    let o = ocsr(&["parse", "--markush", "c1ccccc1<sep>1:R1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["extensions"][0], "1:R1");
    assert_eq!(
        ocsr(&["parse", "--markush", "CC<sep>1:R1"]).status.code(),
        Some(2)
    );
}

#[test]
fn oks_hand_value() {
    let o = ocsr(&[
        "oks",
        "--pred",
        "[[0,0]]",
        "--gt",
        "[[0.3,0.4]]",
        "--s",
        "0.5",
    ]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.606531).abs() < 1e-6);
}

#[test]
fn compare_reports_tiers() {
    let o = ocsr(&["compare", "CCO", "CCCO"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["stereo_tier"], 0.1);
    assert_eq!(v["graph_match"], false);
}
