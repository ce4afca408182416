use std::path::Path;
use std::process::{Command, Output};

use growclusters::gendata::{generate_corpus, CorpusConfig};
use growclusters::io::{read_dataset, read_result};
use growclusters::{dp_means, hdp_means, DpConfig, HierConfig};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_growclusters"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_select_ch_reports_three_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let res = dir.path().join("r.json");
    ok(&[
        "gen",
        "--k",
        "3",
        "--n",
        "50",
        "--dim",
        "4",
        "--sep",
        "8",
        "--sigma",
        "1",
        "--seed",
        "42",
        "-o",
        s(&data),
    ]);
    assert!(dir.path().join("d.csv.truth.json").exists());
    ok(&[
        "cluster",
        s(&data),
        "--select",
        "ch",
        "--grid",
        "1:50:25",
        "-o",
        s(&res),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["report", s(&res), "--format", "json"])).unwrap();
    assert_eq!(report["k"], 3);
    assert_eq!(report["sizes"], serde_json::json!([50, 50, 50]));
    let csv = ok(&["report", s(&res), "--format", "csv"]);
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("dp,150,3,"));
}

#[test]
fn cli_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let res = dir.path().join("r.json");
    ok(&[
        "gen",
        "--k",
        "4",
        "--n",
        "20",
        "--dim",
        "3",
        "--seed",
        "5",
        "-o",
        s(&data),
    ]);
    ok(&[
        "cluster",
        s(&data),
        "--lambda",
        "20",
        "--seed",
        "9",
        "--max-k",
        "10",
        "-o",
        s(&res),
    ]);
    let archive = read_result(&res).unwrap();
    let ds = read_dataset(&data, None).unwrap().into_single();
    let config = DpConfig {
        lambda: 20.0,
        seed: 9,
        max_clusters: 10,
        ..DpConfig::default()
    };
    assert_eq!(
        archive.partition.as_ref(),
        Some(&dp_means(&ds, &config).unwrap())
    );

    let grouped = dir.path().join("g.csv");
    let hres = dir.path().join("h.json");
    ok(&[
        "gen",
        "--groups",
        "2",
        "--k",
        "3",
        "--n",
        "10",
        "--seed",
        "3",
        "-o",
        s(&grouped),
    ]);
    ok(&[
        "hcluster",
        s(&grouped),
        "--group",
        "group",
        "--lambda-global",
        "30",
        "--lambda-local",
        "5",
        "-o",
        s(&hres),
    ]);
    let archive = read_result(&hres).unwrap();
    let gds = match read_dataset(&grouped, Some("group")).unwrap() {
        growclusters::io::Loaded::Grouped(g) => g,
        _ => panic!("expected grouped data"),
    };
    let hconfig = HierConfig::with_penalties(5.0, 30.0);
    assert_eq!(
        archive.hier_partition.as_ref(),
        Some(&hdp_means(&gds, &hconfig).unwrap())
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    ok(&["gen", "--seed", "1", "-o", s(&data)]);

    let out = bin(&["cluster", s(&data), "--lambda", "-2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));

    assert_eq!(bin(&["cluster", s(&data)]).status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,oops\n").unwrap();
    assert_eq!(
        bin(&["cluster", s(&bad), "--lambda", "1"]).status.code(),
        Some(2)
    );

    // three blobs with 2 neighbours each cannot connect
    assert_eq!(
        bin(&["isomap", s(&data), "--neighbors", "2"]).status.code(),
        Some(3)
    );

    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    assert_eq!(bin(&["cluster", "--help"]).status.code(), Some(0));
}

#[test]
fn binary_encoding_is_thresholded_raw() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let stop = dir.path().join("c.jsonl.stopwords.txt");
    ok(&[
        "gen",
        "--kind",
        "corpus",
        "--n",
        "60",
        "--k",
        "3",
        "-o",
        s(&corpus),
    ]);
    let raw = ok(&[
        "encode",
        s(&corpus),
        "--mode",
        "raw",
        "--stopwords",
        s(&stop),
    ]);
    let binary = ok(&[
        "encode",
        s(&corpus),
        "--mode",
        "binary",
        "--stopwords",
        s(&stop),
    ]);

    let (raw_head, raw_rows) = raw.split_once('\n').unwrap();
    let (bin_head, bin_rows) = binary.split_once('\n').unwrap();
    assert_eq!(raw_head, bin_head);
    assert_eq!(raw_rows.lines().count(), 60);
    for (r, b) in raw_rows.lines().zip(bin_rows.lines()) {
        let r: Vec<&str> = r.split(',').collect();
        let b: Vec<&str> = b.split(',').collect();
        assert_eq!(r[0], b[0]);
        for (rv, bv) in r[1..].iter().zip(&b[1..]) {
            let thresholded = if rv.parse::<u32>().unwrap() > 0 {
                "1"
            } else {
                "0"
            };
            assert_eq!(*bv, thresholded);
        }
    }

    // stopwords come from the generator's filler list
    let (c, _) = generate_corpus(&CorpusConfig::default()).unwrap();
    for w in c.stopwords() {
        assert!(!raw_head.split(',').any(|t| t == w.as_str()));
    }
}

#[test]
fn isomap_writes_requested_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("roll.csv");
    ok(&[
        "gen",
        "--kind",
        "swiss-roll",
        "--n",
        "200",
        "--seed",
        "1",
        "-o",
        s(&data),
    ]);
    let out = ok(&["isomap", s(&data), "--neighbors", "10", "--dim", "2"]);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "id,dim_1,dim_2");
    assert_eq!(lines.count(), 200);
}

#[test]
fn select_prints_grid_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    ok(&["gen", "--seed", "2", "-o", s(&data)]);
    let csv = ok(&[
        "select",
        s(&data),
        "--method",
        "sil",
        "--grid",
        "5:45:5",
        "--format",
        "csv",
    ]);
    assert_eq!(csv.lines().next(), Some("lambda,score,k"));
    assert_eq!(csv.lines().count(), 6);
    let json: serde_json::Value = serde_json::from_str(&ok(&[
        "select",
        s(&data),
        "--method",
        "sil",
        "--grid",
        "5:45:5",
        "--format",
        "json",
    ]))
    .unwrap();
    assert_eq!(json["chosen_k"], 3);
}
