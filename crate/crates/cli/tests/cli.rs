use std::process::{Command, Output};

fn redlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redlab"))
        .args(args)
        .env_remove("REDLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn csv_row<'a>(text: &'a str, first: &str) -> Vec<&'a str> {
    text.lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|cols| cols[0] == first)
        .unwrap_or_else(|| panic!("no row {first} in\n{text}"))
}

#[test]
fn verify_reports_success() {
    for (unit, scheme) in [("rca:4", "mmr:5"), ("bam:4x4", "nmr:9")] {
        let out = redlab(&["verify", "--unit", unit, "--scheme", scheme]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout(&out).matches(": OK").count(), 2);
    }
}

#[test]
fn bad_specs_are_usage_errors() {
    let out = redlab(&["verify", "--unit", "rca:0", "--scheme", "nmr:3"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid parameter"));
    assert_eq!(code(&redlab(&["verify", "--unit", "rca:4", "--scheme", "nmr:4"])), 2);
    assert_eq!(code(&redlab(&["metrics", "--schemes", "mmr:3"])), 2);
    assert_eq!(code(&redlab(&["counts"])), 2);
}

#[test]
fn inject_verdicts() {
    let masked = redlab(&[
        "inject",
        "--unit",
        "rca:4",
        "--scheme",
        "mmr:5",
        "--faults",
        "1,4",
        "--model",
        "inversion",
    ]);
    assert_eq!(code(&masked), 0);
    assert!(stdout(&masked).starts_with("MASKED"));

    let broken = redlab(&["inject", "--unit", "rca:4", "--scheme", "mmr:5", "--faults", "1,2"]);
    assert_eq!(code(&broken), 1);
    let text = stdout(&broken);
    assert!(text.starts_with("NOT-MASKED"));
    assert!(text.contains("failing vector: a0="));

    assert_eq!(
        code(&redlab(&[
            "inject", "--unit", "rca:4", "--scheme", "nmr:5", "--faults", ""
        ])),
        0
    );
    assert_eq!(
        code(&redlab(&[
            "inject", "--unit", "rca:4", "--scheme", "nmr:5", "--faults", "0"
        ])),
        2
    );
    assert_eq!(
        code(&redlab(&[
            "inject", "--unit", "rca:4", "--scheme", "nmr:5", "--faults", "6"
        ])),
        2
    );
}

#[test]
fn counts_rows() {
    let mmr6 = stdout(&redlab(&["counts", "--scheme", "mmr:6"]));
    assert_eq!(mmr6.lines().next(), Some("f,masked,patterns"));
    assert_eq!(csv_row(&mmr6, "3"), ["3", "9", "20"]);
    assert_eq!(
        csv_row(&stdout(&redlab(&["counts", "--scheme", "nmr:7"])), "3"),
        ["3", "35", "35"]
    );
    assert_eq!(csv_row(&stdout(&redlab(&["counts", "--scheme", "mmr:5"])), "3")[1], "0");

    let json: serde_json::Value =
        serde_json::from_str(&stdout(&redlab(&["counts", "--scheme", "mmr:7", "--format", "json"]))).unwrap();
    let masked: Vec<u64> = json["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["masked"].as_u64().unwrap())
        .collect();
    assert_eq!(masked, [1, 7, 18, 22, 12, 0, 0, 0]);
}

#[test]
fn counts_above_the_cap_exit_3() {
    let out = redlab(&["counts", "--scheme", "nmr:25"]);
    assert_eq!(code(&out), 3);
    assert!(out.stdout.is_empty());
}

#[test]
fn tolerance_reports_both_figures() {
    for (scheme, max, guaranteed) in [("mmr:7", 4, 1), ("nmr:9", 4, 4), ("nmr:3", 1, 1)] {
        let text = stdout(&redlab(&["tolerance", "--scheme", scheme]));
        assert!(
            text.contains(&format!("max_tolerable={max}  # best-placement maximum")),
            "{text}"
        );
        assert!(
            text.contains(&format!("guaranteed={guaranteed}  # any-placement guarantee")),
            "{text}"
        );
    }
}

#[test]
fn sweep_analytic_values_and_summary() {
    let text = stdout(&redlab(&[
        "sweep",
        "--schemes",
        "mmr:5",
        "--r-min",
        "0.9",
        "--r-max",
        "0.9",
        "--steps",
        "2",
    ]));
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("mmr:5")).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[3], "0.96228");
        assert_eq!(cols[6], "100000");
    }

    let ones = stdout(&redlab(&[
        "sweep",
        "--schemes",
        "nmr:3",
        "--r-min",
        "1",
        "--r-max",
        "1",
        "--steps",
        "2",
        "--trials",
        "0",
    ]));
    assert!(
        ones.lines()
            .skip(1)
            .filter(|l| !l.starts_with('#'))
            .all(|l| l == "nmr:3,3,1,1,,,0,0"),
        "{ones}"
    );

    let text = stdout(&redlab(&[
        "sweep",
        "--schemes",
        "nmr:5,mmr:5",
        "--r-min",
        "0.9",
        "--r-max",
        "0.99",
        "--steps",
        "10",
        "--trials",
        "0",
    ]));
    let line = text
        .lines()
        .find(|l| l.starts_with("# delta mmr:5 vs nmr:5"))
        .expect("summary line");
    let delta: f64 = line.rsplit(' ').next().unwrap().trim_end_matches('%').parse().unwrap();
    assert!((delta - 1.21).abs() <= 0.5, "{delta}");
}

#[test]
fn sweep_output_is_deterministic_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let args = |path: &str, threads: &str| {
        let out = redlab(&[
            "sweep",
            "--schemes",
            "nmr:5,mmr:6",
            "--steps",
            "4",
            "--trials",
            "150000",
            "--seed",
            "7",
            "--out",
            path,
            "--threads",
            threads,
        ]);
        assert_eq!(code(&out), 0);
        std::fs::read(path).unwrap()
    };
    let a = args(dir.path().join("a.csv").to_str().unwrap(), "1");
    let b = args(dir.path().join("b.csv").to_str().unwrap(), "3");
    assert_eq!(a, b);
    assert!(String::from_utf8(a)
        .unwrap()
        .starts_with("scheme,units,R,reliability_analytic,reliability_mc,mc_std_error,trials,seed\n"));
}

#[test]
fn unwritable_sweep_target_exits_4_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("out.csv");
    let out = redlab(&[
        "sweep",
        "--schemes",
        "nmr:3",
        "--trials",
        "0",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4);
    assert!(!target.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn metrics_trends() {
    let json: serde_json::Value = serde_json::from_str(&stdout(&redlab(&[
        "metrics",
        "--schemes",
        "nmr:3,nmr:9,mmr:5,mmr:6,mmr:7",
    ])))
    .unwrap();
    let voter = |i: usize, field: &str| -> u64 {
        let v = &json[i]["voter"];
        if field == "depth" {
            v["depth"].as_u64().unwrap()
        } else {
            v["gates"]["total"].as_u64().unwrap()
        }
    };
    assert_eq!(voter(0, "total"), 5);
    assert!(voter(4, "depth") <= voter(1, "depth"));
    assert!(voter(3, "total") - voter(2, "total") <= 2);
    assert!(json[0].get("system").is_none());

    let with_unit: serde_json::Value =
        serde_json::from_str(&stdout(&redlab(&["metrics", "--schemes", "nmr:3", "--unit", "rca:2"]))).unwrap();
    assert_eq!(with_unit[0]["system"]["unit"], "rca:2");
    assert!(with_unit[0]["system"]["gates"]["total"].as_u64().unwrap() > 3 * 5);
}
