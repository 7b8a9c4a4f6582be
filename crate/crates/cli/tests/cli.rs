use serde_json::Value;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtf-local")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn verify_fl_split_h1() {
    let out = run(&["verify-fl", "--p", "3", "--ext", "split", "--hecke", "1:1", "--val-window", "-4:4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["pass"], true);
    assert_eq!(v["results"][0]["points"].as_array().unwrap().len(), 9 * 3 + 8);
}

#[test]
fn verify_fl_inert_odd_degree() {
    let out = run(&["verify-fl", "--ext", "inert", "--hecke", "1:1", "--hecke", "0:1,2:-0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
}

#[test]
fn empty_hecke_is_identity() {
    let v = json(&run(&["verify-fl", "--hecke", "", "--val-window", "0:1"]));
    assert_eq!(v["config"]["hecke"][0][0][0], 0);
    assert_eq!(v["config"]["hecke"][0][0][1], 1.0);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["verify-fl", "--p", "4"],
        vec!["verify-fl", "--ext", "ramified"],
        vec!["verify-fl", "--val-window", "2:1"],
        vec!["verify-fl", "--hecke", "one"],
        vec!["tables", "--format", "xml"],
        vec!["verify-matching", "--tolerance", "-1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{:?}", args);
    }
}

#[test]
fn unwritable_output_exits_3() {
    let out = run(&["verify-fl", "--val-window", "0:0", "--out", "/nonexistent-dir/report.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# run\np = 5\next = inert\nval-window = -1:1\n").unwrap();
    let conf = path.to_str().unwrap();
    let v = json(&run(&["verify-fl", "--config", conf]));
    assert_eq!((v["config"]["p"].as_u64(), v["config"]["ext"].as_str()), (Some(5), Some("inert")));
    let v = json(&run(&["verify-fl", "--config", conf, "--p", "3"]));
    assert_eq!(v["config"]["p"], 3);
    std::fs::write(&path, "p = 4\n").unwrap();
    assert_eq!(run(&["verify-fl", "--config", conf]).status.code(), Some(2));
}

#[test]
fn tables_cell_and_formats() {
    let out = run(&["tables", "--p", "3", "--val-window", "-3:3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let vol = v["volX"].as_f64().unwrap();
    let rows = v["kuznetsov"].as_array().unwrap();
    let cell = rows.iter().find(|r| r["m"] == 1 && r["val"] == -1).unwrap();
    assert!((cell["closed"][0].as_f64().unwrap() + vol).abs() < 1e-12);
    assert!((cell["direct"][0].as_f64().unwrap() + vol).abs() < 1e-12);
    let all = rows.iter().chain(v["basic"].as_array().unwrap());
    assert!(all.clone().all(|r| r["delta"].as_f64().unwrap() <= 1e-10));

    let csv = run(&["tables", "--p", "3", "--val-window", "-3:3", "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(&csv.stdout[..]);
    let recs: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), all.clone().count());
    for (rec, r) in recs.iter().zip(all) {
        let other = if rec[0] == *"kuznetsov" { &r["direct"] } else { &r["series"] };
        let nums: Vec<f64> = (4..9).map(|i| rec[i].parse().unwrap()).collect();
        assert_eq!(nums[0], r["closed"][0].as_f64().unwrap());
        assert_eq!(nums[1], r["closed"][1].as_f64().unwrap());
        assert_eq!(nums[2], other[0].as_f64().unwrap());
        assert_eq!(nums[3], other[1].as_f64().unwrap());
        assert_eq!(nums[4], r["delta"].as_f64().unwrap());
    }
}

#[test]
fn matching_is_deterministic() {
    let args = ["verify-matching", "--ext", "split", "--samples", "6", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn matching_tight_tolerance() {
    for ext in ["split", "inert"] {
        let out = run(&["verify-matching", "--ext", ext, "--samples", "8", "--tolerance", "1e-12"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
