use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn triplink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triplink")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = triplink(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn synth_attack_evaluate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("synth.csv");
    let run = tmp.path().join("run");
    let eval = tmp.path().join("eval");
    ok(&["synth", "--users", "6", "--days", "5", "--routine-strength", "1", "--noise", "0", "--seed", "7", "--out", p(&csv)]);
    ok(&["attack", "--input", p(&csv), "--format", "csv", "--city", "berlin", "--no-preprocess", "--out", p(&run)]);
    for f in ["stage1_assignment.csv", "stage2_assignment.csv", "stage3_assignment.csv", "trips.csv", "preprocess_report.json", "refine_audit.csv"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    ok(&["evaluate", "--run", p(&run), "--p", "4", "--samples", "20", "--out", p(&eval)]);
    for f in ["report.json", "reid_per_user.csv", "characteristics.csv", "median_f.csv"] {
        assert!(eval.join(f).is_file(), "{f} missing");
    }
    let r = report(&eval);
    assert_eq!(r["schema_version"], 1);
    let last = &r["stages"][2];
    assert_eq!(last["stage"], "stage3_assignment");
    for k in ["ari", "ami", "homogeneity", "completeness"] {
        assert_eq!(last[k].as_f64(), Some(1.0), "{k}");
    }
    assert_eq!(r["reid"]["p"], 4);
    let users = r["reid_per_user"].as_array().unwrap();
    assert_eq!(users.len(), 6);
    assert!(users.iter().all(|u| u["mean_f_score"].as_f64() == Some(1.0)), "{users:?}");
    assert_eq!(r["characteristics"].as_array().unwrap().len(), 6);
}

#[test]
fn outputs_do_not_depend_on_threads_or_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("synth.csv");
    ok(&["synth", "--users", "8", "--days", "4", "--noise", "25", "--seed", "3", "--out", p(&csv)]);
    let csv2 = tmp.path().join("synth2.csv");
    ok(&["synth", "--users", "8", "--days", "4", "--noise", "25", "--seed", "3", "--out", p(&csv2)]);
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&csv2).unwrap());

    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = tmp.path().join(format!("run{threads}"));
        ok(&["--threads", threads, "attack", "--input", p(&csv), "--obfuscate", "--seed", "11", "--out", p(&dir)]);
        let eval = tmp.path().join(format!("eval{threads}"));
        ok(&["--threads", threads, "evaluate", "--run", p(&dir), "--samples", "10", "--label", "synth", "--out", p(&eval)]);
        let files: Vec<Vec<u8>> = ["stage3_assignment.csv", "drop_report.csv", "trips.csv"]
            .iter()
            .map(|f| fs::read(dir.join(f)).unwrap())
            .chain(["report.json", "reid_per_user.csv"].iter().map(|f| fs::read(eval.join(f)).unwrap()))
            .collect();
        outputs.push(files);
        assert_eq!(report(&eval)["obfuscated"], true);
    }
    assert!(outputs[0] == outputs[1], "outputs differ between thread counts");
}

#[test]
fn obfuscate_writes_trips_and_drop_report() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("synth.csv");
    ok(&["synth", "--users", "2", "--days", "2", "--out", p(&csv)]);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["obfuscate", "--input", p(&csv), "--seed", "5", "--out", p(&a)]);
    ok(&["obfuscate", "--input", p(&csv), "--seed", "5", "--out", p(&b)]);
    for f in ["trips.csv", "drop_report.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let report = fs::read_to_string(a.join("drop_report.csv")).unwrap();
    assert!(report.starts_with("trip_id,r_start_m,r_end_m,dropped\n"));
}

#[test]
fn missing_input_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = triplink(&["attack", "--input", p(&tmp.path().join("nope.csv")), "--out", p(&out_dir)]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!out_dir.exists());
}

#[test]
fn inverted_radii_are_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("synth.csv");
    ok(&["synth", "--users", "1", "--days", "1", "--out", p(&csv)]);
    let out = triplink(&["obfuscate", "--input", p(&csv), "--radius-min", "300", "--radius-max", "100", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("synth.csv");
    ok(&["synth", "--users", "1", "--days", "1", "--out", p(&csv)]);
    let cfg = tmp.path().join("run.conf");
    fs::write(&cfg, "# truncation\nradius_min = 400\nradius_max = 300\n").unwrap();
    let out = triplink(&["obfuscate", "--input", p(&csv), "--config", p(&cfg), "--out", p(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    ok(&["obfuscate", "--input", p(&csv), "--config", p(&cfg), "--radius-min", "100", "--out", p(&tmp.path().join("y"))]);
    fs::write(&cfg, "colour = blue\n").unwrap();
    let out = triplink(&["obfuscate", "--input", p(&csv), "--config", p(&cfg), "--out", p(&tmp.path().join("z"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluation_needs_labels_and_scores_truth_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("synth.csv");
    ok(&["synth", "--users", "3", "--days", "3", "--out", p(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();

    // Ground truth as an assignment: user0007 -> 7.
    let mut truth = String::from("trip_id,user_id\n");
    let mut last = String::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] != last {
            truth.push_str(&format!("{},{}\n", f[0], f[1].trim_start_matches("user").parse::<u64>().unwrap()));
            last = f[0].to_string();
        }
    }
    let truth_csv = tmp.path().join("truth.csv");
    fs::write(&truth_csv, truth).unwrap();
    let eval = tmp.path().join("eval");
    ok(&["evaluate", "--trips", p(&csv), "--assignment", p(&truth_csv), "--samples", "5", "--out", p(&eval)]);
    let r = report(&eval);
    for k in ["ari", "ami", "homogeneity", "completeness"] {
        assert_eq!(r["stages"][0][k].as_f64(), Some(1.0), "{k}");
    }

    let unlabelled: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("{l}\n")
            } else {
                let mut f: Vec<&str> = l.split(',').collect();
                f[1] = "";
                format!("{}\n", f.join(","))
            }
        })
        .collect();
    let bare = tmp.path().join("bare.csv");
    fs::write(&bare, unlabelled).unwrap();
    let out = triplink(&["evaluate", "--trips", p(&bare), "--assignment", p(&truth_csv), "--out", p(&tmp.path().join("e2"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("evaluation requires labels"));
}
