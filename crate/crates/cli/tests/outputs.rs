use std::process::Command;

fn randers(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_randers")).args(args).current_dir(dir).output().unwrap()
}

#[test]
fn surface_outputs_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = randers(
        dir.path(),
        &[
            "surface", "generate", "--type", "hyperbolic", "--energy", "1", "--n-s", "12", "--n-theta", "8", "--out", "m",
            "--format", "both",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let obj = std::fs::read_to_string(dir.path().join("m.obj")).unwrap();
    let nv = obj.lines().filter(|l| l.starts_with("v ")).count();
    let faces: Vec<usize> = obj
        .lines()
        .filter(|l| l.starts_with("f "))
        .flat_map(|l| l[2..].split_whitespace().map(|i| i.parse::<usize>().unwrap()).collect::<Vec<_>>())
        .collect();
    assert!(!faces.is_empty());
    assert!(faces.iter().all(|&i| i >= 1 && i <= nv));

    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,theta,p1,p2,p3,p4,w,sfrak,residual,in_omega"));
    assert_eq!(lines.count(), nv);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert_eq!(report["schema_version"], 1);
}

#[test]
fn verify_report_goes_to_stdout_without_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = randers(dir.path(), &["verify", "--cases", "8", "--measure", "ht"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["summary"]["total"], 8);
    assert!(v["cases"].as_array().unwrap().iter().all(|c| c["measure"] == "ht"));
}
