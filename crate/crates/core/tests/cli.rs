use std::process::Command;

fn bratteli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bratteli")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

#[test]
fn psd_with_an_element_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut lits = Vec::new();
    for i in 0..25 {
        let (_, rep) = bratteli(&["eval", "--char", "identity", "--count", "1", "--level", "4", "--seed", &i.to_string()]);
        assert!(rep.contains("value 0\t1"));
        lits.push(format!(r#"{{"level": 4, "perms": {{"0": {:?}}}}}"#, rotate(16, i % 16)));
    }
    let file = dir.path().join("sample.json");
    std::fs::write(&file, format!("[{}]", lits.join(","))).unwrap();
    let chi = dir.path().join("chi1.json");
    std::fs::write(&chi, r#"{"kind": "product", "measures": [{"measure_ref": "ergodic", "alpha": 2}]}"#).unwrap();
    let (code, rep) = bratteli(&["psd", "--char", chi.to_str().unwrap(), "--elements", file.to_str().unwrap(), "--tol", "1e-9"]);
    assert_eq!(code, 0, "{rep}");
    assert!(rep.contains("min-eigenvalue-bound"));
}

fn rotate(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| (i + k) % n).collect()
}

#[test]
fn alpha_probe_reports_a_violation() {
    let (code, rep) = bratteli(&["alpha-probe", "--alpha", "0.5", "--k", "2", "--n", "3", "--level", "3"]);
    assert_eq!(code, 1);
    assert!(rep.contains("signed-sum-decimal\t-0.121320"));
    assert!(rep.contains("certificate"));
}

#[test]
fn malformed_diagram_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, r#"{"levels": [["r"], ["a", "b"]], "edges": [{"level": 1, "src": 0, "dst": 0, "count": 2}]}"#).unwrap();
    let (code, rep) = bratteli(&["validate", "--diagram", file.to_str().unwrap()]);
    assert_eq!(code, 2, "{rep}");
    assert!(rep.contains("violation"));
    let (code, _) = bratteli(&["validate", "--diagram", "fibonacci"]);
    assert_eq!(code, 0);
}

#[test]
fn diagram_file_and_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fig.json");
    std::fs::write(
        &file,
        r#"{"levels": [["v0"], ["a1", "a2", "a3"], ["b1", "b2"]],
            "edges": [{"level": 1, "src": 0, "dst": 0, "count": 1}, {"level": 1, "src": 0, "dst": 1, "count": 3},
                      {"level": 1, "src": 0, "dst": 2, "count": 2}, {"level": 2, "src": 0, "dst": 0, "count": 1},
                      {"level": 2, "src": 1, "dst": 0, "count": 1}, {"level": 2, "src": 2, "dst": 0, "count": 1},
                      {"level": 2, "src": 0, "dst": 1, "count": 2}, {"level": 2, "src": 2, "dst": 1, "count": 3}]}"#,
    )
    .unwrap();
    let out = dir.path().join("report.txt");
    let (code, printed) = bratteli(&["counts", "--level", "2", "--diagram", file.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(printed.is_empty());
    let rep = std::fs::read_to_string(out).unwrap();
    assert!(rep.contains("level 2\t6 8"), "{rep}");
}

#[test]
fn identical_seeds_give_identical_reports() {
    let args = ["gram", "--char", "fix^3", "--count", "6", "--level", "3", "--seed", "42"];
    assert_eq!(bratteli(&args), bratteli(&args));
    let other = ["gram", "--char", "fix^3", "--count", "6", "--level", "3", "--seed", "43"];
    assert_ne!(bratteli(&args).1, bratteli(&other).1);
}

#[test]
fn emitted_literals_reparse() {
    let (code, rep) = bratteli(&["rokhlin", "--m", "2", "--eps", "0.2", "--diagram", "fibonacci"]);
    assert_eq!(code, 0, "{rep}");
    let g = rep.lines().find_map(|l| l.strip_prefix("g\t")).unwrap();
    let (code, again) = bratteli(&["trace", "--diagram", "fibonacci", "--element", g]);
    assert_eq!(code, 0, "{again}");
    let base = rep.lines().find_map(|l| l.strip_prefix("base\t")).unwrap();
    let (code, split) = bratteli(&["split", "--diagram", "fibonacci", "--set", base, "--lambda", "1", "--eps", "0.2"]);
    assert_eq!(code, 0, "{split}");
    let sub = split.lines().find_map(|l| l.strip_prefix("subset\t")).unwrap();
    let (_, m1) = bratteli(&["split", "--diagram", "fibonacci", "--set", sub, "--lambda", "1", "--eps", "0.2"]);
    let measure = |r: &str| r.lines().find(|l| l.starts_with("measure[0]")).map(str::to_string);
    assert_eq!(measure(&split), measure(&m1));
}

#[test]
fn measures_and_sign_homs() {
    let (code, rep) = bratteli(&["measures", "--levels", "3", "--diagram", "odometer:3"]);
    assert_eq!(code, 0);
    assert!(rep.contains("level 3\t1/27"));
    let (code, rep) = bratteli(&["sign-homs", "--diagram", "odometer:3", "--depth", "6"]);
    assert_eq!(code, 0);
    assert!(!rep.contains("count\t0"), "{rep}");
    let (code, rep) = bratteli(&["simple", "--diagram", "fibonacci"]);
    assert_eq!(code, 0);
    assert!(rep.contains("simple\tyes"), "{rep}");
}
