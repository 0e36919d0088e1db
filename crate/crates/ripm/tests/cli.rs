use std::process::Command;

fn ripm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ripm")).args(args).output().expect("run ripm")
}

#[test]
fn solve_reports_success_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = ripm(&[
        "solve",
        "--problem",
        "model_ob",
        "--dims",
        "12x3",
        "--seed",
        "2",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("success"), "{text}");
    let trace = std::fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("k,f_norm,kkt_residual,time_s,alpha"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn bench_writes_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    std::fs::write(
        &suite,
        r#"[{"problem":"model_st","dims":[10,2],"seed":1,"tol_kkt":1e-6,"t_max_seconds":30}]"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = ripm(&[
        "bench",
        "--suite",
        suite.to_str().unwrap(),
        "--trials",
        "3",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "problem,dims,noise,seed,trial,status,iters,time_s,kkt_residual,error");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("model_st,10x2,0,1,0,"));
}

#[test]
fn invalid_input_exits_with_an_error() {
    let out = ripm(&["solve", "--problem", "nlrm", "--dims", "4,4,4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = ripm(&["bench", "--suite", "/nonexistent/suite.json", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_prints_one_line_per_check() {
    let out = ripm(&["check"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 5, "{text}");
    assert!(lines.iter().all(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")));
    let failed = lines.iter().any(|l| l.starts_with("FAIL "));
    assert_eq!(out.status.code(), Some(if failed { 2 } else { 0 }));
}
