use std::fs;
use std::process::{Command, Output};

fn mlspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlspec"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

const FIG1: [&str; 8] = [
    "--n",
    "6000",
    "--k",
    "2",
    "--p",
    "0.02,0.02",
    "--q",
    "0.018,0.013",
];

fn theory(extra: &[&str]) -> f64 {
    let mut args = vec!["theory"];
    args.extend(FIG1);
    args.extend(extra);
    stdout(&mlspec(&args)).trim().parse().unwrap()
}

#[test]
fn theory_tau_matches_published_values() {
    assert_eq!(format!("{:.2}", theory(&["--tau", "--w", "0,1"])), "9.07");
    assert_eq!(format!("{:.2}", theory(&["--tau", "--w", "1,0"])), "0.64");
}

#[test]
fn theory_other_quantities() {
    let mut args = vec!["theory", "--optimal-weight"];
    args.extend(FIG1);
    let out = stdout(&mlspec(&args));
    let w: Vec<f64> = out.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(w, vec![0.1991, 0.8009]);
    // Φ(−√(7/2)) at τ = 9.
    let e: f64 = stdout(&mlspec(&[
        "theory",
        "--asymptotic-error",
        "--tau-value",
        "9",
        "--k",
        "2",
    ]))
    .trim()
    .parse()
    .unwrap();
    assert_eq!(e, 0.0307);
    let r: f64 = stdout(&mlspec(&[
        "theory",
        "--eigenratio-limit",
        "--tau-value",
        "8",
        "--k",
        "2",
    ]))
    .trim()
    .parse()
    .unwrap();
    assert_eq!(r, 1.25);
}

#[test]
fn eval_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.txt");
    fs::write(&p, "0\n0\n1\n1\n2\n").unwrap();
    let s = p.to_str().unwrap();
    let out = stdout(&mlspec(&["eval", s, s, "--k", "3"]));
    assert_eq!(out, "ARI 1.000000\nerror 0.000000\n");
}

#[test]
fn fixed_equal_weights_match_mean() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    stdout(&mlspec(&[
        "generate",
        "--n",
        "200",
        "--k",
        "2",
        "--p",
        "0.15,0.12",
        "--q",
        "0.03,0.08",
        "--seed",
        "4",
        "--out",
        d,
    ]));
    let manifest = format!("{d}/manifest.json");
    let mut labels = Vec::new();
    for (method, out) in [("mean", "a.txt"), ("fixed:0.5,0.5", "b.txt")] {
        let out = format!("{d}/{out}");
        let w = stdout(&mlspec(&[
            "detect", &manifest, "--method", method, "--k", "2", "--seed", "9", "--out", &out,
        ]));
        assert_eq!(w.trim(), "0.5 0.5");
        labels.push(fs::read_to_string(out).unwrap());
    }
    assert_eq!(labels[0], labels[1]);
}

#[test]
fn detect_isc_on_generated_network() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    stdout(&mlspec(&[
        "generate",
        "--n",
        "300",
        "--k",
        "2",
        "--p",
        "0.1,0.1",
        "--q",
        "0.02,0.09",
        "--format",
        "edges",
        "--out",
        d,
    ]));
    let out = format!("{d}/isc.txt");
    let w = stdout(&mlspec(&[
        "detect",
        &format!("{d}/manifest.json"),
        "--method",
        "isc",
        "--cluster",
        "gmm",
        "--k",
        "2",
        "--out",
        &out,
    ]));
    let w: Vec<f64> = w.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert!(w[0] > 0.8, "{w:?}");
    let e = stdout(&mlspec(&["eval", &format!("{d}/labels.txt"), &out]));
    let ari: f64 = e
        .lines()
        .next()
        .unwrap()
        .strip_prefix("ARI ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(ari > 0.9, "{e}");
}

#[test]
fn exit_codes() {
    assert_eq!(mlspec(&["bogus"]).status.code(), Some(2));
    assert_eq!(
        mlspec(&["theory", "--tau", "--frobnicate"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mlspec(&["detect", "--method", "nope", "m.json", "--k", "2", "--out", "x"])
            .status
            .code(),
        Some(2)
    );
    let o = mlspec(&["eval", "/nonexistent/a", "/nonexistent/b"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    // Probabilities above one are a runtime failure.
    let o = mlspec(&[
        "theory", "--tau", "--n", "10", "--k", "2", "--p", "1.5", "--q", "0.1", "--w", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(mlspec(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"case": "tiny", "model": "mppm", "n": 120, "k": 2, "c_rho": 4, "p": [4, 4], "q": [1, 3],
            "sweep": {"parameter": "q", "layer": 1, "values": [1, 3]},
            "methods": ["isc_gm", "mean", "optimal"], "repetitions": 2, "base_seed": 3}"#,
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    stdout(&mlspec(&[
        "sweep",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "case,sweep,method,seed,ari,error,weights,seconds");
    assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    assert!(lines[1].starts_with("tiny,1.0,isc_gm,"));
    assert_eq!(mlspec(&["sweep", "--preset", "9z"]).status.code(), Some(1));
    assert_eq!(mlspec(&["sweep"]).status.code(), Some(2));
}
