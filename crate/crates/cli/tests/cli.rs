use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbsline"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("spawn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn worker_count_does_not_change_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["polymer", "--n", "8", "--k", "2", "--samples", "6"],
        &["bridge", "--samples", "20", "--t", "6"],
        &["ensemble", "--samples", "10", "--n-mc", "100"],
        &["couple", "--samples", "6", "--halvings", "2"],
        &["polymer", "--n", "8", "--samples", "5", "--format", "json"],
    ];
    for (c, args) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for workers in ["1", "4", "4"] {
            let out = tmp.path().join(format!("{c}-{workers}-{}", outputs.len()));
            let mut full: Vec<&str> = args.to_vec();
            let out_s = out.to_str().unwrap();
            full.extend(["--seed", "11", "--workers", workers, "--out", out_s]);
            let (code, err) = run(&full);
            assert_eq!(code, 0, "{args:?}: {err}");
            outputs.push(read_dir_bytes(&out));
        }
        assert!(outputs[0].len() >= 2);
        assert_eq!(outputs[0], outputs[1], "{args:?}");
        assert_eq!(outputs[1], outputs[2], "{args:?}");
    }
}

#[test]
fn seeds_change_the_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        run(&[
            "bridge",
            "--samples",
            "5",
            "--seed",
            "1",
            "--out",
            a.to_str().unwrap()
        ])
        .0,
        0
    );
    assert_eq!(
        run(&[
            "bridge",
            "--samples",
            "5",
            "--seed",
            "2",
            "--out",
            b.to_str().unwrap()
        ])
        .0,
        0
    );
    assert_ne!(
        std::fs::read(a.join("bridge.csv")).unwrap(),
        std::fs::read(b.join("bridge.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();
    // window wider than the ensemble
    assert_eq!(run(&["polymer", "--n", "4", "--r", "3", "--out", o]).0, 2);
    assert_eq!(run(&["polymer", "--theta", "-1", "--out", o]).0, 2);
    assert_eq!(run(&["polymer", "--bogus"]).0, 2);
    assert_eq!(run(&["bridge", "--workers", "0", "--out", o]).0, 2);
    assert_eq!(
        run(&["couple", "--k", "3", "--x", "0,-1,-2", "--y", "0,-1,-2", "--out", o]).0,
        4
    );
    assert_eq!(
        run(&[
            "stats",
            "--input",
            tmp.path().join("missing.csv").to_str().unwrap(),
            "--out",
            o
        ])
        .0,
        1
    );
    assert_eq!(run(&["stats", "--out", o]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn files_carry_metadata_and_fixed_format() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    assert_eq!(
        run(&[
            "bridge",
            "--samples",
            "3",
            "--t",
            "4",
            "--x",
            "1.5",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap()
        ])
        .0,
        0
    );
    let text = std::fs::read_to_string(out.join("bridge.csv")).unwrap();
    assert!(text.contains("# seed=9\n"));
    assert!(text.contains("# x=1.5\n"));
    assert!(!text.contains('\r'));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "sample,t,value");
    assert_eq!(rows.len(), 1 + 3 * 4);
    assert_eq!(rows[1], "0,0,1.5000000000000000e0");
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["metadata"]["seed"], "9");
    assert_eq!(summary["results"]["mean"][0], 1.5);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# bridge run\nsamples = 4\nt = 5\nseed = 3\n").unwrap();
    let out = tmp.path().join("o");
    let (code, err) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "bridge",
        "--t",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let meta = &json(&out.join("summary.json"))["metadata"];
    assert_eq!(meta["samples"], "4");
    assert_eq!(meta["seed"], "3");
    assert_eq!(meta["t"], "7");
}

#[test]
fn stats_reproduces_polymer_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("p");
    let s = tmp.path().join("s");
    let (code, err) = run(&[
        "polymer",
        "--n",
        "8",
        "--k",
        "2",
        "--samples",
        "8",
        "--seed",
        "5",
        "--positions=-1,0,1",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let input = p.join("polymer.csv");
    let (code, err) = run(&[
        "stats",
        "--input",
        input.to_str().unwrap(),
        "--workers",
        "3",
        "--out",
        s.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let a = json(&p.join("summary.json"));
    let b = json(&s.join("summary.json"));
    assert_eq!(a["results"], b["results"]);
    assert_eq!(b["metadata"]["positions"], "-1,0,1");
    assert_eq!(a["results"]["tw"].as_array().unwrap().len(), 3);
}

#[test]
fn zero_interaction_and_equal_boundaries() {
    let tmp = tempfile::tempdir().unwrap();
    let e = tmp.path().join("e");
    assert_eq!(
        run(&[
            "ensemble",
            "--interaction",
            "zero",
            "--samples",
            "4",
            "--out",
            e.to_str().unwrap()
        ])
        .0,
        0
    );
    let r = &json(&e.join("summary.json"))["results"];
    assert_eq!(r["acceptance"], 1.0);
    assert_eq!(r["mean_attempts"], 1.0);
    let c = tmp.path().join("c");
    assert_eq!(
        run(&[
            "couple",
            "--lift",
            "0",
            "--samples",
            "10",
            "--halvings",
            "1",
            "--out",
            c.to_str().unwrap()
        ])
        .0,
        0
    );
    let m = &json(&c.join("summary.json"))["results"]["monotonicity"];
    assert_eq!(m["max_violation"], 0.0);
    assert_eq!(m["violations_beyond_epsilon"], 0);
}
