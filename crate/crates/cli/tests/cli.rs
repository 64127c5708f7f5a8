use std::path::Path;
use std::process::{Command, Output};

const EXAMPLE_ONE: &str = r#"
n_processors = 1
horizon = 100

[[jobs]]
reward = { kind = "step", value = 16.0, deadline = 1 }
service = { kind = "geometric", p = 0.25 }

[[jobs]]
reward = { kind = "step", value = 1.1, deadline = 100 }
service = { kind = "geometric", p = 1.0 }
"#;

fn decaysched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decaysched"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .and_then(|r| r.split_whitespace().next())
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn solve_and_greedy_values() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex1.toml", EXAMPLE_ONE);
    let solved = stdout(&decaysched(&["solve", &inst]));
    assert!((field(&solved, "optimal_value") - 5.1).abs() < 1e-9);
    let greedy = stdout(&decaysched(&["greedy", &inst]));
    assert!((field(&greedy, "greedy_value") - 1.1).abs() < 1e-9);
}

#[test]
fn solve_dumps_policy_table() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex1.toml", EXAMPLE_ONE);
    let dump = dir.path().join("policy.csv");
    stdout(&decaysched(&["solve", &inst, "--dump", dump.to_str().unwrap()]));
    let text = std::fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,jobs,action,value"));
    assert!(lines.count() > 1);
}

#[test]
fn compare_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex1.toml", EXAMPLE_ONE);
    let a = stdout(&decaysched(&["compare", &inst, "--reps", "2000", "--seed", "3"]));
    let b = stdout(&decaysched(&["compare", &inst, "--reps", "2000", "--seed", "3"]));
    assert_eq!(a, b);
    assert!((field(&a, "optimal_exact") - 5.1).abs() < 1e-9);
    assert!(field(&a, "optimal_mc") > field(&a, "greedy_mc"));
    let default_seed = stdout(&decaysched(&["compare", &inst, "--reps", "2000"]));
    assert!(default_seed.contains("seed 0"));
}

#[test]
fn bounds_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex1.toml", EXAMPLE_ONE);
    let text = stdout(&decaysched(&["bounds", &inst]));
    assert!((field(&text, "ratio") - 5.1 / 1.1).abs() < 1e-9);
    assert!(text.contains("within_2_plus_delta true"));
    let csv = stdout(&decaysched(&["bounds", &inst, "--csv"]));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].split(',').count(), rows[1].split(',').count());
}

#[test]
fn bench_writes_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bench.toml",
        "families = [\"step\", \"linear\"]\nj_values = [1, 3]\nn_instances = 10\nhorizon = 12\nseed = 7\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    stdout(&decaysched(&["bench", &cfg, "--out", a.to_str().unwrap()]));
    stdout(&decaysched(&["bench", &cfg, "--out", b.to_str().unwrap()]));
    let a = std::fs::read(&a).unwrap();
    assert_eq!(a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("family,J,mean_ratio,stderr,delta_ub\nstep,1,1,0,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "n_processors = 0\nhorizon = 3\njobs = []\n");
    let o = decaysched(&["solve", &bad]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("loading instance"));

    let cfg = write(dir.path(), "cfg.toml", "horizon = 500\n");
    let o = decaysched(&["bench", &cfg, "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(decaysched(&["solve", "/nonexistent/instance.toml"]).status.code() != Some(0));
}
