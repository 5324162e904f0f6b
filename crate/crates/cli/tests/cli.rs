use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn jr(args: &[&str], stdin: Option<&str>, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jr"));
    cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).env_remove("JR_JOBS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn jr");
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(s) = stdin {
            pipe.write_all(s.as_bytes()).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

/// `-E_1(x) = Ei(-x)` with `E_1(x) = ∫_0^1 e^{-x/u} / u du`, composite Simpson.
fn ei_neg(x: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let f = |u: f64| if u == 0.0 { 0.0 } else { (-x / u).exp() / u };
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    -acc * h / 3.0
}

#[test]
fn fl_check_example_passes() {
    let spec = r#"{"command":"fl-check","params":{"p":3,"d":-1,"m":1,"charpoly":["-1","1"],"moments":["9"]}}"#;
    let o = jr(&[], Some(spec), &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["result"]["value0"], "1");
    assert_eq!(v["result"]["orb_u"], 1);
}

#[test]
fn fl_check_flags_match_spec_input() {
    let from_flags = jr(&["fl-check", "--p", "3", "--d", "-1", "--m", "1", "--charpoly", "-1,1", "--moments", "9"], None, &[]);
    let spec = r#"{"command":"fl-check","params":{"p":3,"d":-1,"m":1,"charpoly":["-1","1"],"moments":["9"]}}"#;
    let from_spec = jr(&["run", "-"], Some(spec), &[]);
    assert_eq!(from_flags.stdout, from_spec.stdout);
}

#[test]
fn arch_derivative_example() {
    let o = jr(&["arch", "--xi", "-1", "--s", "0", "--deriv"], None, &[]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    let expected = 0.5 * std::f64::consts::PI.exp() * ei_neg(2.0 * std::f64::consts::PI);
    let got = v["result"]["value"]["re"].as_f64().unwrap();
    assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    assert!(v["result"]["error_bound"].as_f64().unwrap() < 1e-10);
    assert!(v["result"]["special_value"]["formula"].as_str().unwrap().contains("Ei"));
}

#[test]
fn schema_errors_exit_two() {
    assert_eq!(jr(&[], Some("{not json"), &[]).status.code(), Some(2));
    assert_eq!(jr(&[], Some(r#"{"command":"nope"}"#), &[]).status.code(), Some(2));
    assert_eq!(jr(&[], Some(r#"{"command":"fl-check","params":{"p":3}}"#), &[]).status.code(), Some(2));
    assert_eq!(jr(&[], Some(r#"{"command":"arch","params":{"xi":1,"bogus":2}}"#), &[]).status.code(), Some(2));
    assert_eq!(jr(&[], Some(r#"{"command":"fl-check","params":{"p":3,"charpoly":["1/0","1"],"moments":["9"]}}"#), &[]).status.code(), Some(2));
    assert_eq!(jr(&["fl-sweep"], None, &[("JR_JOBS", "many")]).status.code(), Some(2));
}

#[test]
fn precondition_failures_exit_three() {
    let even = r#"{"command":"fl-check","params":{"p":2,"charpoly":["-1","1"],"moments":["9"]}}"#;
    assert_eq!(jr(&[], Some(even), &[]).status.code(), Some(3));
    let split = r#"{"command":"fl-check","params":{"p":5,"d":-1,"charpoly":["-1","1"],"moments":["9"]}}"#;
    assert_eq!(jr(&[], Some(split), &[]).status.code(), Some(3));
    assert_eq!(jr(&["arch", "--xi", "0"], None, &[]).status.code(), Some(3));
    assert_eq!(jr(&["tate-fe", "--disc", "-15"], None, &[]).status.code(), Some(3));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_thread_counts() {
    let a = jr(&["fl-sweep", "--seed", "5"], None, &[("JR_JOBS", "1")]);
    let b = jr(&["fl-sweep", "--seed", "5"], None, &[("JR_JOBS", "4")]);
    let c = jr(&["fl-sweep", "--seed", "5", "--jobs", "2"], None, &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v = json_out(&a);
    assert_eq!(v["seed"], 5);
    assert_eq!(v["result"]["instances"], 90);
    assert_eq!(v["result"]["passed"], 90);
}

#[test]
fn csv_sweep_has_one_row_per_instance() {
    let o = jr(&["fl-sweep", "--p", "3", "--format", "csv"], None, &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "charpoly,d,m,moments,orb_u,p,side,value0,verdict");
    assert_eq!(lines.len(), 46);
    assert!(lines[1..].iter().all(|l| l.ends_with(",PASS")));
}

#[test]
fn tate_fe_and_weil_check_pass() {
    let o = jr(&["tate-fe", "--disc", "-4", "--s", "0.3", "--format", "csv"], None, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("verdict,PASS"));
    let o = jr(&["weil-check", "--p", "3", "--m", "2", "--samples", "4", "--seed", "9"], None, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_out(&o)["result"]["fourier_involutions"], "4/4");
}

#[test]
fn reduce_round_trips() {
    let spec = r#"{"command":"reduce","params":{"d":-1,"g":[["3/5","4/5"],["-4/5","3/5"]],"variant":"r-natural"}}"#;
    let o = jr(&[], Some(spec), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_out(&o);
    assert_eq!(v["result"]["identities"], true);
    assert_eq!(v["result"]["lift_round_trip"], true);
    assert_eq!(v["result"]["side"], "unitary");
    let half = r#"{"command":"reduce","params":{"d":-1,"g":[["3/5","4/5"],["-4/5","3/5"]],"xi":"1/2"}}"#;
    assert_eq!(jr(&[], Some(half), &[]).status.code(), Some(3));
    let both = r#"{"command":"reduce","params":{"g":[["1"]],"gamma":[["1"]]}}"#;
    assert_eq!(jr(&[], Some(both), &[]).status.code(), Some(2));
}

#[test]
fn orb_gl_and_orb_u_examples() {
    let spec = r#"{"command":"orb-gl","params":{"p":3,"d":-1,"gamma":[["1"]],"u1":["3"],"u2":["3"]}}"#;
    let v = json_out(&jr(&[], Some(spec), &[]));
    assert_eq!(v["result"]["orbital"]["coeffs"]["-1"], "-1");
    assert_eq!(v["result"]["orbital"]["coeffs"]["1"], "-1");
    let spec = r#"{"command":"orb-u","params":{"p":3,"d":-1,"g":[["1"]],"u":["3"]}}"#;
    assert_eq!(json_out(&jr(&[], Some(spec), &[]))["result"]["count"], 1);
}
