use std::process::{Command, Output};

fn qrexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrexp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eval_scales_the_principal_lift() {
    let o = qrexp(&["--lambda", "0.5", "eval", "--point", "0.1,0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let line = out.lines().next().unwrap();
    let nums: Vec<f64> = line
        .trim_start_matches("λF(x) = (")
        .trim_end_matches(')')
        .split(", ")
        .map(|t| t.parse().unwrap())
        .collect();
    assert!((nums[0] - 0.05).abs() < 1e-12 && nums[1] == 0.0 && nums[2] == 0.0, "{line}");
    assert!(out.contains("f_λ(x) = "));
}

#[test]
fn eval_of_origin() {
    let out = stdout(&qrexp(&["eval", "--point", "0,0,0"]));
    assert!(out.contains("λF(x) = (0, 0, 0)"), "{out}");
    assert!(out.contains("f_λ(x) = inf"), "{out}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(qrexp(&[]).status.code(), Some(2));
    assert_eq!(qrexp(&["--lambda", "-1", "eval", "--point", "0,0,0"]).status.code(), Some(2));
    assert_eq!(qrexp(&["--L", "0.5", "verify"]).status.code(), Some(2));
    assert_eq!(qrexp(&["--cutoff", "cubic", "verify"]).status.code(), Some(2));
    assert_eq!(qrexp(&["eval", "--point", "1,2"]).status.code(), Some(2));
    assert_eq!(qrexp(&["render", "--window", "1,0,0,1"]).status.code(), Some(2));
    assert_eq!(qrexp(&["--workers", "0", "render", "--res", "4"]).status.code(), Some(2));
    assert_eq!(qrexp(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = qrexp(&["verify"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    let b = qrexp(&["verify", "--workers", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("13/13 checks passed"));
}

#[test]
fn verify_catches_a_broken_cutoff() {
    let o = qrexp(&["--cutoff", "corrupted", "verify"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL g-boundary"), "{out}");
    assert!(out.contains("FAIL g-continuity"), "{out}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("g-boundary"));
}

#[test]
fn render_is_identical_across_workers() {
    let one = qrexp(&["render", "--res", "48x32", "--workers", "1"]);
    let eight = qrexp(&["render", "--res", "48x32", "--workers", "8"]);
    assert_eq!(one.status.code(), Some(0));
    assert!(one.stdout.starts_with(b"P6 48 32 255\n"));
    assert_eq!(one.stdout.len(), "P6 48 32 255\n".len() + 48 * 32 * 3);
    assert_eq!(one.stdout, eight.stdout);
}

#[test]
fn orbit_csv_and_class() {
    let o = qrexp(&["orbit", "--point", "0.2,0.1,0", "--n-iter", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("step,x1,x2,x3,norm"));
    assert_eq!(out.lines().count(), 6);
    assert!(String::from_utf8_lossy(&o.stderr).contains("class: to-zero"));
}

#[test]
fn probe_ray_matches_predictions() {
    let o = qrexp(&["probe-ray"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains(",fail"));
}

#[test]
fn dilatation_scan_csv() {
    let o = qrexp(&["dilatation-scan", "--res", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("x1,x2,x3,det,"));
    assert!(out.lines().count() > 1);
}

#[test]
fn config_file_then_flags() {
    let dir = std::env::temp_dir().join(format!("qrexp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# scale\nmap.lambda = 0.5\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&qrexp(&["--config", cfg, "eval", "--point", "0.1,0,0"]));
    let from_flag = stdout(&qrexp(&["--lambda", "0.5", "eval", "--point", "0.1,0,0"]));
    assert_eq!(from_file, from_flag);
    let overridden = stdout(&qrexp(&["--config", cfg, "--lambda", "1", "eval", "--point", "0.1,0,0"]));
    assert_ne!(overridden, from_file);
    std::fs::write(dir.join("bad.cfg"), "map.lamda = 1\n").unwrap();
    let bad = qrexp(&["--config", dir.join("bad.cfg").to_str().unwrap(), "verify"]);
    assert_eq!(bad.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
