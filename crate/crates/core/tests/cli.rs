use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fdwlan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdwlan"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn short_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, "sim_duration = 0.02\nrings = 1\nn_per_cell = 6\n").unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sweep_writes_one_row_per_value_and_drop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = fdwlan(
        &["--config", &cfg, "--sweep", "lambda_eca=0.5,0.75,1.0", "--drops", "4", "--seed", "3", "--out", "gain.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(dir.path().join("gain.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "parameter,value,seed,theta,chi_str,chi_l,bfd_count,ufd_natural,ufd_created,opportunity_fraction"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.starts_with("lambda_eca,")));
    for v in ["0.5", "0.75", "1"] {
        let cdf = fs::read_to_string(dir.path().join(format!("gain.lambda_eca={v}.cdf.csv"))).unwrap();
        assert_eq!(cdf.lines().next().unwrap(), "theta,cdf");
        assert!(cdf.trim_end().ends_with(",1"));
    }

    let again = fdwlan(
        &["--config", &cfg, "--sweep", "lambda_eca=0.5,0.75,1.0", "--drops", "4", "--seed", "3", "--out", "again.csv"],
        dir.path(),
    );
    assert!(again.status.success());
    assert_eq!(fs::read(dir.path().join("again.csv")).unwrap(), text.into_bytes());
}

#[test]
fn topology_and_trace_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = fdwlan(
        &["--config", &cfg, "--mode", "str", "--adaptation", "off", "--trace", "trace.csv", "--dump-topology", "topo.txt"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let topo = fs::read_to_string(dir.path().join("topo.txt")).unwrap();
    let lines: Vec<&str> = topo.lines().collect();
    assert_eq!(lines[0], "node\trole\tx\ty\tcell");
    assert_eq!(lines.len(), 1 + 7 + 7 * 6);
    assert!(lines[1].starts_with("0\tAP\t"));

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut rows = trace.lines();
    assert_eq!(
        rows.next().unwrap(),
        "time_us,cell,sender,receiver,secondary,kind,primary_ok,secondary_ok"
    );
    assert!(rows.count() > 10);
}

#[test]
fn bad_input_names_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdwlan(&["--sweep", "speed=1,2", "--out", "x.csv"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed"));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "lambda_eca = 1.5\n").unwrap();
    let out = fdwlan(&["--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda_eca"));

    let out = fdwlan(&["--sweep", "beta=10"], dir.path());
    assert!(!out.status.success());
}
