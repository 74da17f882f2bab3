use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn siqrng(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siqrng"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("SIQRNG_THREADS")
        .output()
        .expect("binary runs")
}

fn header(path: &Path) -> (String, String) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    (
        lines.next().unwrap().to_string(),
        lines.next().unwrap().to_string(),
    )
}

fn manifest_hash(dir: &Path) -> String {
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    v["hash"].as_str().unwrap().to_string()
}

#[test]
fn golden_headers() {
    let cases: [(&[&str], &str, &str); 5] = [
        (&["rates", "--points", "2"], "rates.csv", "loss_db,RS_p0,EI_p0,IL_p0,RS_p0.05,EI_p0.05,IL_p0.05,RS_final_p0,EI_final_p0,IL_final_p0,RS_final_p0.05,EI_final_p0.05,IL_final_p0.05,EQ_p0,theta_RS_p0,EQ_p0.05,theta_RS_p0.05,theta_EI,zeta"),
        (&["hmin", "--points", "2"], "hmin_afterpulse.csv", "p_hat,Np,Ip,Fp"),
        (&["hmin", "--sweep", "mismatch", "--points", "2"], "hmin_mismatch.csv", "ratio,hmin_a_p0,hmin_a_p0.05"),
        (&["finite-sampling", "--points", "2"], "finite_sampling.csv", "samples,delta,IL_p0,FS_p0,IL_p0.05,FS_p0.05"),
        (&["autocorr", "--points", "2"], "autocorr.csv", "p_hat_i,analytic"),
    ];
    for (args, file, expected) in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = siqrng(dir.path(), args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let (preamble, columns) = header(&dir.path().join(file));
        let command = if args[0] == "hmin" { "hmin" } else { args[0] };
        assert_eq!(
            preamble,
            format!(
                "# siqrng-csv v1 command={command} manifest={}",
                manifest_hash(dir.path())
            )
        );
        assert_eq!(columns, expected);
    }
}

#[test]
fn monte_carlo_columns_and_records_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = siqrng(
        dir.path(),
        &[
            "autocorr",
            "--points",
            "2",
            "--monte-carlo",
            "--pulses",
            "20000",
        ],
    );
    assert!(out.status.success());
    assert_eq!(
        header(&dir.path().join("autocorr.csv")).1,
        "p_hat_i,analytic,monte_carlo,monte_carlo_stderr"
    );

    let out = siqrng(dir.path(), &["simulate", "--pulses", "1000"]);
    assert!(out.status.success());
    assert_eq!(
        header(&dir.path().join("records.csv")).1,
        "index,basis,d0,d1,ap0,ap1"
    );
}

#[test]
fn numbers_have_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert!(siqrng(dir.path(), &["hmin", "--points", "3"])
        .status
        .success());
    let text = fs::read_to_string(dir.path().join("hmin_afterpulse.csv")).unwrap();
    for field in text.lines().nth(3).unwrap().split(',') {
        let mantissa = field.split('e').next().unwrap();
        assert_eq!(
            mantissa.trim_start_matches('-').replace('.', "").len(),
            17,
            "{field}"
        );
    }
}

fn simulate_outputs(dir: &Path, threads: &str, config: Option<&Path>) -> Vec<Vec<u8>> {
    let mut args = vec![
        "simulate",
        "--pulses",
        "200000",
        "--seed",
        "42",
        "--threads",
        threads,
    ];
    let config_arg;
    if let Some(c) = config {
        config_arg = c.to_str().unwrap().to_string();
        args.extend(["--config", &config_arg]);
    }
    let out = siqrng(dir, &args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    [
        "records.csv",
        "bits.bin",
        "bits.json",
        "extracted.bin",
        "summary.json",
    ]
    .iter()
    .map(|f| fs::read(dir.join(f)).unwrap())
    .collect()
}

#[test]
fn simulation_is_byte_identical() {
    let config = tempfile::NamedTempFile::new().unwrap();
    fs::write(
        config.path(),
        r#"{"segment_len": 16384, "detectors": {
            "z": [{"efficiency": 0.1, "dark_rate": 1e-4, "afterpulse": {"mode": "explicit", "coefficients": [0.04, 0.01], "window_depth": "inf"}},
                  {"efficiency": 0.1, "dark_rate": 1e-4, "afterpulse": {"mode": "explicit", "coefficients": [0.04, 0.01], "window_depth": "inf"}}],
            "x": [{"efficiency": 0.1, "dark_rate": 1e-4, "afterpulse": {"mode": "explicit", "window_depth": "inf"}},
                  {"efficiency": 0.1, "dark_rate": 1e-4, "afterpulse": {"mode": "explicit", "window_depth": "inf"}}]}}"#,
    )
    .unwrap();
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    let first = simulate_outputs(a.path(), "1", Some(config.path()));
    assert_eq!(first, simulate_outputs(b.path(), "1", Some(config.path())));
    assert_eq!(first, simulate_outputs(c.path(), "4", Some(config.path())));

    // rerunning from the manifest reproduces everything
    let d = tempfile::tempdir().unwrap();
    let manifest = a.path().join("manifest.json");
    let out = siqrng(
        d.path(),
        &["simulate", "--config", manifest.to_str().unwrap()],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rerun: Vec<Vec<u8>> = [
        "records.csv",
        "bits.bin",
        "bits.json",
        "extracted.bin",
        "summary.json",
    ]
    .iter()
    .map(|f| fs::read(d.path().join(f)).unwrap())
    .collect();
    assert_eq!(first, rerun);
}

#[test]
fn sweep_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.json");
    fs::write(&spec, r#"{"sweep_var": "voa_loss_db", "from": 0, "to": 50, "points": 4, "params": {"N": 1e9, "nu": 50}}"#).unwrap();
    let out = siqrng(dir.path(), &["rates", "--config", spec.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("5.0000000000000000e1,"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["resolved_config"]["security"]["N"], 1e9);
}

#[test]
fn documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(
        siqrng(dir.path(), &["rates", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    fs::write(&bad, r#"{"nu": -1.0}"#).unwrap();
    assert_eq!(
        siqrng(dir.path(), &["hmin", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        siqrng(
            dir.path(),
            &["rates", "--config", missing.to_str().unwrap()]
        )
        .status
        .code(),
        Some(5)
    );
    assert_eq!(
        siqrng(dir.path(), &["no-such-command"]).status.code(),
        Some(2)
    );
    // a vacuum source with noiseless detectors never clicks
    fs::write(
        &bad,
        r#"{"source": {"distribution": {"probs": [1.0], "tail_mass": 0.0}}, "detectors": {
            "z": [{"efficiency": 0.1, "dark_rate": 0, "afterpulse": {"mode": "explicit", "window_depth": "inf"}}, {"efficiency": 0.1, "dark_rate": 0, "afterpulse": {"mode": "explicit", "window_depth": "inf"}}],
            "x": [{"efficiency": 0.1, "dark_rate": 0, "afterpulse": {"mode": "explicit", "window_depth": "inf"}}, {"efficiency": 0.1, "dark_rate": 0, "afterpulse": {"mode": "explicit", "window_depth": "inf"}}]}}"#,
    )
    .unwrap();
    assert_eq!(
        siqrng(
            dir.path(),
            &[
                "simulate",
                "--pulses",
                "100",
                "--config",
                bad.to_str().unwrap()
            ]
        )
        .status
        .code(),
        Some(4)
    );
}
