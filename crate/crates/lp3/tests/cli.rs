//! End-to-end checks of the `lp3` binary: pinned output formats, the exit
//! code conventions (2 = usage, 1 = numerical or I/O failure), and byte-level
//! determinism of every file the tool writes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lp3(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lp3"))
        .args(args)
        .output()
        .expect("failed to spawn lp3")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

/// Stdout of a run that must succeed; panics with the full transcript when it
/// does not.
fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "lp3 failed with status {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Fit the reference map (erf kernel, sigma_w = sigma_b = 1, orbit
/// -1 -> 1 -> 0) into `dir` and return the written path.
fn fit_reference_map(dir: &Path) -> PathBuf {
    let map = dir.join("map.json");
    let out = lp3(&[
        "limitmap", "fit", "--data", "-1,1,0", "--kernel", "erf", "--sigma", "1.0", "--out",
        map.to_str().unwrap(),
    ]);
    let text = stdout_of(&out);
    assert!(text.starts_with("wrote "), "unexpected fit output: {text}");
    assert!(map.is_file(), "fit did not write {}", map.display());
    map
}

/// Data rows of a CSV document: everything after the `#`-prefixed metadata
/// comments and the header line. Blank lines are block separators (branch
/// continuation output uses them), not rows.
fn csv_rows(text: &str) -> (String, Vec<String>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines.next().expect("csv header").to_string();
    (header, lines.map(str::to_string).collect())
}

#[test]
fn version_names_the_config_schema() {
    let out = lp3(&["--version"]);
    assert_eq!(stdout_of(&out).trim(), "lp3 0.1.0 (config-schema 1)");
}

#[test]
fn kernel_eval_prints_full_precision_scientific_floats() {
    let out = lp3(&["kernel", "eval", "--family", "relu", "--x", "1", "--y", "1"]);
    assert_eq!(stdout_of(&out).trim(), "1.0000000000000000e0");

    let out = lp3(&["kernel", "eval", "--family", "erf", "--x", "0", "--y", "0"]);
    assert_eq!(stdout_of(&out).trim(), "4.6455905439753997e-1");

    let out = lp3(&[
        "kernel", "eval", "--family", "erf", "--x", "0.3", "--y", "0.7", "--deriv", "1",
    ]);
    let value: f64 = stdout_of(&out).trim().parse().expect("derivative parses");
    assert!(value.is_finite() && value > 0.0, "erf kernel slope at (0.3, 0.7): {value}");
}

#[test]
fn usage_errors_exit_with_code_two() {
    // Missing required flag (clap-level error).
    let out = lp3(&["kernel", "eval", "--family", "erf", "--x", "1"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));

    // Well-formed flags, bad value (application-level usage error).
    let out = lp3(&["kernel", "eval", "--family", "sigmoid", "--x", "0", "--y", "0"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).starts_with("error:"), "stderr: {}", stderr_of(&out));

    // Unknown subcommand.
    let out = lp3(&["kernel", "integrate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_files_exit_with_code_one() {
    let out = lp3(&["limitmap", "eval", "--map", "/nonexistent/map.json", "--x", "0.5"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).starts_with("error: i/o:"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn quad_fit_prints_the_interpolating_parabola_as_one_json_line() {
    let out = lp3(&["quad", "fit", "--data", "-1,1,0"]);
    assert_eq!(
        stdout_of(&out).trim(),
        "{\"alpha\":-1.0,\"beta\":-0.5,\"class\":\"decreasing-concave\",\
         \"critical_point\":0.16666666666666666,\"discriminant\":-1.5625,\
         \"gamma\":1.5,\"kappa_1\":-1.8125}"
    );
    // The run configuration is echoed on stderr so stdout stays parseable.
    assert!(stderr_of(&out).contains("# config:"), "stderr: {}", stderr_of(&out));
}

#[test]
fn limitmap_round_trips_and_feedback_rescales_exactly() {
    let dir = scratch("limitmap_round_trip");
    let map = fit_reference_map(&dir);
    let map = map.to_str().unwrap();

    let first = stdout_of(&lp3(&["limitmap", "eval", "--map", map, "--x", "0.5"]));
    assert_eq!(first.trim(), "-6.7731542152907309e-1");

    // Re-evaluation is byte-identical: no hidden state, no RNG.
    let second = stdout_of(&lp3(&["limitmap", "eval", "--map", map, "--x", "0.5"]));
    assert_eq!(first, second);

    // Feedback strength is a pure output scale, so the override reproduces
    // multiplication by 0.9 bit for bit.
    let scaled = stdout_of(&lp3(&[
        "limitmap", "eval", "--map", map, "--x", "0.5", "--sigma-fb", "0.9",
    ]));
    let base: f64 = first.trim().parse().unwrap();
    let scaled: f64 = scaled.trim().parse().unwrap();
    assert_eq!(scaled, 0.9 * base);
}

#[test]
fn elm_train_writes_a_deterministic_network_file() {
    let dir = scratch("elm_train");
    let net = dir.join("net.json");
    let args = [
        "elm", "train", "--n", "1000", "--activation", "erf", "--sigma", "1.0", "--data",
        "-1,1,0", "--seed", "3", "--out",
    ];
    let mut with_out = args.to_vec();
    with_out.push(net.to_str().unwrap());
    stdout_of(&lp3(&with_out));

    let text = fs::read_to_string(&net).expect("net.json readable");
    let doc: serde_json::Value = serde_json::from_str(&text).expect("net.json is json");
    assert_eq!(doc["format"], "lp3-net");
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["activation"], "erf");
    assert_eq!(doc["degenerate_training"], false);
    for field in ["w_in", "b_in", "w_out"] {
        assert_eq!(
            doc[field].as_array().map(Vec::len),
            Some(1000),
            "{field} should hold one entry per node"
        );
    }

    // Same seed, same bytes.
    let net2 = dir.join("net2.json");
    let mut again = args.to_vec();
    again.push(net2.to_str().unwrap());
    stdout_of(&lp3(&again));
    assert_eq!(fs::read(&net).unwrap(), fs::read(&net2).unwrap());
}

#[test]
fn dynamics_run_emits_a_single_json_summary_line() {
    let dir = scratch("dynamics_run");
    let map = fit_reference_map(&dir);
    let out = lp3(&[
        "dynamics", "run", "--map", map.to_str().unwrap(), "--x0", "0.2", "--transient", "100",
        "--t", "1000",
    ]);
    let text = stdout_of(&out);
    assert_eq!(text.trim().lines().count(), 1, "summary should be one line: {text}");

    let doc: serde_json::Value = serde_json::from_str(text.trim()).expect("summary is json");
    for key in ["diverged", "final_state", "lyapunov", "period", "trajectory_sample", "x0"] {
        assert!(doc.get(key).is_some(), "summary lacks {key}: {text}");
    }
    assert_eq!(doc["x0"], 0.2);
    assert_eq!(doc["diverged"], false);
    assert!(doc["lyapunov"].as_f64().unwrap().is_finite());
}

#[test]
fn dynamics_basin_prints_a_labelled_grid() {
    let dir = scratch("dynamics_basin");
    let map = fit_reference_map(&dir);
    let out = lp3(&[
        "dynamics", "basin", "--map", map.to_str().unwrap(), "--param-steps", "3", "--x0-steps",
        "5", "--x0-min", "-2", "--x0-max", "2", "--transient", "100", "--t", "200",
    ]);
    let (header, rows) = csv_rows(&stdout_of(&out));
    assert_eq!(header, "param,x0,period,label,lyapunov,diverged");
    assert_eq!(rows.len(), 3 * 5, "one row per (param, x0) cell");
    for row in &rows {
        assert_eq!(row.split(',').count(), 6, "malformed row: {row}");
    }
}

#[test]
fn orbits_census_lists_stability_counts_per_period() {
    let dir = scratch("orbits_census");
    let map = fit_reference_map(&dir);
    let out = lp3(&["orbits", "census", "--map", map.to_str().unwrap(), "--pmax", "3"]);
    let text = stdout_of(&out);
    assert!(text.starts_with("# config-hash:"), "census output: {text}");

    let (header, rows) = csv_rows(&text);
    assert_eq!(header, "p,stable,unstable");
    assert!(!rows.is_empty(), "census found no orbits");
    for row in &rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 3, "malformed row: {row}");
        let p: usize = fields[0].parse().expect("period column");
        assert!((1..=3).contains(&p), "period out of range: {row}");
    }
    // The fixed point of this map always shows up.
    assert!(rows.iter().any(|r| r.starts_with("1,")), "no period-1 row in: {text}");
}

#[test]
fn orbits_externalize_traces_branches_to_a_terminus() {
    let dir = scratch("orbits_externalize");
    let map = fit_reference_map(&dir);
    let out = lp3(&[
        "orbits", "externalize", "--map", map.to_str().unwrap(), "--pmax", "2", "--step", "0.01",
    ]);
    let (header, rows) = csv_rows(&stdout_of(&out));
    assert_eq!(header, "p,sigma_fb,x_p,lambda_p,terminus");
    assert!(!rows.is_empty(), "no continuation rows");
    for row in &rows {
        assert_eq!(row.split(',').count(), 5, "malformed row: {row}");
    }
    // Every branch starts at full feedback strength.
    assert!(
        rows.iter().any(|r| r.split(',').nth(1) == Some("1.0000000000000000e0")),
        "no branch anchored at sigma_fb = 1"
    );
}

#[test]
fn quad_births_pins_the_closed_form_sweep() {
    let out = lp3(&[
        "quad", "births", "--data", "-1,1,0", "--periods", "1,2,3", "--res", "0.01",
    ]);
    let (header, rows) = csv_rows(&stdout_of(&out));
    assert_eq!(header, "period,sigma_fb_birth,mu_at_birth");
    assert_eq!(
        rows,
        vec![
            // Period 1 is already the attractor at the smallest feedback on
            // the grid; period 3's window is narrower than this resolution,
            // so its birth column is empty.
            "1,1.0000000000000000e-2,2.0052984631441548e0".to_string(),
            "2,6.2000000000000000e-1,3.0056171120131578e0".to_string(),
            "3,,".to_string(),
        ]
    );
}

#[test]
fn quad_error_reads_the_stored_map() {
    let dir = scratch("quad_error");
    let map = dir.join("narrow.json");
    stdout_of(&lp3(&[
        "limitmap", "fit", "--data", "-1,1,0", "--kernel", "erf", "--sigma-w", "0.001",
        "--sigma-b", "1.0", "--out", map.to_str().unwrap(),
    ]));
    let out = lp3(&["quad", "error", "--map", map.to_str().unwrap()]);
    let err: f64 = stdout_of(&out).trim().parse().expect("error value parses");
    // At sigma_w = 1e-3 the trained map is its interpolating parabola up to
    // an O(sigma_w^2) correction.
    assert!(
        (1.3e-6..1.5e-6).contains(&err),
        "quadratic distance off the expected window: {err:e}"
    );
}

#[test]
fn scan_run_output_is_identical_across_runs_and_worker_counts() {
    let dir = scratch("scan_run");
    let csv1 = dir.join("once.csv");
    let csv2 = dir.join("again.csv");
    let csv3 = dir.join("parallel.csv");

    let config_for = |output: &Path| {
        format!(
            "mode = \"scan-c\"\noutput = \"{}\"\na = -1.0\nb = 1.0\n\n\
             [kernel]\nfamily = \"erf\"\nsigma = 1.0\n\n\
             [axis1]\nmin = -0.5\nmax = 0.5\nsteps = 5\n\n\
             [x0]\nvalues = [0.0]\n\n\
             [dynamics]\ntransient = 200\nhorizon = 500\nsample-len = 3\n",
            output.display()
        )
    };

    let toml1 = dir.join("scan1.toml");
    fs::write(&toml1, config_for(&csv1)).unwrap();
    stdout_of(&lp3(&["scan", "run", "--config", toml1.to_str().unwrap()]));

    let toml2 = dir.join("scan2.toml");
    fs::write(&toml2, config_for(&csv2)).unwrap();
    stdout_of(&lp3(&["scan", "run", "--config", toml2.to_str().unwrap()]));

    let toml3 = dir.join("scan3.toml");
    fs::write(&toml3, config_for(&csv3)).unwrap();
    stdout_of(&lp3(&["--workers", "2", "scan", "run", "--config", toml3.to_str().unwrap()]));

    let bytes1 = fs::read(&csv1).unwrap();
    assert_eq!(bytes1, fs::read(&csv2).unwrap(), "rerun changed the output");
    assert_eq!(bytes1, fs::read(&csv3).unwrap(), "worker count changed the output");

    let text = String::from_utf8(bytes1).unwrap();
    assert!(text.starts_with("# config-hash:"), "missing config hash: {text}");
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, "c,x0,period,lyapunov,diverged,stability_product,attractor,gap");
    assert_eq!(rows.len(), 5, "one row per c value");
}

#[test]
fn scan_run_rejects_configs_with_unknown_keys() {
    let dir = scratch("scan_bad_config");
    let toml = dir.join("bad.toml");
    fs::write(
        &toml,
        "mode = \"scan-c\"\noutput = \"out.csv\"\na = -1.0\nb = 1.0\nturbo = true\n\n\
         [kernel]\nfamily = \"erf\"\nsigma = 1.0\n\n\
         [axis1]\nmin = -0.5\nmax = 0.5\nsteps = 5\n\n\
         [x0]\nvalues = [0.0]\n",
    )
    .unwrap();
    let out = lp3(&["scan", "run", "--config", toml.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("turbo"), "stderr: {}", stderr_of(&out));
}
