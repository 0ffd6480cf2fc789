use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qdesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdesign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn generate(dir: &TempDir, name: &str, args: &[&str]) -> String {
    let file = path(dir, name);
    let mut full = vec!["generate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--output", &file]);
    let out = qdesign(&full);
    assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    file
}

fn verify(kind: &str, file: &str, t: &str, extra: &[&str]) -> Output {
    let mut args = vec!["verify", "--kind", kind, "--input", file, "--t", t, "--tol", "1e-9"];
    args.extend_from_slice(extra);
    qdesign(&args)
}

#[test]
fn generated_objects_reverify() {
    let dir = TempDir::new().unwrap();
    let cases: Vec<(&str, Vec<&str>, &str, &str, Vec<&str>)> = vec![
        ("c1.json", vec!["clifford", "--n", "1"], "unitary", "3", vec![]),
        ("p1.json", vec!["pauli", "--n", "1"], "unitary", "1", vec![]),
        ("mub3.json", vec!["mub", "--d", "3"], "projective", "2", vec![]),
        ("mub4.json", vec!["mub", "--d", "4"], "projective", "2", vec![]),
        ("iso.json", vec!["isocoherent-mub"], "projective", "2", vec![]),
        ("sic2.json", vec!["sic", "--d", "2"], "projective", "2", vec![]),
        ("sic3.json", vec!["sic", "--d", "3", "--theta", "0.7"], "projective", "2", vec![]),
        ("simpson.json", vec!["simpson", "--d", "5"], "simplex", "2", vec![]),
        ("chan.json", vec!["channel-design", "--k", "2.5"], "channel", "2", vec!["--k", "2.5"]),
        ("chan4.json", vec!["channel-design", "--k", "4"], "channel", "3", vec!["--k", "4"]),
        ("uni.json", vec!["unistochastic-design"], "unistochastic", "3", vec![]),
    ];
    for (name, gen_args, kind, t, extra) in cases {
        let file = generate(&dir, name, &gen_args);
        let out = verify(kind, &file, t, &extra);
        assert_eq!(code(&out), 0, "{name}: {}{}", stdout(&out), stderr(&out));
        assert!(stdout(&out).contains("verdict: PASS"));
    }
}

#[test]
fn two_qubit_clifford_file_has_every_element() {
    let dir = TempDir::new().unwrap();
    let file = generate(&dir, "c2.json", &["clifford", "--n", "2"]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(json["elements"].as_array().unwrap().len(), 11_520);
}

#[test]
fn simpson_file_shape() {
    let dir = TempDir::new().unwrap();
    let file = generate(&dir, "s.json", &["simpson", "--d", "5"]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(json["points"].as_array().unwrap().len(), 6);
}

#[test]
fn failing_designs_exit_one() {
    let dir = TempDir::new().unwrap();
    let c1 = generate(&dir, "c1.json", &["clifford", "--n", "1"]);
    let out = verify("unitary", &c1, "4", &[]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("verdict: FAIL"));

    let chan = generate(&dir, "chan.json", &["channel-design", "--k", "3"]);
    assert_eq!(code(&verify("channel", &chan, "2", &["--k", "4"])), 1);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&verify("projective", &path(&dir, "missing.json"), "2", &[])), 2);

    let c1 = generate(&dir, "c1.json", &["clifford", "--n", "1"]);
    let out = verify("projective", &c1, "2", &[]);
    assert_eq!(code(&out), 2, "wrong kind must be a schema error");

    let chan = generate(&dir, "chan.json", &["channel-design", "--k", "3"]);
    assert_eq!(code(&verify("channel", &chan, "2", &[])), 2, "--k is required");

    assert_eq!(code(&qdesign(&["generate", "sic", "--d", "5", "--output", &path(&dir, "x.json")])), 2);
    assert_eq!(code(&qdesign(&["verify", "--kind", "simplex", "--input", &c1, "--t", "2", "--tol", "0"])), 2);
    assert_eq!(code(&qdesign(&["no-such-command"])), 2);
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = generate(&dir, "a.json", &["sic", "--d", "3", "--theta", "0.25"]);
    let b = generate(&dir, "b.json", &["sic", "--d", "3", "--theta", "0.25"]);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

fn simulate(dir: &TempDir, name: &str, args: &[&str]) -> String {
    let file = path(dir, name);
    let mut full = vec!["simulate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--output", &file]);
    let out = qdesign(&full);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    file
}

fn fit_rows(csv_text: &str) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["delay_us", "k_star", "epsilon_star", "w", "model"]
    );
    reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn kstar_recovers_synthetic_emission_noise() {
    let dir = TempDir::new().unwrap();
    let counts = simulate(
        &dir,
        "counts.csv",
        &["--emission-k", "2", "--emission-w", "0.5", "--shots", "100000", "--seed", "9", "--delays", "0,5,10"],
    );
    let out = qdesign(&["kstar", "--counts", &counts, "--model", "emission"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = fit_rows(&stdout(&out));
    assert_eq!(rows.len(), 3);
    for row in rows {
        let k: f64 = row[1].parse().unwrap();
        assert!((1.95..=2.05).contains(&k), "k* = {k}");
        assert_eq!(row[4], "emission");
    }
}

#[test]
fn kstar_on_identity_sits_at_the_boundary() {
    let dir = TempDir::new().unwrap();
    let counts = simulate(&dir, "id.csv", &["--identity", "--shots", "100000", "--seed", "3"]);
    let fits = path(&dir, "fits.csv");
    let out = qdesign(&["kstar", "--counts", &counts, "--model", "uniform", "--output", &fits]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = fit_rows(&fs::read_to_string(fits).unwrap());
    assert_eq!(rows.len(), 1);
    let k: f64 = rows[0][1].parse().unwrap();
    assert_eq!(k, 1.0);
}

#[test]
fn malformed_counts_report_the_line() {
    let dir = TempDir::new().unwrap();
    let counts = simulate(&dir, "c.csv", &["--identity", "--shots", "100", "--seed", "1"]);
    let mut lines: Vec<String> = fs::read_to_string(&counts).unwrap().lines().map(String::from).collect();
    lines[6] = "0,1,two,3,0,5".into();
    fs::write(&counts, lines.join("\n")).unwrap();
    let out = qdesign(&["kstar", "--counts", &counts]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 7"), "{}", stderr(&out));
}

#[test]
fn incomplete_counts_name_the_missing_cells() {
    let dir = TempDir::new().unwrap();
    let counts = simulate(&dir, "c.csv", &["--identity", "--shots", "100", "--seed", "1"]);
    let text = fs::read_to_string(&counts).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("0.0,2,1,3,")).collect();
    fs::write(&counts, kept.join("\n")).unwrap();
    let out = qdesign(&["kstar", "--counts", &counts]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing"), "{}", stderr(&out));
}

#[test]
fn simulate_is_byte_identical_for_equal_seeds() {
    let dir = TempDir::new().unwrap();
    let args = ["--emission-k", "3", "--emission-w", "1", "--shots", "5000", "--seed", "42", "--delays", "0,1"];
    let a = simulate(&dir, "a.csv", &args);
    let b = simulate(&dir, "b.csv", &args);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn sample_is_thread_independent_and_agrees_with_the_average() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, threads: &str| {
        let file = path(&dir, name);
        let out = qdesign(&[
            "sample", "--construction", "stinespring", "--d", "2", "--s", "4", "--t", "2", "--samples", "4000", "--seed",
            "8", "--threads", threads, "--output", &file,
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read(file).unwrap()
    };
    let one = run("one.json", "1");
    let four = run("four.json", "4");
    assert_eq!(one, four);
    let json: serde_json::Value = serde_json::from_slice(&one).unwrap();
    assert!(json["max_abs_z"].as_f64().unwrap() < 5.0);
    assert_eq!(json["rng"], "chacha20");
}

#[test]
fn sample_exports_single_copy_chois() {
    let dir = TempDir::new().unwrap();
    let export = path(&dir, "chois.json");
    let out = qdesign(&[
        "sample", "--construction", "kraus", "--d", "2", "--s", "2", "--samples", "10", "--seed", "1", "--export", &export,
        "--output", &path(&dir, "summary.json"),
    ]);
    assert!(code(&out) <= 1, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(export).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 10);
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let file = path(dir, name);
    fs::write(Path::new(&file), text).unwrap();
    file
}

const SQUARE: &str = r#""vertices": [[0,0],[1,0],[1,1],[0,1]], "simplices": [[0,1,2],[0,2,3]]"#;

#[test]
fn mesh_average_values() {
    let dir = TempDir::new().unwrap();
    let one = write(&dir, "one.json", &format!(r#"{{{SQUARE}, "function": {{"terms": [{{"exponents": [], "coeff": 1.0}}]}}}}"#));
    let out = qdesign(&["mesh-average", "--mesh", &one]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!((stdout(&out).trim().parse::<f64>().unwrap() - 1.0).abs() < 1e-12);

    // Mean of x² over the unit right triangle: (1/12) / (1/2).
    let tri = write(&dir, "tri.json", r#"{"vertices": [[0,0],[1,0],[0,1]], "simplices": [[0,1,2]]}"#);
    let f = write(&dir, "f.json", r#"{"terms": [{"exponents": [2, 0], "coeff": 1.0}]}"#);
    let out = qdesign(&["mesh-average", "--mesh", &tri, "--function", &f, "--design", "simpson"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!((stdout(&out).trim().parse::<f64>().unwrap() - 1.0 / 6.0).abs() < 1e-10);
    assert!(!stderr(&out).contains("warning"));

    // Mean of xy over the square is 1/4.
    let g = write(&dir, "g.json", r#"{"terms": [{"exponents": [1, 1], "coeff": 1.0}]}"#);
    let sq = write(&dir, "sq.json", &format!("{{{SQUARE}}}"));
    let out = qdesign(&["mesh-average", "--mesh", &sq, "--function", &g]);
    assert!((stdout(&out).trim().parse::<f64>().unwrap() - 0.25).abs() < 1e-10);
}

#[test]
fn mesh_average_warns_beyond_design_strength() {
    let dir = TempDir::new().unwrap();
    let sq = write(&dir, "sq.json", &format!("{{{SQUARE}}}"));
    let cubic = write(&dir, "c.json", r#"{"terms": [{"exponents": [3, 0], "coeff": 1.0}]}"#);
    let out = qdesign(&["mesh-average", "--mesh", &sq, "--function", &cubic]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn mesh_average_rejects_degenerate_simplices() {
    let dir = TempDir::new().unwrap();
    let mesh = write(
        &dir,
        "bad.json",
        r#"{"vertices": [[0,0],[1,0],[0,1],[2,0]], "simplices": [[0,1,2],[0,1,3]],
            "function": {"terms": [{"exponents": [1, 0], "coeff": 1.0}]}}"#,
    );
    let out = qdesign(&["mesh-average", "--mesh", &mesh]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains('1'), "{}", stderr(&out));
}
