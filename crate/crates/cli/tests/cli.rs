use std::collections::BTreeMap;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lcasimir"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

struct Csv {
    header: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Self {
        let mut lines = text.lines();
        let header = lines.next().expect("header").to_string();
        let columns = lines.next().expect("columns").split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Self { header, columns, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn f(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().expect("number")
    }

    fn hash(&self) -> &str {
        let rest = self.header.strip_prefix("# config-hash=").expect("hash prefix");
        rest.split(' ').next().unwrap()
    }
}

#[test]
fn pp_headline_point() {
    let o = run(&["pp"]);
    assert_eq!(o.status.code(), Some(0));
    let t = Csv::parse(&stdout(&o));
    assert_eq!(t.rows.len(), 1);
    assert!((t.f(0, "rho") - 0.814).abs() < 0.005);
    assert_eq!(t.rows[0][t.col("converged")], "1");
}

#[test]
fn pp_perfect_point() {
    let o = run(&["pp", "--perfect", "--sweep", "kc:1.1519:1.1519:1"]);
    assert_eq!(o.status.code(), Some(0));
    let t = Csv::parse(&stdout(&o));
    assert!((t.f(0, "rho") - 0.819).abs() < 0.005);
    assert_eq!(t.rows[0][t.col("kp_l")], "inf");
}

#[test]
fn flat_plates_give_rho_one() {
    let o = run(&["pp", "--sweep", "kc:0:0:1"]);
    assert_eq!(o.status.code(), Some(0));
    let t = Csv::parse(&stdout(&o));
    assert_eq!(t.f(0, "rho"), 1.0);
    assert_eq!(t.f(0, "gamma_pp"), 0.0);
}

#[test]
fn csv_layout_is_fixed() {
    let o = run(&["pp", "--sweep", "kc:0.5:1:2"]);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let t = Csv::parse(&text);
    assert!(t.header.starts_with("# config-hash="));
    assert!(t.header.contains(" units="));
    assert_eq!(t.hash().len(), 16);
    assert_eq!(t.columns[0], "kc_l");
    assert_eq!(t.columns.last().unwrap(), "converged");
    for row in &t.rows {
        assert_eq!(row.len(), t.columns.len());
    }
}

#[test]
fn output_ignores_locale() {
    let args = ["pp", "--sweep", "kc:0.5:1:2"];
    let plain = stdout(&run(&args));
    let german = bin().args(args).env("LC_ALL", "de_DE.UTF-8").env("LANG", "de_DE.UTF-8").output().unwrap();
    assert_eq!(stdout(&german), plain);
}

#[test]
fn hash_follows_physics_only() {
    let base = Csv::parse(&stdout(&run(&["pp"]))).hash().to_string();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = run(&["pp", "--jobs", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(Csv::parse(&written).hash(), base);
    for changed in [["--L", "230"], ["--lambda-c", "1300"], ["--rel-tol", "1e-6"], ["--a1", "5"]] {
        let mut args = vec!["pp"];
        args.extend(changed);
        assert_ne!(Csv::parse(&stdout(&run(&args))).hash(), base, "{changed:?}");
    }
}

#[test]
fn serial_and_parallel_tables_match() {
    let args = ["pp", "--sweep", "kc:0.2:3:6"];
    let mut a = args.to_vec();
    a.extend(["--jobs", "1"]);
    let mut b = args.to_vec();
    b.extend(["--jobs", "4"]);
    assert_eq!(stdout(&run(&a)), stdout(&run(&b)));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "L = 300.0\nperfect = true\nsweep = \"kc:1:2:2\"\n").unwrap();
    let o = run(&["pp", "--config", path.to_str().unwrap(), "--L", "250"]);
    assert_eq!(o.status.code(), Some(0));
    let t = Csv::parse(&stdout(&o));
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.f(0, "l_nm"), 250.0);
    assert_eq!(t.rows[0][t.col("kp_l")], "inf");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "radius_um = 3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["pp", "--sweep", "kc:2:1:3"],
        vec!["pp", "--sweep", "speed:1:2:3"],
        vec!["pp", "--L", "0"],
        vec!["ps"],
        vec!["ps", "--radius", "100", "--offset", "300"],
        vec!["pp", "--config", bad_cfg.to_str().unwrap()],
        vec!["figure", "fig9"],
        vec!["validate", "--criterion", "15"],
        vec!["pp", "--jobs", "0"],
        vec!["nonsense"],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn json_records_and_config_echo() {
    let o = run(&["ps", "--radius", "100", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["geometry"], "ps");
    assert_eq!(v["config"]["radius_um"], 100.0);
    assert_eq!(v["config"]["config_hash"].as_str().unwrap().len(), 16);
    let recs = v["records"].as_array().unwrap();
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    let rho = r["rho_ps"].as_f64().unwrap();
    let ratio = r["gamma_ps"].as_f64().unwrap() / r["gamma_ps_pfa"].as_f64().unwrap();
    assert!((rho - ratio).abs() < 1e-12);
    assert!((rho - 0.72).abs() < 0.01);
    assert_eq!(r["converged"], true);
    let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    assert_eq!(keys.first().unwrap().as_str(), "l_nm");
}

#[test]
fn ps_offset_column_is_scattering_at_shifted_gap() {
    let o = run(&["ps", "--radius", "100", "--offset", "20", "--sweep", "L:220:240:2"]);
    let t = Csv::parse(&stdout(&o));
    // With a 20 nm step, the offset value at 240 nm is the plain value at 220 nm.
    assert_eq!(t.f(1, "gamma_ps_offset"), t.f(0, "gamma_ps"));
}

#[test]
fn validate_pass_and_negative_control() {
    let ok = run(&["validate", "--criterion", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    let line = stdout(&ok);
    assert!(line.starts_with("[PASS] 05 specular kernel collapse"), "{line}");

    let bad = run(&["validate", "--criterion", "2", "--corrupt", "2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).starts_with("[FAIL] 02 rho perfect"));
}

#[test]
fn validate_report_body_is_reproducible() {
    let strip = |o: Output| -> Vec<String> {
        stdout(&o)
            .lines()
            .map(|l| l.rsplit_once(" (").expect("timing suffix").0.to_string())
            .collect()
    };
    let args = ["validate", "--criterion", "1", "--criterion", "2", "--criterion", "5"];
    assert_eq!(strip(run(&args)), strip(run(&args)));
}

fn figure(name: &str, points: &str) -> Csv {
    let o = run(&["figure", name, "--points", points]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    Csv::parse(&stdout(&o))
}

#[test]
fn fig2_decays_from_one_toward_asymptote() {
    let t = figure("fig2", "12");
    let n = t.rows.len();
    assert!((t.f(0, "rho") - 1.0).abs() < 1e-3);
    for i in 1..n {
        assert!(t.f(i, "rho") < t.f(i - 1, "rho"));
    }
    let last = t.f(n - 1, "rho") / t.f(n - 1, "rho_asymptote") - 1.0;
    assert!(last.abs() < 0.01, "{last}");
}

#[test]
fn fig3_curves_decrease_and_order_by_plasma_scale() {
    let t = figure("fig3", "10");
    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, row) in t.rows.iter().enumerate() {
        curves.entry(row[t.col("kp_l")].clone()).or_default().push((t.f(i, "kc_l"), t.f(i, "rho")));
    }
    assert_eq!(curves.len(), 5);
    for c in curves.values() {
        for w in c.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
    }
    // Smaller plasma scale, larger rho, outside the rugged regime.
    let order = ["1", "2.5", "5", "10"];
    for (i, &(kc, _)) in curves["1"].iter().enumerate() {
        if kc > 5.0 {
            continue;
        }
        for w in order.windows(2) {
            assert!(curves[w[0]][i].1 > curves[w[1]][i].1, "kc_l={kc} {w:?}");
        }
    }
}

#[test]
fn fig4_plasma_alpha_below_perfect_quartic_in_rugged_regime() {
    let t = figure("fig4", "6");
    for i in 0..t.rows.len() {
        if t.f(i, "kc_l") > t.f(i, "kp_l") {
            assert!(t.f(i, "alpha") < t.f(i, "alpha_perfect_quartic"));
        }
    }
}

#[test]
fn fig6_scattering_below_pfa_and_marker_present() {
    let t = figure("fig6", "12");
    let mut marked = 0;
    for i in 0..t.rows.len() {
        assert!(t.f(i, "gamma_ps") < t.f(i, "gamma_ps_pfa"));
        if t.rows[i][t.col("experimental")] == "1" {
            marked += 1;
            assert!((t.f(i, "kc_l") - 1.1519).abs() < 1e-4);
            assert!((t.f(i, "gamma_ps_pfa") - 585.0).abs() < 1e-6);
        }
    }
    assert_eq!(marked, 1);
}

#[test]
fn fig7_offset_tracks_pfa_better() {
    let t = figure("fig7", "5");
    for i in 0..t.rows.len() {
        let pfa = t.f(i, "gamma_ps_pfa");
        let plain = (t.f(i, "gamma_ps") / pfa - 1.0).abs();
        let shifted = (t.f(i, "gamma_ps_offset") / pfa - 1.0).abs();
        assert!(shifted < plain);
        assert!(shifted < 0.1);
    }
}

#[test]
fn interrupt_writes_completed_rows() {
    let child = bin()
        .args(["pp", "--jobs", "1", "--sweep", "kc:0.5:3:4000"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(Duration::from_millis(1500));
    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let t = Csv::parse(&stdout(&o));
    assert!(!t.rows.is_empty() && t.rows.len() < 4000, "{} rows", t.rows.len());
    assert!(String::from_utf8_lossy(&o.stderr).contains("interrupted"));
}
