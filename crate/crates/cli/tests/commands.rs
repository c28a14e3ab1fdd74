use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ammfee(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ammfee"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_fa_with_defaults() {
    let tmp = TempDir::new().unwrap();
    let out = ammfee(&["solve-fa", "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dir = tmp.path().join("o");

    let (header, rows) = read_csv(&dir.join("grid.csv"));
    assert_eq!(header, ["i", "y", "phi_y", "z_marginal", "z_sell", "z_buy", "delta_sell", "delta_buy"]);
    assert_eq!(rows.len(), 41);
    // Top of the grid cannot sell, bottom cannot buy.
    assert!(rows[40][4].is_empty() && rows[40][6].is_empty());
    assert!(rows[0][5].is_empty() && rows[0][7].is_empty());
    assert_eq!(rows[20][0], "0");
    assert_eq!(rows[20][1], "1000");

    let (header, rows) = read_csv(&dir.join("fees_fa.csv"));
    assert_eq!(header, ["t", "i", "y", "fee_sell", "fee_buy"]);
    assert_eq!(rows.len(), 1001 * 41);
    let end_center = rows.iter().find(|r| r[0] == "1" && r[1] == "0").unwrap();
    let sell: f64 = end_center[3].parse().unwrap();
    assert!((sell - 0.009997499374686004).abs() < 1e-15);

    let (header, rows) = read_csv(&dir.join("value_fa.csv"));
    assert_eq!(header, ["t", "i", "y", "w", "g"]);
    for r in rows.iter().filter(|r| r[0] == "1") {
        assert_eq!((r[3].as_str(), r[4].as_str()), ("1", "0"));
    }
}

#[test]
fn solve_sa_writes_coefficients() {
    let tmp = TempDir::new().unwrap();
    let out = ammfee(&["solve-sa", "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = read_csv(&tmp.path().join("o/coeffs_sa.csv"));
    assert_eq!(header, ["t", "A", "b0", "b1", "c0", "c1", "c2"]);
    assert_eq!(rows.len(), 1001);
    assert_eq!(rows.last().unwrap()[1..], ["0", "0", "0", "0", "0", "0"]);
    let (header, _) = read_csv(&tmp.path().join("o/fees_sa.csv"));
    assert_eq!(header, ["t", "y", "s", "fee_sell", "fee_buy"]);
}

#[test]
fn limits_shrink_with_k() {
    let tmp = TempDir::new().unwrap();
    let out = ammfee(&["limits", "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = read_csv(&tmp.path().join("o/limits_summary.csv"));
    assert_eq!(header, ["solver", "k", "max_gap", "limit_scale"]);
    for solver in ["fa", "sa"] {
        let gaps: Vec<f64> = rows.iter().filter(|r| r[0] == solver).map(|r| r[2].parse().unwrap()).collect();
        assert_eq!(gaps.len(), 3);
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{solver}: {gaps:?}");
    }
}

#[test]
fn simulate_small_table_and_path_dump() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sim]\nn_paths = 50\nn_steps = 200\nrecord_paths = true\nk_values = [2.0]\nlambda_values = [100.0]\n",
    );
    let out = ammfee(&["simulate", "--config", &cfg, "--out-dir", "o", "--seed", "9"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = read_csv(&tmp.path().join("o/table.csv"));
    assert_eq!(
        header,
        ["strategy", "k", "lambda", "fees_mean", "fees_se", "sell_mean", "buy_mean", "qv_mean", "n_paths", "n_steps", "seed"]
    );
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["optimal_fa", "linear_fa", "constant"]);
    assert!(rows.iter().all(|r| r[8] == "50" && r[9] == "200" && r[10] == "9"));

    let (header, paths) = read_csv(&tmp.path().join("o/paths_optimal_fa_k2_lambda100.csv"));
    assert_eq!(header, ["path_id", "fees", "n_sell", "n_buy", "qv", "terminal_index"]);
    assert_eq!(paths.len(), 50);
    let mean = paths.iter().map(|r| r[1].parse::<f64>().unwrap()).sum::<f64>() / 50.0;
    let reported: f64 = rows[0][3].parse().unwrap();
    assert!((mean - reported).abs() <= 1e-12 * reported.abs());
}

#[test]
fn flag_overrides_apply() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[sim]\nk_values = [2.0]\nlambda_values = [50.0]\nstrategies = [\"constant\"]\n");
    let run = |seed: &str, dir: &str| {
        let out = ammfee(&["simulate", "--config", &cfg, "--out-dir", dir, "--paths", "20", "--steps", "100", "--seed", seed], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        read_csv(&tmp.path().join(dir).join("table.csv")).1
    };
    let a = run("1", "a");
    let b = run("2", "b");
    assert_eq!((a[0][8].as_str(), a[0][9].as_str()), ("20", "100"));
    assert_ne!(a[0][3], b[0][3]);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sim]\nn_paths = 40\nn_steps = 100\nk_values = [1.0]\nlambda_values = [150.0]\n[figures]\nphi_values = [0.0, 0.1]\n",
    );
    for dir in ["a", "b"] {
        for cmd in ["figures", "simulate"] {
            let out = ammfee(&[cmd, "--config", &cfg, "--out-dir", dir], tmp.path());
            assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        }
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 11, "{names:?}");
    for name in names {
        let a = fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs between runs");
    }
}

#[test]
fn figure_files_cover_every_figure() {
    let tmp = TempDir::new().unwrap();
    let out = ammfee(&["figures", "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let dir = tmp.path().join("o");
    for name in [
        "fig_fa_fees.csv",
        "fig_fa_k.csv",
        "fig_fa_phi_k2.csv",
        "fig_fa_phi_k0.1.csv",
        "fig_fa_time_k2.csv",
        "fig_fa_time_k0.1.csv",
        "fig_sa_fees.csv",
        "fig_sa_vs_fa.csv",
        "fig_sa_small_k.csv",
        "fig_sa_phi.csv",
        "fig_sa_price.csv",
        "fig_value.csv",
    ] {
        let (header, rows) = read_csv(&dir.join(name));
        assert!(!rows.is_empty(), "{name} is empty");
        assert!(rows.iter().all(|r| r.len() == header.len()));
    }
    let (_, rows) = read_csv(&dir.join("fig_value.csv"));
    for r in &rows {
        let (fa, sa, diff): (f64, f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap(), r[5].parse().unwrap());
        assert_eq!(diff, sa - fa);
    }
    let (_, rows) = read_csv(&dir.join("fig_fa_k.csv"));
    let ks: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ks.len(), 4);
}

#[test]
fn zero_k_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "[market]\nk = 0.0\n");
    let out = ammfee(&["solve-fa", "--config", &cfg, "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("k must be > 0"), "{msg}");
    assert_eq!(msg.trim().lines().count(), 1);
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        "[market]\nkappa = 1.0\n",
        "[extra]\n",
        "[grid]\nkind = \"hexagonal\"\n",
        "[sim]\nstrategies = [\"optimal_sa\"]\n",
        "[sim]\nn_paths = 0\n",
        "[market]\nsigma = -0.1\n",
        "[solver]\node_steps = 10\n",
        "not toml at all",
    ];
    for text in cases {
        let cfg = write_config(tmp.path(), text);
        let out = ammfee(&["simulate", "--config", &cfg, "--out-dir", "o"], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{text}: {}", stderr(&out));
        let msg = stderr(&out);
        assert!(msg.starts_with("ammfee: config error"), "{msg}");
        assert_eq!(msg.trim_end().lines().count(), 1, "{msg}");
    }
    let out = ammfee(&["solve-fa", "--config", "missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_and_help() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(ammfee(&[], tmp.path()).status.code(), Some(2));
    assert_eq!(ammfee(&["bogus"], tmp.path()).status.code(), Some(2));
    assert_eq!(ammfee(&["solve-fa", "--paths", "many"], tmp.path()).status.code(), Some(2));
    let help = ammfee(&["--help"], tmp.path());
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in ["solve-fa", "solve-sa", "limits", "simulate", "figures"] {
        assert!(text.contains(cmd), "{text}");
    }
}

#[test]
fn numerical_failures_exit_three() {
    let tmp = TempDir::new().unwrap();
    // A low oracle price makes every sale wildly profitable for arbitrageurs.
    let cfg = write_config(tmp.path(), "[market]\ns0 = 10.0\n");
    let out = ammfee(&["solve-fa", "--config", &cfg, "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("exceeds cap"), "{}", stderr(&out));

    let cfg = write_config(
        tmp.path(),
        "[market]\nlambda_sell = 5e4\nlambda_buy = 5e4\nhorizon = 50.0\n[solver]\node_steps = 100\n",
    );
    let out = ammfee(&["solve-sa", "--config", &cfg, "--out-dir", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("Riccati"), "{}", stderr(&out));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ammfee::RunConfig::load(&path).unwrap();
        cfg.validate().unwrap();
        n += 1;
    }
    assert!(n >= 2);
}
