use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use codenet_cli::train::METRICS_HEADER;
use codenet_cli::ExperimentConfig;

const BIN: &str = env!("CARGO_BIN_EXE_codenet");

fn codenet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn small(strategy: &str, t: usize, iterations: u64, extra: &str) -> String {
    format!(
        "[experiment]\nstrategy = {strategy}\niterations = {iterations}\ncheckpoint_period = 10\neta = 0.5\nseed = 4\n\
         eval_every = 10\nsynthetic_train = 50\nsynthetic_test = 20\n{extra}\
         [network]\nlayers = [20, 12, 8, 4]\nm = 2\nn = 2\nt = {t}\n\
         [faults]\nmodel = probabilistic\np = 0.02\nnoise = gaussian\n"
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn train(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    codenet(&args)
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}

#[test]
fn reruns_write_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.conf", &small("codenet", 1, 60, ""));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(train(&cfg, &a, &[]).status.success());
    assert!(train(&cfg, &b, &[]).status.success());
    let ma = fs::read(a.join("metrics.csv")).unwrap();
    assert_eq!(ma, fs::read(b.join("metrics.csv")).unwrap());
    let text = String::from_utf8(ma).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    assert_eq!(lines.count(), 60);

    let c = dir.path().join("c");
    assert!(train(&cfg, &c, &["--seed", "9"]).status.success());
    assert_ne!(
        fs::read(a.join("metrics.csv")).unwrap(),
        fs::read(c.join("metrics.csv")).unwrap()
    );
}

fn losses_after(path: &Path, from: u64) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse::<u64>().unwrap() > from).then(|| format!("{}:{}", f[0], f[2]))
        })
        .collect()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("run_report.json")).unwrap()).unwrap()
}

#[test]
fn resume_continues_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let full_cfg = write_config(dir.path(), "full.conf", &small("codenet", 1, 40, ""));
    let crash_cfg = write_config(dir.path(), "crash.conf", &small("codenet", 1, 25, ""));
    let (full, crash, resumed) = (
        dir.path().join("full"),
        dir.path().join("crash"),
        dir.path().join("resumed"),
    );
    assert!(train(&full_cfg, &full, &[]).status.success());
    assert!(train(&crash_cfg, &crash, &[]).status.success());
    let ck = crash.join("checkpoint.cdnt");
    let out = train(&full_cfg, &resumed, &["--resume", ck.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(report(&resumed)["resumed_from"], 20);
    assert_eq!(
        report(&resumed)["summary"]["final_loss"],
        report(&full)["summary"]["final_loss"]
    );
    assert_eq!(
        losses_after(&resumed.join("metrics.csv"), 20),
        losses_after(&full.join("metrics.csv"), 20)
    );
}

#[test]
fn report_counts_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.conf", &small("codenet", 1, 2, ""));
    assert!(train(&cfg, &dir.path().join("o"), &[]).status.success());
    let r = report(&dir.path().join("o"));
    assert_eq!(r["nodes"], 2 * 2 + 2 * (2 + 2));
    assert_eq!(r["node_accounting"]["replication_nodes"], 8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let missing = dir.path().join("missing.conf");
    assert_eq!(train(&missing, &out, &[]).status.code(), Some(3));

    let bad_key = write_config(dir.path(), "bad.conf", &small("codenet", 1, 2, "colour = red\n"));
    assert_eq!(train(&bad_key, &out, &[]).status.code(), Some(2));

    let t_uncoded = write_config(dir.path(), "t.conf", &small("uncoded", 1, 2, ""));
    let o = train(&t_uncoded, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t requires codenet"));

    let coded = write_config(dir.path(), "coded.conf", &small("codenet", 1, 12, ""));
    assert!(train(&coded, &out, &[]).status.success());
    let ck = out.join("checkpoint.cdnt");
    let rep = write_config(dir.path(), "rep.conf", &small("replication", 0, 12, ""));
    let o = train(&rep, &dir.path().join("r"), &["--resume", ck.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let mut bytes = fs::read(&ck).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 1;
    let broken = dir.path().join("broken.cdnt");
    fs::write(&broken, bytes).unwrap();
    let o = train(&coded, &dir.path().join("b"), &["--resume", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

fn curve_rows(args: &[&str]) -> Vec<Vec<f64>> {
    let mut all = vec!["model-curves"];
    all.extend_from_slice(args);
    let out = codenet(&all);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,i0_rep,i0_codenet,et_rep,et_codenet,ratio"));
    lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

/// Direct evaluation of the expected-time formula with a brute-force scan of
/// the checkpoint period.
fn best_time(lambda: f64, replication: bool) -> (u64, f64) {
    let (tf, tb, tc, m) = (1.0f64, 1000.0f64, 1000.0f64, 2000u64);
    let p0 = (-lambda).exp();
    let p1 = lambda * p0;
    let q = if replication { p0 } else { p0 + p1 };
    let c = tf * p0 + tb * (1.0 - p0);
    (1..=m)
        .map(|i0| {
            let period: f64 = (1..=i0).map(|i| c * q.powi(-(i as i32))).sum();
            (i0, m as f64 / i0 as f64 * (tc + period))
        })
        .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
}

#[test]
fn model_curves_rows() {
    assert_eq!(curve_rows(&[]).len(), 50);
    assert_eq!(
        curve_rows(&["--lambda-min", "2", "--lambda-max", "2", "--points", "1"]).len(),
        1
    );

    let rows = curve_rows(&["--lambda-min", "1", "--lambda-max", "1", "--points", "1"]);
    let r = &rows[0];
    let (rep_i0, rep) = best_time(1.0, true);
    let (cn_i0, cn) = best_time(1.0, false);
    assert_eq!((r[1] as u64, r[2] as u64), (rep_i0, cn_i0));
    assert!((r[3] - rep).abs() <= 1e-9 * rep);
    assert!((r[4] - cn).abs() <= 1e-9 * cn);
    assert!((r[5] - rep / cn).abs() <= 1e-9 * r[5]);
}

#[test]
fn model_curves_rejects_bad_range() {
    let out = codenet(&["model-curves", "--lambda-min", "3", "--lambda-max", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_codec_passes() {
    let out = codenet(&["verify-codec", "--trials", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 3);
    let single = codenet(&["verify-codec", "--k", "5", "--t", "1", "--trials", "50"]);
    assert!(single.status.success());
}
