use std::fs;
use std::process::Command;

use klcal::adversary::AdversaryKind;
use klcal::harness::{
    emit_report, read_report, run_experiment, simulate, sweep_and_fit_rate, write_csv,
    ForecasterKind, OutputFormat, RunConfig, RunRecord, SweepResult,
};
use klcal::losses::LossSpec;
use klcal::transcript::Transcript;

fn labels(t: &Transcript) -> Vec<bool> {
    t.labels().collect()
}

#[test]
fn output_files_are_deterministic_and_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::new(500, AdversaryKind::IidBernoulli(0.3));
    config.seed = 11;
    let mut bytes = Vec::new();
    for run in ["a", "b"] {
        config.output = Some(dir.path().join(run));
        let (transcript, report) = run_experiment(&config).unwrap();
        let out = dir.path().join(run);
        let text = fs::read(out.join("transcript.jsonl")).unwrap();
        assert_eq!(Transcript::read_jsonl(&text[..]).unwrap(), transcript);
        let records = read_report(&out.join("report.jsonl")).unwrap();
        assert_eq!(records, vec![RunRecord { seed: 11, report }]);
        bytes.push((text, fs::read(out.join("report.jsonl")).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn csv_reports() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "T,seed,K,metric,value\n");

    let mut config = RunConfig::new(64, AdversaryKind::IidBernoulli(0.5));
    config.losses = vec![LossSpec::squared()];
    let (_, report) = run_experiment(&config).unwrap();
    let n = report.entries().len();
    let mut buf = Vec::new();
    write_csv(&[RunRecord { seed: 0, report }], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), n + 1);
    assert!(text.lines().nth(1).unwrap().starts_with("64,0,2,cal_1,"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/report.csv");
    emit_report(&[], OutputFormat::Csv, &path).unwrap();
    assert_eq!(fs::read_to_string(path).unwrap(), "T,seed,K,metric,value\n");
}

#[test]
fn oblivious_labels_do_not_depend_on_the_forecaster() {
    for adversary in [
        AdversaryKind::IidBernoulli(0.4),
        AdversaryKind::even_drift(300, vec![0.9, 0.1]).unwrap(),
    ] {
        let mut config = RunConfig::new(300, adversary);
        config.seed = 5;
        let bm = simulate(&config).unwrap();
        config.k = Some(3);
        let bm_small = simulate(&config).unwrap();
        config.forecaster = ForecasterKind::DualGame;
        let dual = simulate(&config).unwrap();
        assert_eq!(labels(&bm), labels(&bm_small));
        assert_eq!(labels(&bm), labels(&dual));
    }
}

#[test]
fn parallel_sweep_matches_serial_runs() {
    let mut base = RunConfig::new(64, AdversaryKind::even_drift(64, vec![0.3, 0.6]).unwrap());
    base.losses = vec![LossSpec::log()];
    let horizons = [64, 128, 256, 512];
    let seeds: Vec<u64> = (0..5).collect();
    let sweep = sweep_and_fit_rate(&base, &horizons, &seeds, "pklcal").unwrap();
    assert_eq!(sweep.runs.len(), 20);
    let mut i = 0;
    for &t in &horizons {
        for &seed in &seeds {
            let mut c = base.clone();
            c.horizon = t;
            c.seed = seed;
            c.adversary = AdversaryKind::even_drift(t, vec![0.3, 0.6]).unwrap();
            let (_, report) = run_experiment(&c).unwrap();
            assert_eq!(sweep.runs[i], RunRecord { seed, report });
            i += 1;
        }
    }
    assert!(sweep.fit.slope.is_finite());
}

#[test]
fn sweep_preconditions() {
    let base = RunConfig::new(64, AdversaryKind::IidBernoulli(0.5));
    let seeds: Vec<u64> = (0..5).collect();
    assert!(sweep_and_fit_rate(&base, &[64, 128, 256], &seeds, "pklcal").is_err());
    assert!(sweep_and_fit_rate(&base, &[64, 128, 256, 512], &seeds[..4], "pklcal").is_err());
    assert!(sweep_and_fit_rate(&base, &[64, 128, 256, 512], &seeds, "nope").is_err());
    // Zero means cannot be put on a log scale.
    let (_, report) = run_experiment(&base).unwrap();
    let records: Vec<RunRecord> = [64, 128, 256, 512]
        .into_iter()
        .map(|t| {
            let mut r = report.clone();
            r.horizon = t;
            r.cal_2 = 0.0;
            RunRecord { seed: 0, report: r }
        })
        .collect();
    assert!(matches!(
        SweepResult::fit_metric(&records, "cal_2"),
        Err(klcal::Error::DegenerateFit(_))
    ));
    let (_, fit) = SweepResult::fit_metric(&records, "horizon").unwrap();
    assert!((fit.slope - 1.0).abs() < 1e-12);
}

#[test]
fn long_iid_run_satisfies_pinsker() {
    let mut config = RunConfig::new(1 << 14, AdversaryKind::IidBernoulli(0.5));
    config.losses = vec![LossSpec::log()];
    let (t, report) = run_experiment(&config).unwrap();
    assert_eq!(t.grid().k(), 12);
    assert!(report.pklcal.is_finite());
    assert!(report.pklcal >= report.pcal_2);
}

fn klcal_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_klcal"))
}

#[test]
fn cli_run_with_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "t = 200\nadversary = \"drift\"\nadversary_param = \"0.1,0.9\"\nseed = 1\nlosses = \"squared,log\"\nformat = \"csv\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = klcal_bin()
        .args(["--config", cfg.to_str().unwrap(), "run", "--seed", "4", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("200,4,"));
    assert!(out.join("transcript.jsonl").exists());

    let stdout = klcal_bin()
        .args(["run", "--t", "50", "--k", "4", "--adversary", "iid", "--adversary-param", "0.7"])
        .output()
        .unwrap();
    assert!(stdout.status.success());
    let record: RunRecord = serde_json::from_slice(&stdout.stdout).unwrap();
    assert_eq!((record.report.horizon, record.report.k), (50, 4));
}

#[test]
fn cli_sweep_writes_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let status = klcal_bin()
        .args([
            "sweep", "--t-grid", "2^6..2^9", "--seeds", "5", "--adversary", "iid",
            "--losses", "log", "--metric", "pcal_2", "--format", "jsonl", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_report(&out.join("sweep.jsonl")).unwrap().len(), 20);
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["metric"], "pcal_2");
    assert!(fit["slope"].as_f64().unwrap().is_finite());
}

#[test]
fn cli_failures_exit_nonzero() {
    for args in [
        vec!["run", "--t", "1"],
        vec!["run", "--t", "100", "--k", "1"],
        vec!["run", "--t", "100", "--adversary", "nope"],
        vec!["run", "--t", "100", "--losses", "cubic"],
        vec!["run", "--t", "100", "--forecaster", "dualgame", "--adversary", "anti-mode"],
        vec!["run", "--adversary", "file", "--adversary-param", "/nonexistent/labels", "--t", "5"],
        vec!["sweep", "--t-grid", "64,128", "--seeds", "5"],
        vec!["run"],
    ] {
        let status = klcal_bin().args(&args).output().unwrap().status;
        assert!(!status.success(), "{args:?}");
    }
}
