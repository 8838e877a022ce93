use std::fs;
use std::path::Path;
use std::process::Command;

use pa_sim::cli::{
    EXIT_CONFIG, EXIT_OK, EXIT_UNREACHABLE, FIG2_FILE, FIG3_FILE, FIG4_FILE, FIG5_FILE, FIG7_FILE,
};
use pa_sim::config::{Fig4Policy, Mode, ScenarioConfig};
use pa_sim::output::MANIFEST_FILE;
use proptest::prelude::*;

const SMALL: &str = r#"{
  "speed_grid_kmh": [116.0, 126.0, 2.5],
  "fig3_lengths": [50, 300],
  "fig3_sigmas": [0.1, 0.5],
  "fig4_snrs_db": [0.0, 10.0],
  "error_draws": 2000,
  "arrays_wavelengths": [[1.5], [1.6, 1.5, 1.4]]
}"#;

fn pa_sim(args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_pa-sim"))
        .args(args)
        .output()
        .expect("binary runs")
        .status;
    status.code().expect("exit code")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn reproduce_all_writes_every_file_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let code = pa_sim(&[
        "reproduce-all",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "11",
    ]);
    assert_eq!(code, EXIT_OK);

    let files = [FIG2_FILE, FIG3_FILE, FIG4_FILE, FIG5_FILE, FIG7_FILE];
    for file in files {
        let text = read(&out, file);
        assert!(!text.contains('\r'), "{file}");
        assert!(text.starts_with("# experiment: "), "{file}");
        assert!(text.contains("# seed = 11\n"), "{file}");
        assert!(text.contains("# snr_db = 20.0\n"), "{file}");
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        let header: Vec<&str> = body[0].split(',').collect();
        assert_eq!(*header.last().unwrap(), "seed", "{file}");
        assert!(body.len() > 1, "{file}");
        for row in &body[1..] {
            let cells: Vec<&str> = row.split(',').collect();
            assert_eq!(cells.len(), header.len(), "{file}: {row}");
            assert_eq!(*cells.last().unwrap(), "11", "{file}: {row}");
        }
    }

    let manifest: serde_json::Value = serde_json::from_str(&read(&out, MANIFEST_FILE)).unwrap();
    assert_eq!(manifest["command"], "reproduce-all");
    assert_eq!(manifest["unreachable_target"], false);
    let listed: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["file"].as_str().unwrap())
        .collect();
    assert_eq!(listed, files);
    let resolved: ScenarioConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(resolved.seed, 11);
    assert_eq!(resolved.speed_grid_kmh, [116.0, 126.0, 2.5]);
}

#[test]
fn fig2_columns_and_constant_baselines() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let code = pa_sim(&[
        "fig2-required-snr",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = read(&out, FIG2_FILE);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    // 5 grid points plus the matched speed
    assert_eq!(rows.len(), 6);
    for name in ["snr_db_full_csit", "snr_db_no_csit"] {
        let c = col(name);
        assert!(rows.iter().all(|r| r[c] == rows[0][c]), "{name}");
    }
    assert!(rows.iter().all(|r| r[col("unreachable")] == "false"));
    assert!(!out.join(FIG3_FILE).exists());
}

#[test]
fn unreachable_target_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let code = pa_sim(&[
        "fig2-required-snr",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--target-throughput-npcu",
        "30",
    ]);
    assert_eq!(code, EXIT_UNREACHABLE);
    let text = read(&out, FIG2_FILE);
    assert!(text.contains(",60,") || text.contains(",60.0,"));
    assert!(text.contains(",true,"));
    let manifest: serde_json::Value = serde_json::from_str(&read(&out, MANIFEST_FILE)).unwrap();
    assert_eq!(manifest["unreachable_target"], true);
}

#[test]
fn bad_configs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let cases = [
        r#"{"no_such_key": 1}"#,
        r#"{"carrier_frequency": -1}"#,
        r#"{"speed_grid_kmh": [140, 100, 1]}"#,
        r#"{"fig4_rate_policy": "fixed"}"#,
        "not json",
    ];
    for text in cases {
        let cfg = write_config(tmp.path(), text);
        assert_eq!(
            pa_sim(&["fig3-fbl-throughput", "--config", &cfg, "--out", out]),
            EXIT_CONFIG,
            "{text}"
        );
    }
    let missing = tmp.path().join("missing.json");
    assert_eq!(
        pa_sim(&[
            "fig3-fbl-throughput",
            "--config",
            missing.to_str().unwrap(),
            "--out",
            out
        ]),
        EXIT_CONFIG
    );
    assert_eq!(
        pa_sim(&["fig3-fbl-throughput", "--jobs", "0", "--out", out]),
        EXIT_CONFIG
    );
    assert_eq!(pa_sim(&["fig8"]), EXIT_CONFIG);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let code = pa_sim(&[
        "fig3-fbl-throughput",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--fig3-lengths",
        "100",
        "--fig3-sigmas",
        "0.2",
    ]);
    assert_eq!(code, EXIT_OK);
    let text = read(&out, FIG3_FILE);
    assert!(text.contains("# fig3_lengths = [100]\n"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("100,0.2,"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = |name: &str, jobs: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let mut args = vec![
            "reproduce-all",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            jobs,
        ];
        args.extend_from_slice(extra);
        assert_eq!(pa_sim(&args), EXIT_OK);
        out
    };
    for extra in [&[][..], &["--mc", "--mc-draws", "500"][..]] {
        let a = run("a", "1", extra);
        let b = run("b", "3", extra);
        for file in [
            FIG2_FILE,
            FIG3_FILE,
            FIG4_FILE,
            FIG5_FILE,
            FIG7_FILE,
            MANIFEST_FILE,
        ] {
            assert_eq!(
                fs::read(a.join(file)).unwrap(),
                fs::read(b.join(file)).unwrap()
            );
        }
    }
}

#[test]
fn different_seeds_change_monte_carlo_columns_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = |seed: &str| {
        let out = tmp.path().join(seed);
        let code = pa_sim(&[
            "fig4-fbl-error",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(code, EXIT_OK);
        read(&out, FIG4_FILE)
    };
    let a = run("1");
    let b = run("2");
    assert_ne!(a, b);
    let grid = |t: &str| -> Vec<String> {
        t.lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(grid(&a), grid(&b));
}

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        (1e8..1e10f64, 1e-4..1e-1f64, -10.0..40.0f64, any::<u64>()),
        (
            proptest::option::of(0.0..10.0f64),
            1u64..5000,
            prop::collection::vec(0.5..3.0f64, 1..4),
            any::<bool>(),
        ),
        (
            prop::collection::vec(prop::collection::vec(0.5..3.0f64, 1..6), 1..4),
            prop::collection::vec(-0.3..0.3f64, 1..3),
            prop::collection::vec(-10.0..40.0f64, 1..5),
            proptest::option::of(0.0..5.0f64),
        ),
    )
        .prop_map(
            |((f, t, snr, seed), (target, l, seps, fbl), (arrays, shifts, snrs, rate))| {
                ScenarioConfig {
                    carrier_frequency: f,
                    processing_time: t,
                    snr_db: snr,
                    seed,
                    target_throughput_npcu: target,
                    codeword_length: l,
                    separations_wavelengths: seps,
                    mode: if fbl { Mode::Fbl } else { Mode::Outage },
                    fig4_rate_policy: if rate.is_some() {
                        Fig4Policy::Fixed
                    } else {
                        Fig4Policy::OutageOptimal
                    },
                    fixed_rate: rate,
                    arrays_wavelengths: arrays,
                    middle_shifts_wavelengths: shifts,
                    fig4_snrs_db: snrs,
                    ..ScenarioConfig::default()
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trips(cfg in arb_config()) {
        let text = cfg.to_json();
        let back = ScenarioConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}
