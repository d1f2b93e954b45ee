use std::path::Path;
use std::process::{Command, Output};

use msdehaze::codec::{load_image, save_image};
use msdehaze::synth::MetricsReport;
use msdehaze::{PipelineConfig, PlanarImage};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msdehaze"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn hazy_fixture(dir: &Path) {
    let out = bin(
        dir,
        &[
            "synth", "--out", "z.ppm", "--truth", "i.ppm", "--tmap", "t.pgm", "--width", "64",
            "--height", "48", "--seed", "2",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn dehaze_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    hazy_fixture(dir.path());
    let out = bin(
        dir.path(),
        &[
            "dehaze",
            "--input",
            "z.ppm",
            "--output",
            "i_hat.ppm",
            "--save-transmission",
            "t_hat.pgm",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let restored = load_image(dir.path().join("i_hat.ppm")).unwrap();
    assert_eq!(
        (restored.width(), restored.height(), restored.channels()),
        (64, 48, 3)
    );
    assert_eq!(
        load_image(dir.path().join("t_hat.pgm")).unwrap().channels(),
        1
    );
    // Timings are logged as JSON lines.
    for line in stderr(&out).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["ms"].is_number());
    }
}

#[test]
fn eta_zero_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    hazy_fixture(dir.path());
    let out = bin(
        dir.path(),
        &[
            "dehaze", "--input", "z.ppm", "--output", "x.ppm", "--eta", "0",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "invalid_parameter");
    assert!(v["message"].as_str().unwrap().contains("eta"));
    assert!(!dir.path().join("x.ppm").exists());
}

#[test]
fn unknown_flag_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        dir.path(),
        &["dehaze", "--input", "a.ppm", "--output", "b.ppm", "--bogus"],
    );
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"], "usage");

    let out = bin(
        dir.path(),
        &["dehaze", "--input", "missing.ppm", "--output", "b.ppm"],
    );
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(v["error"], "unreadable");

    assert_eq!(bin(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn eval_on_identical_images() {
    let dir = tempfile::tempdir().unwrap();
    hazy_fixture(dir.path());
    let out = bin(
        dir.path(),
        &[
            "eval",
            "--clean",
            "i.ppm",
            "--restored",
            "i.ppm",
            "--json",
            "r.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    let report: MetricsReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.mae, 0.0);
    assert_eq!(report.psnr_db, 99.0);
    for key in [
        "psnr_db",
        "mae",
        "transmission_mae",
        "sky_noise_gain",
        "input_mae",
        "input_psnr_db",
        "stage_timings_ms",
    ] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn eval_sky_gain_needs_nonempty_mask() {
    let dir = tempfile::tempdir().unwrap();
    hazy_fixture(dir.path());
    save_image(&PlanarImage::new(64, 48, 1), dir.path().join("empty.pgm")).unwrap();
    let out = bin(
        dir.path(),
        &[
            "eval",
            "--clean",
            "i.ppm",
            "--restored",
            "z.ppm",
            "--mask",
            "empty.pgm",
            "--reference",
            "z.ppm",
            "--noise",
            "0.01",
            "--json",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("empty_mask"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    hazy_fixture(dir.path());
    let cfg = PipelineConfig {
        eta: 0.125,
        levels: 2,
        ..Default::default()
    };
    std::fs::write(dir.path().join("c.txt"), cfg.serialize()).unwrap();

    let out = bin(
        dir.path(),
        &[
            "inspect",
            "--input",
            "z.ppm",
            "--out-dir",
            "a",
            "--config",
            "c.txt",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let used =
        PipelineConfig::parse(&std::fs::read_to_string(dir.path().join("a/config.txt")).unwrap())
            .unwrap();
    assert_eq!(used, cfg);

    let out = bin(
        dir.path(),
        &[
            "inspect",
            "--input",
            "z.ppm",
            "--out-dir",
            "b",
            "--config",
            "c.txt",
            "--eta",
            "0.25",
            "--bin-step",
            "pi/120",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let used =
        PipelineConfig::parse(&std::fs::read_to_string(dir.path().join("b/config.txt")).unwrap())
            .unwrap();
    assert_eq!(
        (used.eta, used.levels, used.bin_step),
        (0.25, 2, std::f64::consts::PI / 120.0)
    );

    std::fs::write(dir.path().join("bad.txt"), "eta = 0.2\nwhat = 3\n").unwrap();
    let out = bin(
        dir.path(),
        &[
            "dehaze", "--input", "z.ppm", "--output", "x.ppm", "--config", "bad.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn inspect_dumps_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    hazy_fixture(dir.path());
    let out = bin(
        dir.path(),
        &[
            "--threads",
            "2",
            "inspect",
            "--input",
            "z.ppm",
            "--out-dir",
            "dump",
            "--levels",
            "2",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let d = dir.path().join("dump");
    for f in [
        "gaussian_0.png",
        "gaussian_1.png",
        "gaussian_2.png",
        "laplacian_0.png",
        "laplacian_1.png",
        "t_initial.png",
        "t_averaged.png",
        "t_refined.png",
        "t_level_0.png",
        "t_level_2.png",
        "guidance.png",
        "restored.png",
        "airlight.txt",
        "config.txt",
        "timings.json",
    ] {
        assert!(d.join(f).exists(), "{f}");
    }
    let a: Vec<f64> = std::fs::read_to_string(d.join("airlight.txt"))
        .unwrap()
        .trim()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(a.len() == 3 && a.iter().all(|v| *v > 0.0 && *v <= 1.0));
    let timings: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("timings.json")).unwrap()).unwrap();
    assert!(timings["transmission"].is_number());
}

#[test]
fn synth_constant_t_and_airlight_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        dir.path(),
        &[
            "synth",
            "--out",
            "z.png",
            "--truth",
            "i.png",
            "--tmap",
            "t.pgm",
            "--constant-t",
            "0.5",
            "--airlight",
            "1,1,1",
            "--width",
            "40",
            "--height",
            "32",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let t = load_image(dir.path().join("t.pgm")).unwrap();
    assert!(t.data().iter().all(|v| *v == 128.0 / 255.0));
    let out = bin(
        dir.path(),
        &[
            "dehaze",
            "--input",
            "z.png",
            "--output",
            "r.png",
            "--airlight",
            "1,1,1",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = bin(
        dir.path(),
        &[
            "dehaze",
            "--input",
            "z.png",
            "--output",
            "r.png",
            "--airlight",
            "1,1",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = bin(dir.path(), &["synth", "--out", "z.png", "--layers", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn in_process_entry_point() {
    assert_eq!(msdehaze::cli::run(["msdehaze", "--version"]), 0);
    assert_eq!(msdehaze::cli::run(["msdehaze", "dehaze"]), 1);
    assert_eq!(
        msdehaze::cli::run([
            "msdehaze",
            "eval",
            "--clean",
            "x",
            "--restored",
            "y",
            "--json",
            "z",
            "--tmap-true",
            "t"
        ]),
        1
    );
}
