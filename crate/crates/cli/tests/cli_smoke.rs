//! Per-subcommand behavior: spec'd outputs, validation errors, and the
//! benchmark's variance study.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slicedot"))
}

fn run_json(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn expect_exit(dir: &Path, args: &[&str], code: i32) -> String {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(code),
        "{args:?}: stderr {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn dist_same_file_is_zero_and_translate_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("a.csv"), "0,0\n1,0\n0,1\n1,1\n").unwrap();
    std::fs::write(dir.join("b.csv"), "0,1\n1,1\n0,2\n1,2\n").unwrap();
    let same = run_json(dir, &["dist", "--a", "a.csv", "--b", "a.csv", "--estimator", "mc", "--projections", "16"]);
    assert_eq!(same["value"], 0.0);
    // Translate by t = (0, 1) in d = 2: fast gives ||t|| / sqrt(d) = 0.7071.
    let fast = run_json(dir, &["dist", "--a", "a.csv", "--b", "b.csv", "--estimator", "fast"]);
    let v = fast["value"].as_f64().unwrap();
    assert!((v - 0.7071).abs() < 5e-5, "fast value {v}");
}

#[test]
fn dist_invalid_csv_names_row() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("bad.csv"), "1,2\n3,oops\n").unwrap();
    std::fs::write(dir.join("ok.csv"), "1,2\n").unwrap();
    let stderr = expect_exit(dir, &["dist", "--a", "bad.csv", "--b", "ok.csv"], 2);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn cv_rejects_p_not_two() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("a.csv"), "0,0\n1,1\n").unwrap();
    expect_exit(
        dir,
        &["dist", "--a", "a.csv", "--b", "a.csv", "--estimator", "cv-low", "--p", "3"],
        2,
    );
}

#[test]
fn sketch_seed_mismatch_is_provenance_error() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("pts.csv"), "0.1,0.2\n0.4,-0.3\n1.5,2.0\n").unwrap();
    for (seed, out) in [("1", "s1.bin"), ("2", "s2.bin")] {
        let args = [
            "sketch", "build", "--input", "pts.csv", "--out", out, "--projections", "4",
            "--seed", seed, "--k", "16", "--dim", "2",
        ];
        run_json(dir, &args);
    }
    let stderr = expect_exit(dir, &["sketch", "query", "--a", "s1.bin", "--b", "s2.bin"], 2);
    assert!(stderr.contains("provenance"), "stderr: {stderr}");
}

#[test]
fn bench_variance_study() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_json(
        dir,
        &["bench", "--out", "bench.csv", "--l-grid", "10,64,100,1000", "--reps", "100", "--fixture-n", "32", "--seed", "3"],
    );
    let text = std::fs::read_to_string(dir.join("bench.csv")).unwrap();
    let mut per: std::collections::BTreeMap<(String, usize), Vec<f64>> = Default::default();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let est = cols[0].to_string();
        let l: usize = cols[1].parse().unwrap();
        let value: f64 = cols[3].parse().unwrap();
        per.entry((est, l)).or_default().push(value);
    }
    let var = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let mc = |l: usize| var(&per[&("mc".to_string(), l)]);
    // O(1/L): a hundredfold L increase shrinks the variance at least 5x.
    assert!(
        mc(1000) * 5.0 <= mc(10),
        "mc variance {} at L=10 vs {} at L=1000",
        mc(10),
        mc(1000)
    );
    assert!(mc(100) <= mc(10) && mc(1000) <= mc(100), "non-monotone mc variance");
    // Randomized QMC no worse than MC at L = 64 on the fixture.
    let rot = var(&per[&("qmc-rot".to_string(), 64)]);
    assert!(rot <= mc(64), "qmc-rot {} vs mc {}", rot, mc(64));
    // Deterministic estimators produce identical values every replication;
    // the variance reduces to mean-accumulation rounding.
    assert!(var(&per[&("fast".to_string(), 64)]) < 1e-28);
    assert!(var(&per[&("qmc".to_string(), 64)]) < 1e-28);
    let fast_vals = &per[&("fast".to_string(), 64)];
    assert!(fast_vals.windows(2).all(|w| w[0] == w[1]), "fast values differ");
}

fn write_ppm(path: &Path, w: usize, h: usize, pixels: &[(u8, u8, u8)]) {
    let mut bytes = format!("P6\n{w} {h}\n255\n").into_bytes();
    for &(r, g, b) in pixels {
        bytes.extend_from_slice(&[r, g, b]);
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn color_transfer_zero_iters_round_trips_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let pixels: Vec<(u8, u8, u8)> = (0..24).map(|i| ((i * 10) as u8, 255 - i as u8, 7)).collect();
    write_ppm(&dir.join("img.ppm"), 6, 4, &pixels);
    run_json(
        dir,
        &["color-transfer", "--source", "img.ppm", "--target", "img.ppm", "--out", "copy.ppm", "--iters", "0"],
    );
    assert_eq!(
        std::fs::read(dir.join("img.ppm")).unwrap(),
        std::fs::read(dir.join("copy.ppm")).unwrap()
    );
}

#[test]
fn color_transfer_moves_gray_toward_red() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let gray: Vec<(u8, u8, u8)> = (0..64)
        .map(|i| {
            let v = 60 + ((i * 2) % 120) as u8;
            (v, v, v)
        })
        .collect();
    let red: Vec<(u8, u8, u8)> = (0..64)
        .map(|i| (200 + (i % 50) as u8, 30 + (i % 40) as u8, 30))
        .collect();
    write_ppm(&dir.join("gray.ppm"), 8, 8, &gray);
    write_ppm(&dir.join("red.ppm"), 8, 8, &red);
    run_json(
        dir,
        &["color-transfer", "--source", "gray.ppm", "--target", "red.ppm", "--out", "out.ppm", "--iters", "60", "--projections", "12", "--sample", "64"],
    );
    let out = std::fs::read(dir.join("out.ppm")).unwrap();
    let raster = &out[out.len() - 64 * 3..];
    let mean_red_out: f64 =
        raster.chunks_exact(3).map(|px| px[0] as f64).sum::<f64>() / 64.0;
    let mean_red_in: f64 = gray.iter().map(|px| px.0 as f64).sum::<f64>() / 64.0;
    assert!(
        mean_red_out > mean_red_in,
        "mean red {mean_red_out} did not increase over {mean_red_in}"
    );
}

#[test]
fn color_transfer_single_pixel_reaches_target() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    write_ppm(&dir.join("one_src.ppm"), 1, 1, &[(10, 200, 30)]);
    write_ppm(&dir.join("one_tgt.ppm"), 1, 1, &[(240, 20, 100)]);
    run_json(
        dir,
        &["color-transfer", "--source", "one_src.ppm", "--target", "one_tgt.ppm", "--out", "one_out.ppm", "--iters", "200", "--projections", "8"],
    );
    let out = std::fs::read(dir.join("one_out.ppm")).unwrap();
    let px = &out[out.len() - 3..];
    for (got, want) in px.iter().zip(&[240u8, 20, 100]) {
        assert!(
            (*got as i16 - *want as i16).abs() <= 1,
            "pixel {px:?} vs target"
        );
    }
}

#[test]
fn spiral_slicer_requires_dimension_three() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("a.csv"), "0,0\n1,1\n").unwrap();
    expect_exit(
        dir,
        &["dist", "--a", "a.csv", "--b", "a.csv", "--slicer", "spiral"],
        2,
    );
}

#[test]
fn mmot_identical_marginals_zero() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    std::fs::write(dir.join("a.csv"), "0.5,0.25\n1.5,-0.75\n").unwrap();
    let v = run_json(dir, &["mmot", "--inputs", "a.csv,a.csv,a.csv", "--projections", "8"]);
    // Barycentric weights 1/3 are inexact in binary, leaving a residue at
    // the squared-rounding scale.
    assert!(v["value"].as_f64().unwrap().abs() < 1e-30);
}
