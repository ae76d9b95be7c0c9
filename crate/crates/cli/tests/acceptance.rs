//! Acceptance criteria exercised through the binary: desk-scale image
//! inpainting quality and byte-level determinism of command outputs.

use std::path::Path;
use std::process::Command;

use tuckit::datagen::{gen_tucker, random_mask, trial_rng};
use tuckit::{io, DenseTensor};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tuckit"))
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Deterministic 64x64 stand-in for a natural-image crop: smooth color
/// gradients with a few soft blobs, values in [0, 1].
fn desk_scale_crop() -> DenseTensor {
    let n = 64usize;
    let mut img = DenseTensor::zeros(&[n, n, 3]).unwrap();
    let blobs = [
        (0.3, 0.25, 0.18, [0.9, 0.3, 0.2]),
        (0.7, 0.6, 0.25, [0.2, 0.5, 0.9]),
        (0.45, 0.8, 0.15, [0.9, 0.8, 0.3]),
    ];
    for i in 0..n {
        for j in 0..n {
            let x = i as f64 / n as f64;
            let y = j as f64 / n as f64;
            let mut px = [
                0.35 + 0.3 * x,
                0.4 + 0.25 * (2.0 * std::f64::consts::PI * y).sin() * 0.5,
                0.5 - 0.2 * x + 0.15 * y,
            ];
            for (cx, cy, radius, color) in &blobs {
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                let w = (-d2 / (radius * radius)).exp();
                for (p, c) in px.iter_mut().zip(color) {
                    *p = *p * (1.0 - w) + c * w;
                }
            }
            for (c, &p) in px.iter().enumerate() {
                img.set(&[i, j, c], p.clamp(0.0, 1.0));
            }
        }
    }
    img
}

fn parse_report_value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("report lacks {key}:\n{report}"))
        .parse()
        .unwrap()
}

#[test]
fn criterion_8_desk_scale_inpainting() {
    let dir = tempfile::tempdir().unwrap();
    let img_path = dir.path().join("crop.ppm");
    io::write_image_ppm(&desk_scale_crop(), &img_path).unwrap();
    let out = dir.path().join("out");
    run_ok(bin()
        .arg("inpaint")
        .arg("--image")
        .arg(&img_path)
        .arg("--missing")
        .arg("0.8")
        .arg("--seed")
        .arg("11")
        .arg("--out-dir")
        .arg(&out));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    let mse = parse_report_value(&report, "mse_missing");
    let lambda1 = parse_report_value(&report, "lambda1");
    // 80% ladder value 0.5, scaled 8x for the 64-pixel desk size
    assert_eq!(lambda1, 4.0, "unexpected default data-fit weight");
    assert!(
        mse <= 0.01,
        "criterion 8 FAIL: MSE on missing pixels {mse} > 0.01\n{report}"
    );
    println!("acceptance 8 PASS: 64x64 crop, 80% missing, MSE {mse:.5} <= 0.01");
}

fn sha_of(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn criterion_9_byte_determinism() {
    let dir = tempfile::tempdir().unwrap();

    // complete: identical inputs and seed, twice
    let mut rng = trial_rng(99, 0);
    let truth = gen_tucker(&[12, 12, 12], &[2, 2, 2], &mut rng).unwrap();
    let mask = random_mask(truth.dims(), 0.4, &mut rng).unwrap();
    let input = dir.path().join("y.dtf1");
    let mask_path = dir.path().join("m.dmf1");
    io::write_tensor(&truth, &input).unwrap();
    io::write_mask(&mask, &mask_path).unwrap();
    let (c1, c2) = (dir.path().join("c1"), dir.path().join("c2"));
    for out in [&c1, &c2] {
        run_ok(bin()
            .arg("complete")
            .arg("--input")
            .arg(&input)
            .arg("--mask")
            .arg(&mask_path)
            .arg("--seed")
            .arg("5")
            .arg("--out-dir")
            .arg(out)
            .arg("--reproducible"));
    }
    for f in ["reconstructed.dtf1", "core.dtf1", "factor_0.dtf1"] {
        assert_eq!(
            sha_of(&c1.join(f)),
            sha_of(&c2.join(f)),
            "criterion 9 FAIL: {f} differs between identical runs"
        );
    }

    // benchmark: identical spec + seed -> byte-identical CSV
    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        r#"
[[experiment]]
name = "det-check"
generator = { tucker = { core_dims = [2, 2, 2] } }
dims = [12, 12, 12]
missing_fraction = 0.4
snr_db = 10.0
trials = 3
rng_seed = 21
"#,
    )
    .unwrap();
    let (b1, b2) = (dir.path().join("b1"), dir.path().join("b2"));
    for out in [&b1, &b2] {
        run_ok(bin()
            .arg("benchmark")
            .arg("--spec")
            .arg(&spec)
            .arg("--out-dir")
            .arg(out)
            .arg("--reproducible"));
    }
    assert_eq!(
        sha_of(&b1.join("results.csv")),
        sha_of(&b2.join("results.csv")),
        "criterion 9 FAIL: CSV differs between identical runs"
    );
    println!("acceptance 9 PASS: DTF1 outputs and CSV reports byte-identical across reruns");
}
