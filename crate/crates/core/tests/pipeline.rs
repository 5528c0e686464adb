use std::fs;
use std::path::Path;

use fcsmoke::baseline::{enhance_with, EnhanceParams, Method};
use fcsmoke::eval::{evaluate, load_manifest, EvalParams, FeatureCache, PipelineParams};
use fcsmoke::eval::{frame_features, load_frame};
use fcsmoke::image::{load_image, save_png, PlanarImage};

fn textured(w: usize, h: usize, seed: usize) -> PlanarImage {
    PlanarImage::from_fn(w, h, 3, |x, y, c| {
        let t = ((x * 13 + y * 7 + c * 5 + seed) % 17) as f64 / 16.0;
        0.2 + 0.6 * t
    })
    .unwrap()
}

#[test]
fn every_method_survives_a_png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = textured(33, 19, 0);
    let params = EnhanceParams::default();
    for method in Method::ALL {
        let out = enhance_with(&img, method, &params).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (33, 19, 3));
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)), "{method}");
        let path = dir.path().join(format!("{method}.png"));
        save_png(&out, &path).unwrap();
        let back = load_image(&path).unwrap();
        let worst = back
            .data()
            .iter()
            .zip(out.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.5 / 255.0 + 1e-12, "{method}: {worst}");
    }
}

#[test]
fn frame_features_are_forty_histogram_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.png");
    save_png(&textured(64, 48, 3), &path).unwrap();
    let params = PipelineParams {
        frame_width: 32,
        frame_height: 24,
        ..PipelineParams::default()
    };
    let frame = load_frame(&path, &params).unwrap();
    assert_eq!((frame.width(), frame.height()), (32, 24));
    let f = frame_features(&frame, Method::FcAvg, &params).unwrap();
    assert_eq!(f.len(), 40);
    for block in f[..20].chunks(10) {
        assert!((block.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert!(f.iter().all(|v| v.is_finite() && *v >= 0.0));
}

fn write_manifest(dir: &Path, name: &str, video: &str, n: usize) -> std::path::PathBuf {
    let mut csv = String::from("path,label,video_id\n");
    for i in 0..n {
        let smoke = i % 2 == 0;
        let img = if smoke {
            PlanarImage::from_fn(40, 30, 3, |x, y, _| 0.62 + 0.01 * ((x + 2 * y + i) % 3) as f64).unwrap()
        } else {
            textured(40, 30, i)
        };
        let file = format!("{name}-{i}.png");
        save_png(&img, &dir.join(&file)).unwrap();
        csv.push_str(&format!("{file},{},{video}\n", u8::from(smoke)));
    }
    let path = dir.join(format!("{name}.csv"));
    fs::write(&path, csv).unwrap();
    path
}

#[test]
fn evaluation_is_repeatable_with_a_cache() {
    let dir = tempfile::tempdir().unwrap();
    let train_m = load_manifest(&write_manifest(dir.path(), "train", "a", 8)).unwrap();
    let test_m = load_manifest(&write_manifest(dir.path(), "test", "b", 6)).unwrap();
    let mut params = EvalParams::default();
    params.pipeline.frame_width = 40;
    params.pipeline.frame_height = 30;
    let cache = FeatureCache::new(dir.path().join("cache")).unwrap();
    let method = "gf".parse().unwrap();

    let cold = evaluate(&train_m, &test_m, method, &params, Some(&cache)).unwrap();
    let warm = evaluate(&train_m, &test_m, method, &params, Some(&cache)).unwrap();
    let uncached = evaluate(&train_m, &test_m, method, &params, None).unwrap();
    assert_eq!(cold.to_json().unwrap(), warm.to_json().unwrap());
    assert_eq!(cold.to_json().unwrap(), uncached.to_json().unwrap());
    assert_eq!(cold.confusion.total(), 6);
    assert_eq!(cold.config_echo.train_images, 8);
}
