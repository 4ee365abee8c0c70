mod common;

use std::fs;
use std::path::Path;

use hybrid_sdf::config::RenderConfig;
use hybrid_sdf::grid::ScalarGrid;
use hybrid_sdf::image::VisibilityImage;
use hybrid_sdf::pipeline::{compare, run_pipeline, Mode, Pipeline, PipelineError, Scene, StageClock};
use hybrid_sdf::reference::penumbra_area;

use common::scenes_dir;

fn small_icosphere(out: &Path, frames: u64) -> RenderConfig {
    let mut config = RenderConfig::load(scenes_dir().join("icosphere.toml")).unwrap();
    config.frames = frames;
    config.coarse_resolution = 16;
    config.camera.width = 24;
    config.camera.height = 20;
    config.reference_samples = 16;
    config.out_dir = out.to_path_buf();
    config
}

fn file_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn bundled_scenes_load_and_validate() {
    for name in ["icosphere", "sphere_plane", "moving_box", "thin_quad"] {
        let config = RenderConfig::load(scenes_dir().join(format!("{name}.toml"))).unwrap();
        let scene = Scene::load(&config).unwrap();
        assert!(!scene.instances.is_empty(), "{name}");
        Pipeline::new(config, scene).unwrap();
    }
}

#[test]
fn single_frame_render_writes_the_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_icosphere(dir.path(), 1);
    let report = run_pipeline(&config, Scene::load(&config).unwrap(), Mode::Render).unwrap();
    assert_eq!(
        file_names(dir.path()),
        [
            "coarse.sdf",
            "fine.sdf",
            "fine_sign_back.sdf",
            "fine_sign_front.sdf",
            "frame_0000.ppm",
            "timing.json",
            "visibility_0000.pgm",
        ]
    );
    assert_eq!(report.files.len(), 7);

    let vis = VisibilityImage::load_pgm(dir.path().join("visibility_0000.pgm")).unwrap();
    assert_eq!(vis.size(), (24, 20));
    let ppm = fs::read(dir.path().join("frame_0000.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n24 20\n255\n"));
    assert_eq!(ppm.len(), b"P6\n24 20\n255\n".len() + 24 * 20 * 3);

    let fine = ScalarGrid::load_sdf1(dir.path().join("fine.sdf")).unwrap();
    assert_eq!(fine.spec().resolution, [32, 32, 32]);
    let coarse = ScalarGrid::load_sdf1(dir.path().join("coarse.sdf")).unwrap();
    assert_eq!(coarse.spec().resolution, [16, 16, 16]);
    let beta = config.beta_voxels * coarse.spec().voxel_size;
    let coarse_min = coarse.values().iter().copied().fold(f64::INFINITY, f64::min);
    assert!((coarse_min + beta).abs() < 1e-12, "seed voxels hold -beta");
    assert!(
        fine.values().iter().any(|&v| v < 0.0),
        "refined interior texels are signed"
    );

    let timing: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["frames"], 1);
    assert_eq!(timing["timings"].as_array().unwrap().len(), 1);
}

#[test]
fn build_mode_writes_only_sdf_dumps_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_icosphere(dir.path(), 2);
    run_pipeline(&config, Scene::load(&config).unwrap(), Mode::Build).unwrap();
    assert_eq!(
        file_names(dir.path()),
        [
            "coarse.sdf",
            "fine.sdf",
            "fine_sign_back.sdf",
            "fine_sign_front.sdf",
            "timing.json"
        ]
    );
}

#[test]
fn reference_mode_defaults_to_the_last_frame() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_icosphere(dir.path(), 3);
    run_pipeline(&config, Scene::load(&config).unwrap(), Mode::Reference).unwrap();
    assert_eq!(file_names(dir.path()), ["reference_0002.pgm", "timing.json"]);
}

#[test]
fn render_with_reference_emits_metrics_matching_compare() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_icosphere(dir.path(), 2);
    config.reference_frames = vec![1];
    let report = run_pipeline(&config, Scene::load(&config).unwrap(), Mode::Render).unwrap();
    assert_eq!(report.metrics.len(), 1);

    let text = fs::read_to_string(dir.path().join("metrics_0001.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 5);
    for key in ["rmse", "penumbra_sdf", "penumbra_ref", "frames", "config_hash"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["frames"], 2);
    assert_eq!(json["config_hash"], config.config_hash());

    let again = compare(
        &config,
        &dir.path().join("visibility_0001.pgm"),
        &dir.path().join("reference_0001.pgm"),
    )
    .unwrap();
    let stored = &report.metrics[0];
    assert_eq!(again.penumbra_sdf, stored.penumbra_sdf);
    assert_eq!(again.penumbra_ref, stored.penumbra_ref);
    // PGM quantizes to 8 bits.
    assert!((again.rmse - stored.rmse).abs() <= 1.0 / 255.0);
}

#[test]
fn compare_image_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.pgm");
    let img = VisibilityImage::from_values(4, 3, (0..12).map(|i| i as f64 / 11.0).collect()).unwrap();
    img.save_pgm(&path).unwrap();
    let m = compare(&RenderConfig::default(), &path, &path).unwrap();
    assert_eq!(m.rmse, 0.0);
    assert_eq!(m.penumbra_sdf, m.penumbra_ref);
}

#[test]
fn compare_disjoint_binary_shadows() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    let left: Vec<f64> = (0..64).map(|i| if i % 8 < 2 { 0.0 } else { 1.0 }).collect();
    let right: Vec<f64> = (0..64).map(|i| if i % 8 >= 6 { 0.0 } else { 1.0 }).collect();
    VisibilityImage::from_values(8, 8, left).unwrap().save_pgm(&a).unwrap();
    VisibilityImage::from_values(8, 8, right).unwrap().save_pgm(&b).unwrap();
    let m = compare(&RenderConfig::default(), &a, &b).unwrap();
    assert!((m.rmse - (32.0f64 / 64.0).sqrt()).abs() < 1e-12);
    assert_eq!((m.penumbra_sdf, m.penumbra_ref), (0, 0));
}

#[test]
fn compare_rejects_size_mismatch_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    VisibilityImage::filled(4, 4, 1.0).save_pgm(&a).unwrap();
    VisibilityImage::filled(5, 4, 1.0).save_pgm(&b).unwrap();
    let config = RenderConfig::default();
    assert!(matches!(compare(&config, &a, &b), Err(PipelineError::Image(_))));
    let missing = compare(&config, &a, &dir.path().join("none.pgm"));
    assert!(matches!(missing, Err(PipelineError::Read { .. })));
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let mut config = small_icosphere(dir.path(), 2);
        config.reference_frames = vec![1];
        run_pipeline(&config, Scene::load(&config).unwrap(), Mode::Render).unwrap();
    }
    let names = file_names(a.path());
    assert_eq!(names, file_names(b.path()));
    for name in names.iter().filter(|n| *n != "timing.json") {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn stage_laps_sum_to_frame_total() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_icosphere(dir.path(), 3);
    config.reference_frames = vec![0, 2];
    let report = run_pipeline(&config, Scene::load(&config).unwrap(), Mode::Render).unwrap();
    for timing in &report.timings {
        let sum: f64 = timing.stages.iter().map(|s| s.ms).sum();
        assert!((sum - timing.total_ms).abs() <= 1.0, "{sum} vs {}", timing.total_ms);
    }
    let total: f64 = report.timings.iter().map(|t| t.total_ms).sum();
    assert!((total - report.total_ms).abs() < 1e-9);
}

#[test]
fn pipeline_advances_one_frame_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_icosphere(dir.path(), 2);
    let mut pipeline = Pipeline::new(config.clone(), Scene::load(&config).unwrap()).unwrap();
    for frame in 0..2 {
        let result = pipeline.step(Mode::Build, &mut StageClock::start()).unwrap();
        assert_eq!(result.frame, frame);
        assert!(result.coarse.is_some());
        assert!(result.rendered.is_none());
    }
    assert_eq!(pipeline.frame(), 2);
}

#[test]
fn sphere_plane_reference_penumbra_is_pinned() {
    let config = RenderConfig::load(scenes_dir().join("sphere_plane.toml")).unwrap();
    let frames = config.frames;
    let scene = Scene::load(&config).unwrap();
    let mut pipeline = Pipeline::new(config, scene).unwrap();
    let mut reference = None;
    for _ in 0..frames {
        reference = pipeline
            .step(Mode::Reference, &mut StageClock::start())
            .unwrap()
            .reference
            .or(reference);
    }
    let reference = reference.expect("frame 31 is a reference frame");
    assert_eq!(reference.size(), (128, 128));
    assert_eq!(penumbra_area(&reference, 0.05), 277);
}
