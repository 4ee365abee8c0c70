//! The per-frame loop: animate, voxelize, flood, refine, shade, and
//! optionally render a reference, writing every artifact to disk.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use glam::DVec3;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RenderConfig};
use crate::geometry::{load_obj, Aabb, Bvh, RigidTransform, SceneInstance, TriangleMesh};
use crate::grid::{GridSpec, ScalarGrid};
use crate::image::{ImageError, VisibilityImage};
use crate::jumpflood::{coarse_sdf, jfa_flood};
use crate::reference::{render_reference, Metrics};
use crate::refine::{build_fine_sdf, FineSdfState, RefineStats};
use crate::shadower::{render_frame, RenderedFrame};
use crate::voxelizer::voxelize;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage `{stage}` failed at frame {frame}: {message}")]
    Stage {
        stage: &'static str,
        frame: u64,
        message: String,
    },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: ImageError },
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl PipelineError {
    pub fn is_config_error(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

fn stage_err(stage: &'static str, frame: u64) -> impl FnOnce(String) -> PipelineError {
    move |message| PipelineError::Stage { stage, frame, message }
}

/// Scene objects with their animation.
#[derive(Clone, Debug)]
pub struct Scene {
    pub instances: Vec<SceneInstance>,
}

impl Scene {
    pub fn new(instances: Vec<SceneInstance>) -> Self {
        Self { instances }
    }

    /// Loads the static scene file and every `object` table.
    pub fn load(config: &RenderConfig) -> Result<Self, ConfigError> {
        let mut instances = Vec::new();
        let load = |name: &str, path: &Path| {
            load_obj(config.resolve(path))
                .map(|parsed| Arc::new(parsed.mesh))
                .map_err(|source| ConfigError::Mesh {
                    object: name.to_string(),
                    source,
                })
        };
        if let Some(scene) = &config.scene {
            instances.push(SceneInstance::fixed(load("scene", scene)?, RigidTransform::IDENTITY));
        }
        for (name, obj) in &config.object {
            instances.push(SceneInstance {
                mesh: load(name, &obj.mesh)?,
                base: RigidTransform::translation(DVec3::from_array(obj.translate)),
                translate_per_frame: DVec3::from_array(obj.translate_per_frame),
            });
        }
        Ok(Self { instances })
    }

    pub fn meshes_at(&self, frame: u64) -> Vec<TriangleMesh> {
        self.instances.iter().map(|i| i.world_mesh(frame)).collect()
    }

    /// Bounds of the scene over frames `0..frames`. Motion is linear, so
    /// the first and last frame suffice.
    pub fn bounds(&self, frames: u64) -> Aabb {
        let last = frames.saturating_sub(1);
        self.instances
            .iter()
            .flat_map(|i| [i.world_mesh(0).bounds(), i.world_mesh(last).bounds()])
            .fold(Aabb::EMPTY, Aabb::union)
    }
}

/// Consecutive stage laps sharing their boundaries, so the laps sum to the
/// total exactly.
#[derive(Debug)]
pub struct StageClock {
    start: Instant,
    last: Instant,
    laps: Vec<StageTime>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTime {
    pub stage: &'static str,
    pub ms: f64,
}

impl StageClock {
    pub fn start() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            laps: Vec::new(),
        }
    }

    pub fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.laps.push(StageTime {
            stage,
            ms: ms(now - self.last),
        });
        self.last = now;
    }

    pub fn finish(self, frame: u64) -> FrameTiming {
        FrameTiming {
            frame,
            stages: self.laps,
            total_ms: ms(self.last - self.start),
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameTiming {
    pub frame: u64,
    pub stages: Vec<StageTime>,
    pub total_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// SDF stages only.
    Build,
    /// SDF stages, shading, and references on `reference_frames`.
    Render,
    /// Reference images only.
    Reference,
}

/// What one frame produced.
#[derive(Clone, Debug)]
pub struct FrameResult {
    pub frame: u64,
    pub coarse: Option<ScalarGrid>,
    pub refine: RefineStats,
    pub rendered: Option<RenderedFrame>,
    pub reference: Option<VisibilityImage>,
    pub metrics: Option<Metrics>,
}

/// Pipeline state carried across frames.
pub struct Pipeline {
    config: RenderConfig,
    scene: Scene,
    coarse_spec: GridSpec,
    fine_spec: GridSpec,
    state: FineSdfState,
    history: Option<VisibilityImage>,
    frame: u64,
}

impl Pipeline {
    pub fn new(config: RenderConfig, scene: Scene) -> Result<Self, PipelineError> {
        config.validate()?;
        let bounds = match (config.bounds_min, config.bounds_max) {
            (Some(lo), Some(hi)) => Aabb::new(DVec3::from_array(lo), DVec3::from_array(hi)),
            _ => scene.bounds(config.frames),
        };
        if bounds.is_empty() {
            return Err(ConfigError::Invalid {
                key: "scene",
                message: "scene has no geometry".into(),
            }
            .into());
        }
        let coarse_spec =
            GridSpec::fit(&bounds, config.coarse_resolution).map_err(|e| stage_err("setup", 0)(e.to_string()))?;
        let fine_spec = coarse_spec.refined(config.fine_factor);
        config
            .refine_params(&fine_spec)
            .validate(&coarse_spec)
            .map_err(|e| stage_err("setup", 0)(e.to_string()))?;
        config
            .shadow_params(&fine_spec)
            .validate(fine_spec.voxel_size)
            .map_err(|e| stage_err("setup", 0)(e.to_string()))?;
        Ok(Self {
            state: FineSdfState::new(fine_spec),
            config,
            scene,
            coarse_spec,
            fine_spec,
            history: None,
            frame: 0,
        })
    }

    pub fn config(&self) -> &RenderConfig {
        &self.config
    }

    pub fn coarse_spec(&self) -> &GridSpec {
        &self.coarse_spec
    }

    pub fn fine_spec(&self) -> &GridSpec {
        &self.fine_spec
    }

    pub fn state(&self) -> &FineSdfState {
        &self.state
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    /// Index of the next frame `step` will produce.
    pub fn frame(&self) -> u64 {
        self.frame
    }

    /// Runs one frame, recording each stage on `clock`.
    pub fn step(&mut self, mode: Mode, clock: &mut StageClock) -> Result<FrameResult, PipelineError> {
        let frame = self.frame;
        let cfg = &self.config;
        let meshes = self.scene.meshes_at(frame);
        let bvh = Bvh::build(&TriangleMesh::merge(&meshes));
        clock.lap("scene");

        let mut result = FrameResult {
            frame,
            coarse: None,
            refine: RefineStats::default(),
            rendered: None,
            reference: None,
            metrics: None,
        };

        if mode != Mode::Reference {
            let seeds = voxelize(&meshes, &self.coarse_spec, cfg.supersample)
                .map_err(|e| stage_err("voxelize", frame)(e.to_string()))?;
            clock.lap("voxelize");
            let coarse = coarse_sdf(&jfa_flood(&seeds), cfg.jfa_params(&self.coarse_spec));
            clock.lap("flood");
            result.refine = build_fine_sdf(&bvh, &coarse, &mut self.state, &cfg.refine_params(&self.fine_spec))
                .map_err(|e| stage_err("refine", frame)(e.to_string()))?;
            result.coarse = Some(coarse);
            clock.lap("refine");
        }

        if mode == Mode::Render {
            let rendered = render_frame(
                &bvh,
                &self.state.signed,
                &cfg.camera(),
                &cfg.shadow_params(&self.fine_spec),
                frame,
                cfg.rng_seed,
                self.history.as_ref(),
            );
            self.history = Some(rendered.visibility.clone());
            result.rendered = Some(rendered);
            clock.lap("shadow");
        }

        let wants_reference = match mode {
            Mode::Build => false,
            Mode::Render => cfg.reference_frames.contains(&frame),
            Mode::Reference => {
                cfg.reference_frames.contains(&frame) || (cfg.reference_frames.is_empty() && frame + 1 == cfg.frames)
            }
        };
        if wants_reference {
            let reference = render_reference(&bvh, &cfg.camera(), &cfg.reference_params(&self.fine_spec));
            if let Some(rendered) = &result.rendered {
                result.metrics = Some(Metrics::compare(
                    &rendered.visibility,
                    &reference,
                    cfg.penumbra_tau,
                    frame + 1,
                    cfg.config_hash(),
                )?);
            }
            result.reference = Some(reference);
            clock.lap("reference");
        }
        self.frame += 1;
        Ok(result)
    }

    pub fn write_sdf_dumps(&self, out: &Path, coarse: &ScalarGrid) -> Result<(), PipelineError> {
        write_with(&out.join("coarse.sdf"), |p| coarse.save_sdf1(p))?;
        write_with(&out.join("fine.sdf"), |p| self.state.signed.save_sdf1(p))?;
        write_with(&out.join("fine_sign_front.sdf"), |p| self.state.sign_front.save_sdf1(p))?;
        write_with(&out.join("fine_sign_back.sdf"), |p| self.state.sign_back.save_sdf1(p))
    }
}

fn write_with(path: &Path, f: impl FnOnce(&Path) -> io::Result<()>) -> Result<(), PipelineError> {
    f(path).map_err(|source| PipelineError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    write_with(path, |p| fs::write(p, text))
}

/// Summary of a `run_pipeline` call.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub frames: u64,
    pub coarse_resolution: [usize; 3],
    pub fine_resolution: [usize; 3],
    pub refined_texels_last_frame: usize,
    pub rays_total: u64,
    pub max_steps_taken: u32,
    pub timings: Vec<FrameTiming>,
    pub total_ms: f64,
    #[serde(skip)]
    pub metrics: Vec<Metrics>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

/// Runs all frames and writes the artifacts for `mode` to
/// `config.out_dir`:
///
/// - `frame_NNNN.ppm`, `visibility_NNNN.pgm` per rendered frame
/// - `reference_NNNN.pgm` and, when rendering, `metrics_NNNN.json`
/// - `coarse.sdf`, `fine.sdf`, `fine_sign_front.sdf`, `fine_sign_back.sdf`
///   after the last frame (not in reference mode)
/// - `timing.json`
pub fn run_pipeline(config: &RenderConfig, scene: Scene, mode: Mode) -> Result<RunReport, PipelineError> {
    let out = config.resolve(&config.out_dir);
    fs::create_dir_all(&out).map_err(|source| PipelineError::Write {
        path: out.clone(),
        source,
    })?;
    let mut pipeline = Pipeline::new(config.clone(), scene)?;
    let mut report = RunReport {
        frames: config.frames,
        coarse_resolution: pipeline.coarse_spec.resolution,
        fine_resolution: pipeline.fine_spec.resolution,
        refined_texels_last_frame: 0,
        rays_total: 0,
        max_steps_taken: 0,
        timings: Vec::new(),
        total_ms: 0.0,
        metrics: Vec::new(),
        files: Vec::new(),
    };
    let save = |path: PathBuf, f: &dyn Fn(&Path) -> io::Result<()>, files: &mut Vec<PathBuf>| {
        write_with(&path, f)?;
        files.push(path);
        Ok::<(), PipelineError>(())
    };

    for frame in 0..config.frames {
        let mut clock = StageClock::start();
        let result = pipeline.step(mode, &mut clock)?;
        report.refined_texels_last_frame = result.refine.refined_texels;
        report.rays_total += result.refine.rays;
        if let Some(r) = &result.rendered {
            report.max_steps_taken = report.max_steps_taken.max(r.max_steps_taken);
            save(
                out.join(format!("frame_{frame:04}.ppm")),
                &|p| r.color.save_ppm(p),
                &mut report.files,
            )?;
            save(
                out.join(format!("visibility_{frame:04}.pgm")),
                &|p| r.visibility.save_pgm(p),
                &mut report.files,
            )?;
        }
        if let Some(reference) = &result.reference {
            save(
                out.join(format!("reference_{frame:04}.pgm")),
                &|p| reference.save_pgm(p),
                &mut report.files,
            )?;
        }
        if let Some(m) = &result.metrics {
            let json = m.to_json();
            save(
                out.join(format!("metrics_{frame:04}.json")),
                &|p| fs::write(p, &json),
                &mut report.files,
            )?;
            report.metrics.push(m.clone());
        }
        if frame + 1 == config.frames {
            if let Some(coarse) = &result.coarse {
                pipeline.write_sdf_dumps(&out, coarse)?;
                for name in ["coarse.sdf", "fine.sdf", "fine_sign_front.sdf", "fine_sign_back.sdf"] {
                    report.files.push(out.join(name));
                }
            }
        }
        clock.lap("write");
        let timing = clock.finish(frame);
        report.total_ms += timing.total_ms;
        report.timings.push(timing);
    }

    let timing_path = out.join("timing.json");
    write_text(
        &timing_path,
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    report.files.push(timing_path);
    Ok(report)
}

/// Metrics for an SDF visibility image against a reference image.
pub fn compare(config: &RenderConfig, sdf_image: &Path, ref_image: &Path) -> Result<Metrics, PipelineError> {
    let load = |path: &Path| {
        VisibilityImage::load_pgm(path).map_err(|source| PipelineError::Read {
            path: path.to_path_buf(),
            source,
        })
    };
    let sdf = load(sdf_image)?;
    let reference = load(ref_image)?;
    Ok(Metrics::compare(
        &sdf,
        &reference,
        config.penumbra_tau,
        config.frames,
        config.config_hash(),
    )?)
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchEntry {
    pub coarse_resolution: usize,
    pub fine_resolution: [usize; 3],
    pub frames: u64,
    /// Mean milliseconds per frame for each stage.
    pub stages: Vec<StageTime>,
    pub mean_frame_ms: f64,
}

/// Times the full render loop at each of `config.bench_resolutions`.
pub fn bench(config: &RenderConfig, scene: &Scene) -> Result<Vec<BenchEntry>, PipelineError> {
    let mut entries = Vec::new();
    for &res in &config.bench_resolutions {
        let cfg = RenderConfig {
            coarse_resolution: res,
            reference_frames: Vec::new(),
            ..config.clone()
        };
        let mut pipeline = Pipeline::new(cfg, scene.clone())?;
        let mut sums: Vec<StageTime> = Vec::new();
        let mut total = 0.0;
        for frame in 0..config.frames {
            let mut clock = StageClock::start();
            pipeline.step(Mode::Render, &mut clock)?;
            let timing = clock.finish(frame);
            total += timing.total_ms;
            for lap in timing.stages {
                match sums.iter_mut().find(|s| s.stage == lap.stage) {
                    Some(s) => s.ms += lap.ms,
                    None => sums.push(lap),
                }
            }
        }
        let n = config.frames as f64;
        for s in &mut sums {
            s.ms /= n;
        }
        entries.push(BenchEntry {
            coarse_resolution: res,
            fine_resolution: pipeline.fine_spec.resolution,
            frames: config.frames,
            stages: sums,
            mean_frame_ms: total / n,
        });
    }
    Ok(entries)
}
