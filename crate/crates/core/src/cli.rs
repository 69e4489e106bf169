//! Command-line surface: synth → fit → eval-time / eval-space / render,
//! plus standalone metrics. Exit codes: 0 ok, 2 usage, 3 fit/data, 4 evaluation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use crate::error::{Error, Result};
use crate::evaluate::{
    camera_move, camera_move_registry, fitted_scene, render_at, spatial_consistency, temporal_errors,
    temporal_grid, ContinuousScene, Region, Truth,
};
use crate::fitting::{fit_detailed, init_bases_from_tracks, solver_registry};
use crate::io::{
    line_chart_svg, load_checkpoint, read_correspondences, read_png, save_checkpoint, write_color_png,
    write_csv, write_depth_pfm, write_mask_png, write_text, RunConfig, SceneFile, Series, TrackFile,
};
use crate::metrics::{epipolar_metrics, psnr, ssim, RansacConfig};
use crate::synth::{
    camera_path_registry, generate_scene, motion_registry, AnalyticSceneSpec, Intrinsics, KindParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_EVAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "dyn4d", version, about = "Continuous 4D dynamics: synthesize, fit, evaluate, render")]
struct Cli {
    /// JSON run config (fit / mask / spline / ransac sections, seed, out)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an analytic scene and its sampled tracks
    Synth(SynthArgs),
    /// Initialize motion bases from tracks and fit the spline model
    Fit(FitArgs),
    /// Position / camera error against ground truth across temporal offsets
    EvalTime(EvalTimeArgs),
    /// Epipolar consistency of novel views
    EvalSpace(EvalSpaceArgs),
    /// Scaffold frames and inpainting masks
    Render(RenderArgs),
    /// EE/EIR of a correspondence file and/or PSNR/SSIM of two images
    Metrics(MetricsArgs),
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok([*x, *y, *z]),
        _ => Err(format!("expected three finite comma-separated numbers, got '{s}'")),
    }
}

fn motion_names() -> PossibleValuesParser {
    PossibleValuesParser::new(motion_registry().names())
}

fn camera_names() -> PossibleValuesParser {
    PossibleValuesParser::new(camera_path_registry().names())
}

fn solver_names() -> PossibleValuesParser {
    PossibleValuesParser::new(solver_registry().names())
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "projectile", value_parser = motion_names())]
    motion: String,
    /// Add an independent second body with this motion
    #[arg(long, value_parser = motion_names())]
    second_body: Option<String>,
    #[arg(long, default_value = "static", value_parser = camera_names())]
    camera: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    frames: u64,
    /// Track noise standard deviation (scene units)
    #[arg(long, default_value_t = 1e-3)]
    noise: f64,
    #[arg(long, default_value_t = 200)]
    foreground: usize,
    #[arg(long, default_value_t = 3000)]
    background: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t_start: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t_end: f64,
    /// Velocity / initial velocity / drift, "x,y,z"
    #[arg(long, value_parser = parse_vec3, allow_negative_numbers = true)]
    velocity: Option<[f64; 3]>,
    #[arg(long)]
    gravity: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    angular_velocity: Option<f64>,
    #[arg(long, value_parser = parse_vec3, allow_negative_numbers = true)]
    axis: Option<[f64; 3]>,
    /// Camera dolly direction, "x,y,z"
    #[arg(long, value_parser = parse_vec3, allow_negative_numbers = true)]
    direction: Option<[f64; 3]>,
    #[arg(long, allow_negative_numbers = true)]
    speed: Option<f64>,
    /// Camera pan/tilt rate, rad/s
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    tracks: PathBuf,
    /// Source scene supplying colors, background and analytic ground truth
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, value_parser = solver_names())]
    solver: Option<String>,
    /// Number of motion bases K
    #[arg(long)]
    bases: Option<usize>,
    #[arg(long)]
    num_control: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda_phys: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalTimeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    /// Held-out tracks used as truth when the scene has no analytic spec
    #[arg(long)]
    heldout: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalSpaceArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    /// Camera moves to evaluate (default: all registered)
    #[arg(long = "move", value_delimiter = ',')]
    moves: Vec<String>,
    /// Move magnitude (scene units or radians); per-move default if absent
    #[arg(long, allow_negative_numbers = true)]
    magnitude: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t_norm: f64,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    /// Times to render (default: the observed timestamps)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t_norm: Vec<f64>,
    #[arg(long = "move")]
    camera_move: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    magnitude: Option<f64>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// CSV of x1,y1,x2,y2 rows
    #[arg(long)]
    correspondences: Option<PathBuf>,
    #[arg(long, requires = "image_b")]
    image_a: Option<PathBuf>,
    #[arg(long, requires = "image_a")]
    image_b: Option<PathBuf>,
}

/// An error together with the exit code it maps to.
struct Failure(i32, Error);

type CmdResult = std::result::Result<(), Failure>;

trait Code<T> {
    fn code(self, c: i32) -> std::result::Result<T, Failure>;
}

impl<T> Code<T> for Result<T> {
    fn code(self, c: i32) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure(c, e))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure(code, e)) => {
            eprintln!("error: {e}");
            code
        }
    }
}

fn execute(cli: Cli) -> CmdResult {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).code(EXIT_USAGE)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    match cli.command {
        Command::Synth(a) => synth(&cfg, a),
        Command::Fit(a) => fit_cmd(cfg, a),
        Command::EvalTime(a) => eval_time(&cfg, a),
        Command::EvalSpace(a) => eval_space(&cfg, a),
        Command::Render(a) => render(&cfg, a),
        Command::Metrics(a) => metrics(&cfg, a),
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn synth(cfg: &RunConfig, a: SynthArgs) -> CmdResult {
    let d = KindParams::default();
    let params = KindParams {
        velocity: a.velocity.unwrap_or(if a.motion == "projectile" { [1.0, 5.0, 0.0] } else { d.velocity }),
        g: a.gravity.unwrap_or(d.g),
        radius: a.radius.unwrap_or(d.radius),
        angular_velocity: a.angular_velocity.unwrap_or(d.angular_velocity),
        axis: a.axis.unwrap_or(d.axis),
        direction: a.direction.unwrap_or(d.direction),
        speed: a.speed.unwrap_or(d.speed),
        rate: a.rate.unwrap_or(d.rate),
    };
    let motions = motion_registry();
    let motion = (motions.get(&a.motion).code(EXIT_USAGE)?)(&params);
    let second_body = match &a.second_body {
        Some(n) => Some((motions.get(n).code(EXIT_USAGE)?)(&params)),
        None => None,
    };
    let camera_path = (camera_path_registry().get(&a.camera).code(EXIT_USAGE)?)(&params);
    let spec = AnalyticSceneSpec {
        motion,
        second_body,
        camera_path,
        num_foreground: a.foreground,
        num_background: a.background,
        time_span: [a.t_start, a.t_end],
        seed: cfg.seed,
        intrinsics: Intrinsics::default(),
    };
    let world = generate_scene(&spec).code(EXIT_USAGE)?;
    let obs = world.sample_discrete(a.frames as usize, a.noise).code(EXIT_USAGE)?;
    let scene = SceneFile {
        scene: world.dynamic_scene(&obs.timestamps),
        analytic: Some(spec),
    };
    let tracks = TrackFile {
        tracks: obs.to_track_set(),
        intrinsics: Intrinsics::of(&world.camera),
    };
    scene.save(&cfg.out.join("scene.json")).code(EXIT_DATA)?;
    tracks.save(&cfg.out.join("tracks.json")).code(EXIT_DATA)?;
    println!("wrote {} and {}", cfg.out.join("scene.json").display(), cfg.out.join("tracks.json").display());
    Ok(())
}

fn fit_cmd(mut cfg: RunConfig, a: FitArgs) -> CmdResult {
    if let Some(s) = a.solver {
        cfg.fit.solver = s;
    }
    if let Some(k) = a.bases {
        cfg.spline.num_bases = k;
    }
    if let Some(m) = a.num_control {
        cfg.spline.num_control = m;
    }
    if let Some(p) = a.degree {
        cfg.spline.degree = p;
    }
    if let Some(e) = a.epochs {
        cfg.fit.epochs = e;
    }
    if let Some(lr) = a.lr {
        cfg.fit.learning_rate = lr;
    }
    if let Some(l) = a.lambda_phys {
        cfg.fit.lambda_phys = l;
    }
    cfg.fit.seed = cfg.seed;
    cfg.validate().code(EXIT_USAGE)?;

    let tracks = TrackFile::load(&a.tracks).code(EXIT_DATA)?;
    let source = a.scene.as_deref().map(SceneFile::load).transpose().code(EXIT_DATA)?;
    let init = init_bases_from_tracks(&tracks.tracks, cfg.spline.num_bases, cfg.seed).code(EXIT_DATA)?;
    let outcome = fit_detailed(&init.bases, &cfg.spline, &cfg.fit).code(EXIT_DATA)?;

    let camera = tracks.intrinsics.camera().code(EXIT_DATA)?;
    let fitted = SceneFile {
        scene: fitted_scene(&init, camera, source.as_ref().map(|s| &s.scene)),
        analytic: source.and_then(|s| s.analytic),
    };

    let out = &cfg.out;
    save_checkpoint(&out.join("checkpoint.json"), &outcome.spline).code(EXIT_DATA)?;
    fitted.save(&out.join("fitted_scene.json")).code(EXIT_DATA)?;
    let rows: Vec<Vec<String>> = outcome
        .history
        .iter()
        .enumerate()
        .map(|(e, l)| vec![e.to_string(), num(l.data), num(l.phys), num(l.total)])
        .collect();
    write_csv(&out.join("loss.csv"), &["epoch", "data", "phys", "total"], &rows).code(EXIT_DATA)?;

    let last = outcome.history.last().copied();
    let mut report = vec![
        vec!["solver".into(), cfg.fit.solver.clone()],
        vec!["num_bases".into(), cfg.spline.num_bases.to_string()],
        vec!["final_total_loss".into(), last.map_or("nan".into(), |l| num(l.total))],
        vec![
            "rank_deficient_tracks".into(),
            init.report.coefficient_rank_flags.iter().filter(|f| **f).count().to_string(),
        ],
        vec!["fallback_clusters".into(), init.report.fallback_clusters.len().to_string()],
        vec![
            "max_procrustes_residual".into(),
            num(init.report.per_frame_residuals.iter().flatten().copied().fold(0.0, f64::max)),
        ],
    ];
    if let Some(c) = &outcome.comparison {
        report.push(vec!["closed_form_total_loss".into(), num(c.closed_form.total)]);
        report.push(vec!["iterative_total_loss".into(), num(c.iterative.total)]);
        report.push(vec!["relative_loss_gap".into(), num(c.relative_gap)]);
        report.push(vec!["max_control_discrepancy".into(), num(c.max_control_discrepancy)]);
    }
    write_csv(&out.join("fit_report.csv"), &["key", "value"], &report).code(EXIT_DATA)?;
    println!("wrote {}", out.join("checkpoint.json").display());
    Ok(())
}

fn load_model(checkpoint: &Path, scene: &Path) -> std::result::Result<(crate::spline::C4ddSpline, SceneFile), Failure> {
    let spline = load_checkpoint(checkpoint).code(EXIT_DATA)?;
    let scene = SceneFile::load(scene).code(EXIT_DATA)?;
    ContinuousScene::new(&spline, &scene.scene).code(EXIT_DATA)?;
    Ok((spline, scene))
}

fn eval_time(cfg: &RunConfig, a: EvalTimeArgs) -> CmdResult {
    let (spline, scene) = load_model(&a.checkpoint, &a.scene)?;
    let model = ContinuousScene::new(&spline, &scene.scene).code(EXIT_DATA)?;
    let (grid, truth): (_, Box<dyn Fn(f64) -> Result<Truth>>) = match (&scene.analytic, &a.heldout) {
        (Some(spec), _) => {
            let world = generate_scene(spec).code(EXIT_DATA)?;
            let grid = temporal_grid(&scene.scene.bases.timestamps);
            (
                grid,
                Box::new(move |t| {
                    let (p, pose) = world.ground_truth_at(t);
                    Ok((p.into_iter().map(Some).collect(), Some(pose)))
                }),
            )
        }
        (None, Some(path)) => {
            let held = TrackFile::load(path).code(EXIT_DATA)?;
            let ts = held.tracks.timestamps.clone();
            let grid = ts
                .iter()
                .map(|&t| crate::evaluate::TimeSample {
                    region: if t < -1.0 { Region::Past } else if t > 1.0 { Region::Future } else { Region::Between },
                    offset: if t < -1.0 { (t + 1.0) / 2.0 } else if t > 1.0 { (t - 1.0) / 2.0 } else { 0.0 },
                    t_norm: t,
                })
                .collect();
            (
                grid,
                Box::new(move |t| {
                    let f = ts
                        .iter()
                        .position(|x| *x == t)
                        .ok_or_else(|| Error::InvalidConfig(format!("no held-out frame at {t}")))?;
                    let pose = held.tracks.camera_states[f].to_rigid()?;
                    Ok((held.tracks.tracks.iter().map(|tr| tr[f]).collect(), Some(pose)))
                }),
            )
        }
        (None, None) => {
            return Err(Failure(
                EXIT_EVAL,
                Error::InvalidConfig("scene has no analytic ground truth and no --heldout tracks".into()),
            ))
        }
    };
    let errs = temporal_errors(&model, &grid, &*truth).code(EXIT_EVAL)?;
    let rows: Vec<Vec<String>> = errs
        .iter()
        .map(|e| {
            vec![
                e.sample.region.name().to_string(),
                format!("{:.4}", e.sample.offset),
                num(e.sample.t_norm),
                format!("{:.4}", (e.sample.t_norm + 1.0) / 2.0),
                num(e.position),
                num(e.camera_rotation),
                num(e.camera_center),
            ]
        })
        .collect();
    write_csv(
        &cfg.out.join("time_error.csv"),
        &["region", "offset", "t_norm", "time_fraction", "position_error", "camera_rotation_error", "camera_center_error"],
        &rows,
    )
    .code(EXIT_EVAL)?;
    let pos: Vec<(f64, f64)> = errs.iter().map(|e| ((e.sample.t_norm + 1.0) / 2.0, e.position)).collect();
    let cam: Vec<(f64, f64)> = errs.iter().map(|e| ((e.sample.t_norm + 1.0) / 2.0, e.camera_center)).collect();
    let svg = line_chart_svg(
        "Temporal prediction error",
        "time (fraction of observed span)",
        "error",
        &[
            Series { label: "foreground position", color: "#c0392b", points: &pos },
            Series { label: "camera center", color: "#2c3e50", points: &cam },
        ],
    );
    write_text(&cfg.out.join("time_error.svg"), &svg).code(EXIT_EVAL)?;
    println!("wrote {}", cfg.out.join("time_error.csv").display());
    Ok(())
}

fn ransac_cfg(cfg: &RunConfig) -> RansacConfig {
    RansacConfig {
        inlier_threshold: cfg.ransac.inlier_threshold,
        iterations: cfg.ransac.iterations,
        seed: cfg.seed,
    }
}

fn eval_space(cfg: &RunConfig, a: EvalSpaceArgs) -> CmdResult {
    let (spline, scene) = load_model(&a.checkpoint, &a.scene)?;
    let model = ContinuousScene::new(&spline, &scene.scene).code(EXIT_DATA)?;
    let names: Vec<String> = if a.moves.is_empty() {
        camera_move_registry().names().iter().map(|s| s.to_string()).collect()
    } else {
        a.moves.clone()
    };
    let mut rows = Vec::new();
    for name in &names {
        let mv = camera_move(name).code(EXIT_EVAL)?;
        let mag = a.magnitude.unwrap_or(mv.default_magnitude());
        let r = spatial_consistency(&model, a.t_norm, &*mv, mag, &cfg.mask, &ransac_cfg(cfg)).code(EXIT_EVAL)?;
        rows.push(vec![
            r.move_name.to_string(),
            num(r.magnitude),
            r.covisible.to_string(),
            num(r.metrics.ee_median),
            num(r.metrics.eir),
            r.metrics.inliers.to_string(),
        ]);
    }
    write_csv(
        &cfg.out.join("space_metrics.csv"),
        &["move", "magnitude", "covisible", "ee_median", "eir", "inliers"],
        &rows,
    )
    .code(EXIT_EVAL)?;
    println!("wrote {}", cfg.out.join("space_metrics.csv").display());
    Ok(())
}

fn render(cfg: &RunConfig, a: RenderArgs) -> CmdResult {
    let (spline, scene) = load_model(&a.checkpoint, &a.scene)?;
    let model = ContinuousScene::new(&spline, &scene.scene).code(EXIT_DATA)?;
    let times = if a.t_norm.is_empty() {
        scene.scene.bases.timestamps.clone()
    } else {
        a.t_norm.clone()
    };
    let mv = a.camera_move.as_deref().map(camera_move).transpose().code(EXIT_EVAL)?;
    if a.magnitude.is_some() && mv.is_none() {
        return Err(Failure(EXIT_EVAL, Error::InvalidConfig("--magnitude needs --move".into())));
    }
    let mut rows = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let moved = mv.as_ref().map(|m| (&**m, a.magnitude.unwrap_or(m.default_magnitude())));
        let f = render_at(&model, t, moved, &cfg.mask).code(EXIT_EVAL)?;
        write_color_png(&cfg.out.join(format!("frame_{i:05}.png")), &f).code(EXIT_EVAL)?;
        write_depth_pfm(&cfg.out.join(format!("frame_{i:05}.pfm")), &f).code(EXIT_EVAL)?;
        write_mask_png(&cfg.out.join(format!("mask_{i:05}.png")), &f).code(EXIT_EVAL)?;
        rows.push(vec![i.to_string(), num(t), num(f.mask_fraction())]);
    }
    write_csv(&cfg.out.join("render_index.csv"), &["frame", "t_norm", "mask_fraction"], &rows).code(EXIT_EVAL)?;
    println!("wrote {} frames to {}", times.len(), cfg.out.display());
    Ok(())
}

fn metrics(cfg: &RunConfig, a: MetricsArgs) -> CmdResult {
    if a.correspondences.is_none() && a.image_a.is_none() {
        return Err(Failure(
            EXIT_USAGE,
            Error::InvalidConfig("give --correspondences and/or --image-a/--image-b".into()),
        ));
    }
    let mut rows = Vec::new();
    if let Some(p) = &a.correspondences {
        let corr = read_correspondences(p).code(EXIT_DATA)?;
        let m = epipolar_metrics(&corr, &ransac_cfg(cfg)).code(EXIT_EVAL)?;
        rows.push(vec!["ee_median".into(), num(m.ee_median)]);
        rows.push(vec!["eir".into(), num(m.eir)]);
        rows.push(vec!["inliers".into(), m.inliers.to_string()]);
        rows.push(vec!["pairs".into(), m.total.to_string()]);
    }
    if let (Some(pa), Some(pb)) = (&a.image_a, &a.image_b) {
        let (ia, ib) = (read_png(pa).code(EXIT_DATA)?, read_png(pb).code(EXIT_DATA)?);
        rows.push(vec!["psnr".into(), num(psnr(&ia, &ib).code(EXIT_EVAL)?)]);
        rows.push(vec!["ssim".into(), num(ssim(&ia, &ib).code(EXIT_EVAL)?)]);
    }
    write_csv(&cfg.out.join("metrics.csv"), &["metric", "value"], &rows).code(EXIT_EVAL)?;
    for r in &rows {
        println!("{} = {}", r[0], r[1]);
    }
    Ok(())
}
