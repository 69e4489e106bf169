//! Temporal and spatial consistency of a fitted continuous scene: error vs
//! temporal offset against an oracle, and epipolar consistency between a
//! source view and a moved novel view.

use std::fmt::Debug;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Pose9, RigidTransform, Rotation};
use crate::metrics::{epipolar_metrics, Correspondence, EpipolarMetrics, RansacConfig};
use crate::fitting::InitResult;
use crate::motion::{scene_at, DynamicScene, GaussianPrimitive, PosedPrimitive};
use crate::registry::Registry;
use crate::scaffold::{render_scaffold, splat, MaskConfig, ScaffoldFrame, SplatPoint};
use crate::spline::C4ddSpline;

/// Extrapolation offsets as fractions of the observed span; 1/15 is the
/// "6.67%" window.
pub const OFFSETS: [f64; 11] = [
    0.05,
    1.0 / 15.0,
    0.10,
    0.15,
    0.20,
    0.25,
    0.30,
    0.35,
    0.40,
    0.45,
    0.50,
];

/// Rotate-type camera moves swing the camera about a point this far behind
/// its optical center, so the view keeps a nonzero baseline.
pub const PIVOT_DISTANCE: f64 = 1.0;

/// A fitted spline driving the discrete scene's primitives.
#[derive(Debug, Clone, Copy)]
pub struct ContinuousScene<'a> {
    pub spline: &'a C4ddSpline,
    pub scene: &'a DynamicScene,
}

impl<'a> ContinuousScene<'a> {
    pub fn new(spline: &'a C4ddSpline, scene: &'a DynamicScene) -> Result<Self> {
        if spline.motion_ctrl.len() != scene.bases.num_bases() {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint has {} motion curves, scene has {} bases",
                spline.motion_ctrl.len(),
                scene.bases.num_bases()
            )));
        }
        Ok(ContinuousScene { spline, scene })
    }

    /// Basis and camera states at any real `t_norm` (linear continuation outside [-1, 1]).
    pub fn states_at(&self, t_norm: f64) -> Result<(Vec<Pose9>, Pose9)> {
        if !t_norm.is_finite() {
            return Err(Error::InvalidConfig(format!("t_norm must be finite, got {t_norm}")));
        }
        let (m, c) = self.spline.forward_extrap_at(t_norm)?;
        Ok((m.iter().map(Pose9::from_state).collect(), Pose9::from_state(&c)))
    }

    pub fn posed_at(&self, t_norm: f64) -> Result<(Vec<PosedPrimitive>, CameraModel)> {
        let (b, c) = self.states_at(t_norm)?;
        scene_at(self.scene, &b, &c)
    }

    pub fn foreground_at(&self, t_norm: f64) -> Result<(Vec<Vector3<f64>>, RigidTransform)> {
        let (posed, cam) = self.posed_at(t_norm)?;
        Ok((
            posed.iter().filter(|p| p.is_foreground).map(|p| p.mean).collect(),
            cam.pose,
        ))
    }
}

/// Discrete scene from a Procrustes init: canonical means with the init's
/// coefficients and bases. Foreground appearance (by index) and the static
/// background are carried over from `source` when given.
pub fn fitted_scene(init: &InitResult, camera: CameraModel, source: Option<&DynamicScene>) -> DynamicScene {
    let src_fg: Vec<&GaussianPrimitive> = source
        .iter()
        .flat_map(|s| s.primitives.iter().filter(|g| g.is_foreground))
        .collect();
    let mut primitives: Vec<GaussianPrimitive> = init
        .canonical_means
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut g = src_fg
                .get(i)
                .map(|g| (*g).clone())
                .unwrap_or_else(|| GaussianPrimitive::point(*m, [0.8, 0.8, 0.8], true));
            g.mean0 = *m;
            g
        })
        .collect();
    let mut coefficients: Vec<_> = init.coefficients.iter().map(|c| Some(c.w.clone())).collect();
    for g in source.iter().flat_map(|s| s.primitives.iter().filter(|g| !g.is_foreground)) {
        primitives.push(g.clone());
        coefficients.push(None);
    }
    DynamicScene {
        primitives,
        coefficients,
        bases: init.bases.clone(),
        camera,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Past,
    Between,
    Future,
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Region::Past => "past",
            Region::Between => "between",
            Region::Future => "future",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub region: Region,
    /// Signed distance outside the observed span as a fraction of it
    /// (negative = past); 0 in between.
    pub offset: f64,
    pub t_norm: f64,
}

/// Past/future offsets from [`OFFSETS`] plus the midpoints between
/// consecutive observed timestamps, sorted by time.
pub fn temporal_grid(timestamps: &[f64]) -> Vec<TimeSample> {
    let mut g: Vec<TimeSample> = OFFSETS
        .iter()
        .flat_map(|&f| {
            [
                TimeSample { region: Region::Past, offset: -f, t_norm: -1.0 - 2.0 * f },
                TimeSample { region: Region::Future, offset: f, t_norm: 1.0 + 2.0 * f },
            ]
        })
        .chain(timestamps.windows(2).map(|w| TimeSample {
            region: Region::Between,
            offset: 0.0,
            t_norm: 0.5 * (w[0] + w[1]),
        }))
        .collect();
    g.sort_by(|a, b| a.t_norm.total_cmp(&b.t_norm));
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalError {
    pub sample: TimeSample,
    /// Mean Euclidean foreground position error.
    pub position: f64,
    pub camera_rotation: f64,
    /// Distance between predicted and true camera centers.
    pub camera_center: f64,
}

/// Ground truth at a time: foreground positions (primitive order; `None` for
/// points without truth there) and optionally the camera pose.
pub type Truth = (Vec<Option<Vector3<f64>>>, Option<RigidTransform>);

pub fn temporal_errors(
    model: &ContinuousScene,
    samples: &[TimeSample],
    truth: &dyn Fn(f64) -> Result<Truth>,
) -> Result<Vec<TemporalError>> {
    samples
        .iter()
        .map(|s| {
            let (pred, pose) = model.foreground_at(s.t_norm)?;
            let (gt, gt_pose) = truth(s.t_norm)?;
            if gt.len() != pred.len() {
                return Err(Error::DimensionMismatch(format!(
                    "model has {} foreground points, truth has {}",
                    pred.len(),
                    gt.len()
                )));
            }
            let errs: Vec<f64> = pred
                .iter()
                .zip(&gt)
                .filter_map(|(p, g)| g.map(|g| (p - g).norm()))
                .collect();
            let position = if errs.is_empty() {
                f64::NAN
            } else {
                errs.iter().sum::<f64>() / errs.len() as f64
            };
            let (camera_rotation, camera_center) = match gt_pose {
                Some(g) => (
                    pose.rotation.angle_to(&g.rotation),
                    (pose.inverse().translation - g.inverse().translation).norm(),
                ),
                None => (f64::NAN, f64::NAN),
            };
            Ok(TemporalError {
                sample: *s,
                position,
                camera_rotation,
                camera_center,
            })
        })
        .collect()
}

/// A novel-view camera displacement expressed in the source camera's frame.
pub trait CameraMove: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn default_magnitude(&self) -> f64;
    /// New world→camera pose.
    fn apply(&self, pose: &RigidTransform, magnitude: f64) -> RigidTransform;
}

#[derive(Debug)]
struct Identity;

impl CameraMove for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }
    fn default_magnitude(&self) -> f64 {
        0.0
    }
    fn apply(&self, pose: &RigidTransform, _: f64) -> RigidTransform {
        *pose
    }
}

/// Moves the camera center by `magnitude · dir` (camera frame; +y is down).
#[derive(Debug)]
struct Dolly {
    name: &'static str,
    dir: Vector3<f64>,
}

impl CameraMove for Dolly {
    fn name(&self) -> &'static str {
        self.name
    }
    fn default_magnitude(&self) -> f64 {
        0.5
    }
    fn apply(&self, pose: &RigidTransform, magnitude: f64) -> RigidTransform {
        RigidTransform::from_translation(-self.dir * magnitude).compose(pose)
    }
}

/// Swings the camera by `magnitude` radians about `axis` (camera frame)
/// through a pivot [`PIVOT_DISTANCE`] behind the optical center.
#[derive(Debug)]
struct Swing {
    name: &'static str,
    axis: Vector3<f64>,
}

impl CameraMove for Swing {
    fn name(&self) -> &'static str {
        self.name
    }
    fn default_magnitude(&self) -> f64 {
        0.1
    }
    fn apply(&self, pose: &RigidTransform, magnitude: f64) -> RigidTransform {
        let r = Rotation::from_axis_angle(&self.axis, magnitude);
        let pivot = Vector3::new(0.0, 0.0, -PIVOT_DISTANCE);
        let center = pivot - r.matrix() * pivot;
        let rt = r.transpose();
        let old_to_new = RigidTransform::new(rt, -(rt.matrix() * center));
        old_to_new.compose(pose)
    }
}

pub type CameraMoveFactory = fn() -> Box<dyn CameraMove>;

pub fn camera_move_registry() -> Registry<CameraMoveFactory> {
    let mut r: Registry<CameraMoveFactory> = Registry::new("camera move");
    r.register("identity", || Box::new(Identity))
        .register("dolly-out", || Box::new(Dolly { name: "dolly-out", dir: -Vector3::z() }))
        .register("dolly-right", || Box::new(Dolly { name: "dolly-right", dir: Vector3::x() }))
        .register("dolly-up", || Box::new(Dolly { name: "dolly-up", dir: -Vector3::y() }))
        .register("tilt-up", || Box::new(Swing { name: "tilt-up", axis: Vector3::x() }))
        .register("pan-right", || Box::new(Swing { name: "pan-right", axis: Vector3::y() }));
    r
}

pub fn camera_move(name: &str) -> Result<Box<dyn CameraMove>> {
    Ok((camera_move_registry().get(name)?)())
}

/// Pixel positions of points that win (or tie) the r = 0 z-buffer.
fn visible_pixels(points: &[SplatPoint], cam: &CameraModel) -> Vec<Option<nalgebra::Vector2<f64>>> {
    let zbuf = splat(points, cam, 0);
    points
        .iter()
        .map(|p| {
            let proj = cam.project(&p.position).ok()?;
            let (x, y) = ((proj.pixel.x + 0.5).floor(), (proj.pixel.y + 0.5).floor());
            if x < 0.0 || y < 0.0 || x >= cam.width as f64 || y >= cam.height as f64 {
                return None;
            }
            let d = zbuf.depth[y as usize * cam.width + x as usize];
            (proj.depth <= d * (1.0 + 1e-9)).then_some(proj.pixel)
        })
        .collect()
}

/// Projections of every 3D point visible in both views.
pub fn covisible_correspondences(
    posed: &[PosedPrimitive],
    a: &CameraModel,
    b: &CameraModel,
) -> Vec<Correspondence> {
    let pts: Vec<SplatPoint> = posed.iter().map(SplatPoint::from).collect();
    visible_pixels(&pts, a)
        .into_iter()
        .zip(visible_pixels(&pts, b))
        .filter_map(|(x1, x2)| Some(Correspondence { x1: x1?, x2: x2? }))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SpatialResult {
    pub move_name: &'static str,
    pub magnitude: f64,
    pub covisible: usize,
    pub metrics: EpipolarMetrics,
    pub source: ScaffoldFrame,
    pub novel: ScaffoldFrame,
}

pub fn spatial_consistency(
    model: &ContinuousScene,
    t_norm: f64,
    mv: &dyn CameraMove,
    magnitude: f64,
    mask: &MaskConfig,
    ransac: &RansacConfig,
) -> Result<SpatialResult> {
    if !magnitude.is_finite() {
        return Err(Error::InvalidConfig(format!("magnitude must be finite, got {magnitude}")));
    }
    let (posed, cam) = model.posed_at(t_norm)?;
    let novel_cam = cam.with_pose(mv.apply(&cam.pose, magnitude));
    let corr = covisible_correspondences(&posed, &cam, &novel_cam);
    if corr.len() < 8 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} covisible points, need >= 8",
            corr.len()
        )));
    }
    let metrics = epipolar_metrics(&corr, ransac)?;
    Ok(SpatialResult {
        move_name: mv.name(),
        magnitude,
        covisible: corr.len(),
        metrics,
        source: render_scaffold(&posed, &cam, mask),
        novel: render_scaffold(&posed, &novel_cam, mask),
    })
}

/// Scaffold at `t_norm`, optionally from a moved camera.
pub fn render_at(
    model: &ContinuousScene,
    t_norm: f64,
    mv: Option<(&dyn CameraMove, f64)>,
    mask: &MaskConfig,
) -> Result<ScaffoldFrame> {
    let (posed, mut cam) = model.posed_at(t_norm)?;
    if let Some((m, mag)) = mv {
        if !mag.is_finite() {
            return Err(Error::InvalidConfig(format!("magnitude must be finite, got {mag}")));
        }
        cam = cam.with_pose(m.apply(&cam.pose, mag));
    }
    Ok(render_scaffold(&posed, &cam, mask))
}
