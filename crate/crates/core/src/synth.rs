//! Analytic synthetic worlds: rigid bodies on closed-form trajectories seen
//! by a camera on a closed-form path, sampled into discrete observations and
//! queryable exactly at any continuous time.

use std::fmt::Debug;

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::TrackSet;
use crate::geometry::{CameraModel, Pose9, RigidTransform, Rotation};
use crate::motion::{DiscreteMotionBases, DynamicScene, GaussianPrimitive, Track};
use crate::registry::Registry;
use crate::scaffold::{splat, SplatPoint};

/// Half-extent of the cube each rigid body's points are drawn from.
const BODY_HALF_EXTENT: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MotionKind {
    ConstantVelocity {
        velocity: [f64; 3],
    },
    Projectile {
        g: f64,
        initial_velocity: [f64; 3],
    },
    CircularOrbit {
        radius: f64,
        angular_velocity: f64,
    },
    RigidTumble {
        axis: [f64; 3],
        angular_velocity: f64,
        linear_velocity: [f64; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CameraPathKind {
    Static,
    Dolly { direction: [f64; 3], speed: f64 },
    Pan { rate: f64 },
    Tilt { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Intrinsics {
            fx: 120.0,
            fy: 120.0,
            cx: 80.0,
            cy: 60.0,
            width: 160,
            height: 120,
        }
    }
}

impl Intrinsics {
    pub fn camera(&self) -> Result<CameraModel> {
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)
    }

    pub fn of(cam: &CameraModel) -> Self {
        Intrinsics {
            fx: cam.fx,
            fy: cam.fy,
            cx: cam.cx,
            cy: cam.cy,
            width: cam.width,
            height: cam.height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSceneSpec {
    pub motion: MotionKind,
    /// Optional independent second rigid body (two-body scenes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_body: Option<MotionKind>,
    pub camera_path: CameraPathKind,
    pub num_foreground: usize,
    pub num_background: usize,
    /// Physical seconds `(t_start, t_end)` of the observed span.
    pub time_span: [f64; 2],
    pub seed: u64,
    #[serde(default)]
    pub intrinsics: Intrinsics,
}

impl AnalyticSceneSpec {
    pub fn new(motion: MotionKind) -> Self {
        AnalyticSceneSpec {
            motion,
            second_body: None,
            camera_path: CameraPathKind::Static,
            num_foreground: 200,
            num_background: 3000,
            time_span: [0.0, 1.0],
            seed: 0,
            intrinsics: Intrinsics::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let [t0, t1] = self.time_span;
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return bad(format!("time_span: need t_end > t_start, got [{t0}, {t1}]"));
        }
        if self.num_foreground < 1 || self.num_background < 1 {
            return bad("num_foreground and num_background must be >= 1".into());
        }
        let bodies = 1 + self.second_body.is_some() as usize;
        if self.num_foreground < bodies {
            return bad(format!("need at least {bodies} foreground points"));
        }
        for (name, m) in [("motion", Some(&self.motion)), ("second_body", self.second_body.as_ref())] {
            if let Some(m) = m {
                validate_motion(m).map_err(|e| Error::InvalidSpec(format!("{name}: {e}")))?;
            }
        }
        match &self.camera_path {
            CameraPathKind::Dolly { direction, speed } => {
                if !speed.is_finite() || Vector3::from(*direction).norm() < 1e-12 {
                    return bad("camera_path: dolly needs a nonzero direction".into());
                }
            }
            CameraPathKind::Pan { rate } | CameraPathKind::Tilt { rate } if !rate.is_finite() => {
                return bad("camera_path: non-finite rate".into());
            }
            _ => {}
        }
        self.intrinsics
            .camera()
            .map(|_| ())
            .map_err(|e| Error::InvalidSpec(format!("intrinsics: {e}")))
    }
}

fn validate_motion(m: &MotionKind) -> std::result::Result<(), String> {
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    match m {
        MotionKind::ConstantVelocity { velocity } if !finite(velocity) => Err("non-finite velocity".into()),
        MotionKind::Projectile { g, initial_velocity } if !finite(initial_velocity) || !g.is_finite() => {
            Err("non-finite projectile parameters".into())
        }
        MotionKind::CircularOrbit { radius, angular_velocity } if !(*radius > 0.0) || !angular_velocity.is_finite() => {
            Err("circular_orbit needs radius > 0".into())
        }
        MotionKind::RigidTumble { axis, angular_velocity, linear_velocity }
            if Vector3::from(*axis).norm() < 1e-12 || !angular_velocity.is_finite() || !finite(linear_velocity) =>
        {
            Err("rigid_tumble needs a nonzero axis".into())
        }
        _ => Ok(()),
    }
}

/// Closed-form rigid motion of one body: maps the body's points at
/// `t_start` to their positions `tau` seconds later.
pub trait BodyMotion: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn transform_at(&self, tau: f64) -> RigidTransform;
}

/// Closed-form world→camera pose `tau` seconds after `t_start`.
pub trait CameraPath: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn pose_at(&self, tau: f64) -> RigidTransform;
}

#[derive(Debug)]
struct ConstantVelocity(Vector3<f64>);

impl BodyMotion for ConstantVelocity {
    fn name(&self) -> &'static str {
        "constant_velocity"
    }
    fn transform_at(&self, tau: f64) -> RigidTransform {
        RigidTransform::from_translation(self.0 * tau)
    }
}

#[derive(Debug)]
struct Projectile {
    v0: Vector3<f64>,
    g: f64,
}

impl BodyMotion for Projectile {
    fn name(&self) -> &'static str {
        "projectile"
    }
    fn transform_at(&self, tau: f64) -> RigidTransform {
        let gravity = Vector3::new(0.0, -self.g, 0.0);
        RigidTransform::from_translation(self.v0 * tau + gravity * (0.5 * tau * tau))
    }
}

/// Translation along a circle in the xy-plane; starts at angle 0 so the
/// orbit center sits `radius` along -x from the body.
#[derive(Debug)]
struct CircularOrbit {
    radius: f64,
    omega: f64,
}

impl BodyMotion for CircularOrbit {
    fn name(&self) -> &'static str {
        "circular_orbit"
    }
    fn transform_at(&self, tau: f64) -> RigidTransform {
        let a = self.omega * tau;
        RigidTransform::from_translation(Vector3::new(
            self.radius * (a.cos() - 1.0),
            self.radius * a.sin(),
            0.0,
        ))
    }
}

/// Spin about an axis through the body's anchor while drifting linearly.
#[derive(Debug)]
struct RigidTumble {
    axis: Vector3<f64>,
    omega: f64,
    v: Vector3<f64>,
    anchor: Vector3<f64>,
}

impl BodyMotion for RigidTumble {
    fn name(&self) -> &'static str {
        "rigid_tumble"
    }
    fn transform_at(&self, tau: f64) -> RigidTransform {
        let r = Rotation::from_axis_angle(&self.axis, self.omega * tau);
        let t = self.anchor - r.matrix() * self.anchor + self.v * tau;
        RigidTransform::new(r, t)
    }
}

#[derive(Debug)]
struct StaticCamera;

impl CameraPath for StaticCamera {
    fn name(&self) -> &'static str {
        "static"
    }
    fn pose_at(&self, _: f64) -> RigidTransform {
        RigidTransform::identity()
    }
}

#[derive(Debug)]
struct Dolly(Vector3<f64>);

impl CameraPath for Dolly {
    fn name(&self) -> &'static str {
        "dolly"
    }
    fn pose_at(&self, tau: f64) -> RigidTransform {
        RigidTransform::from_translation(-self.0 * tau)
    }
}

/// Rotation in place about a world axis; positive pan looks right (+x),
/// positive tilt looks up (-y in camera convention).
#[derive(Debug)]
struct Swivel {
    name: &'static str,
    axis: Vector3<f64>,
    rate: f64,
}

impl CameraPath for Swivel {
    fn name(&self) -> &'static str {
        self.name
    }
    fn pose_at(&self, tau: f64) -> RigidTransform {
        let cam_to_world = Rotation::from_axis_angle(&self.axis, self.rate * tau);
        RigidTransform::new(cam_to_world.transpose(), Vector3::zeros())
    }
}

/// CLI-facing parameters shared by every registered motion/camera variant;
/// each factory reads the fields it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct KindParams {
    pub velocity: [f64; 3],
    pub g: f64,
    pub radius: f64,
    pub angular_velocity: f64,
    pub axis: [f64; 3],
    pub direction: [f64; 3],
    pub speed: f64,
    pub rate: f64,
}

impl Default for KindParams {
    fn default() -> Self {
        KindParams {
            velocity: [1.0, 0.0, 0.0],
            g: 9.8,
            radius: 1.0,
            angular_velocity: std::f64::consts::FRAC_PI_2,
            axis: [0.0, 0.0, 1.0],
            direction: [0.0, 0.0, -1.0],
            speed: 0.5,
            rate: 0.2,
        }
    }
}

pub type MotionFactory = fn(&KindParams) -> MotionKind;
pub type CameraPathFactory = fn(&KindParams) -> CameraPathKind;

pub fn motion_registry() -> Registry<MotionFactory> {
    let mut r: Registry<MotionFactory> = Registry::new("motion kind");
    r.register("constant_velocity", |p| MotionKind::ConstantVelocity { velocity: p.velocity })
        .register("projectile", |p| MotionKind::Projectile {
            g: p.g,
            initial_velocity: p.velocity,
        })
        .register("circular_orbit", |p| MotionKind::CircularOrbit {
            radius: p.radius,
            angular_velocity: p.angular_velocity,
        })
        .register("rigid_tumble", |p| MotionKind::RigidTumble {
            axis: p.axis,
            angular_velocity: p.angular_velocity,
            linear_velocity: p.velocity,
        });
    r
}

pub fn camera_path_registry() -> Registry<CameraPathFactory> {
    let mut r: Registry<CameraPathFactory> = Registry::new("camera path");
    r.register("static", |_| CameraPathKind::Static)
        .register("dolly", |p| CameraPathKind::Dolly {
            direction: p.direction,
            speed: p.speed,
        })
        .register("pan", |p| CameraPathKind::Pan { rate: p.rate })
        .register("tilt", |p| CameraPathKind::Tilt { rate: p.rate });
    r
}

impl MotionKind {
    pub fn build(&self, anchor: Vector3<f64>) -> Box<dyn BodyMotion> {
        match self {
            MotionKind::ConstantVelocity { velocity } => Box::new(ConstantVelocity((*velocity).into())),
            MotionKind::Projectile { g, initial_velocity } => Box::new(Projectile {
                v0: (*initial_velocity).into(),
                g: *g,
            }),
            MotionKind::CircularOrbit { radius, angular_velocity } => Box::new(CircularOrbit {
                radius: *radius,
                omega: *angular_velocity,
            }),
            MotionKind::RigidTumble { axis, angular_velocity, linear_velocity } => Box::new(RigidTumble {
                axis: Vector3::from(*axis).normalize(),
                omega: *angular_velocity,
                v: (*linear_velocity).into(),
                anchor,
            }),
        }
    }
}

impl CameraPathKind {
    pub fn build(&self) -> Box<dyn CameraPath> {
        match self {
            CameraPathKind::Static => Box::new(StaticCamera),
            CameraPathKind::Dolly { direction, speed } => {
                Box::new(Dolly(Vector3::from(*direction).normalize() * *speed))
            }
            CameraPathKind::Pan { rate } => Box::new(Swivel {
                name: "pan",
                axis: Vector3::y(),
                rate: *rate,
            }),
            CameraPathKind::Tilt { rate } => Box::new(Swivel {
                name: "tilt",
                axis: Vector3::x(),
                rate: *rate,
            }),
        }
    }
}

/// Discrete observations sampled from a world.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledObservation {
    pub timestamps: Vec<f64>,
    /// Foreground tracks, `[point][frame]`.
    pub tracks3d: Vec<Vec<Vector3<f64>>>,
    pub camera_poses: Vec<CameraModel>,
    /// Row-major depth maps, `+inf` where empty.
    pub depth_maps: Vec<Vec<f64>>,
    pub noise_sigma: f64,
}

impl SampledObservation {
    pub fn to_track_set(&self) -> TrackSet {
        TrackSet {
            timestamps: self.timestamps.clone(),
            tracks: self
                .tracks3d
                .iter()
                .map(|tr| tr.iter().map(|p| Some(*p)).collect::<Track>())
                .collect(),
            camera_states: self
                .camera_poses
                .iter()
                .map(|c| Pose9::from_rigid(&c.pose))
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct SyntheticWorld {
    pub spec: AnalyticSceneSpec,
    pub camera: CameraModel,
    /// Foreground primitives first, then background.
    pub primitives: Vec<GaussianPrimitive>,
    /// Body index of each foreground primitive.
    pub body_of: Vec<usize>,
    bodies: Vec<Box<dyn BodyMotion>>,
    camera_path: Box<dyn CameraPath>,
}

pub fn uniform_timestamps(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![-1.0],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    1.0
                } else {
                    -1.0 + 2.0 * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

const BG_NEAR: f64 = 10.0;
const BG_FAR: f64 = 10.4;

pub fn generate_scene(spec: &AnalyticSceneSpec) -> Result<SyntheticWorld> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let camera = spec.intrinsics.camera()?;

    let anchors: Vec<Vector3<f64>> = match spec.second_body {
        None => vec![Vector3::new(0.0, 0.0, 5.0)],
        Some(_) => vec![Vector3::new(-1.2, 0.0, 5.0), Vector3::new(1.2, 0.0, 5.0)],
    };
    let kinds: Vec<&MotionKind> = std::iter::once(&spec.motion)
        .chain(spec.second_body.as_ref())
        .collect();
    let bodies: Vec<Box<dyn BodyMotion>> = kinds
        .iter()
        .zip(&anchors)
        .map(|(k, a)| k.build(*a))
        .collect();

    let mut primitives = Vec::with_capacity(spec.num_foreground + spec.num_background);
    let mut body_of = Vec::with_capacity(spec.num_foreground);
    for i in 0..spec.num_foreground {
        let b = i % bodies.len();
        let offset = Vector3::from_fn(|_, _| rng.random_range(-BODY_HALF_EXTENT..BODY_HALF_EXTENT));
        let tint = rng.random_range(0.0..0.3);
        let color = if b == 0 { [0.9, 0.2 + tint, 0.1] } else { [0.1, 0.3 + tint, 0.9] };
        primitives.push(GaussianPrimitive::point(anchors[b] + offset, color, true));
        body_of.push(b);
    }
    // background: a thin box (depth 10..10.4, under the default 5% relative
    // depth threshold) so depth edges only appear at real occlusion
    // boundaries; sized at the near face so it lies inside the initial frustum
    let half_w = BG_NEAR * (camera.width as f64 - camera.cx).max(camera.cx) / camera.fx;
    let half_h = BG_NEAR * (camera.height as f64 - camera.cy).max(camera.cy) / camera.fy;
    let start_pose_inv = spec.camera_path.build().pose_at(0.0).inverse();
    for _ in 0..spec.num_background {
        let local = Vector3::new(
            rng.random_range(-half_w..half_w),
            rng.random_range(-half_h..half_h),
            rng.random_range(BG_NEAR..BG_FAR),
        );
        let g = rng.random_range(0.3..0.7);
        primitives.push(GaussianPrimitive::point(start_pose_inv.apply(&local), [g, g, g + 0.1], false));
    }

    Ok(SyntheticWorld {
        spec: spec.clone(),
        camera,
        primitives,
        body_of,
        bodies,
        camera_path: spec.camera_path.build(),
    })
}

impl SyntheticWorld {
    pub fn num_bodies(&self) -> usize {
        self.bodies.len()
    }

    pub fn num_foreground(&self) -> usize {
        self.body_of.len()
    }

    /// Seconds since `t_start` for a normalized time (any real value).
    pub fn tau(&self, t_norm: f64) -> f64 {
        let [t0, t1] = self.spec.time_span;
        (t_norm + 1.0) * 0.5 * (t1 - t0)
    }

    pub fn body_transform(&self, body: usize, t_norm: f64) -> RigidTransform {
        self.bodies[body].transform_at(self.tau(t_norm))
    }

    pub fn camera_pose(&self, t_norm: f64) -> RigidTransform {
        self.camera_path.pose_at(self.tau(t_norm))
    }

    /// Exact foreground positions (in primitive order) and world→camera pose.
    pub fn ground_truth_at(&self, t_norm: f64) -> (Vec<Vector3<f64>>, RigidTransform) {
        let tr: Vec<RigidTransform> = (0..self.num_bodies())
            .map(|b| self.body_transform(b, t_norm))
            .collect();
        let pos = self
            .body_of
            .iter()
            .zip(&self.primitives)
            .map(|(b, g)| tr[*b].apply(&g.mean0))
            .collect();
        (pos, self.camera_pose(t_norm))
    }

    /// Every primitive (foreground moved, background static) at `t_norm`.
    pub fn splat_points_at(&self, t_norm: f64) -> Vec<SplatPoint> {
        let (fg, _) = self.ground_truth_at(t_norm);
        self.primitives
            .iter()
            .enumerate()
            .map(|(i, g)| SplatPoint {
                position: fg.get(i).copied().unwrap_or(g.mean0),
                color: g.color,
                opacity: g.opacity,
            })
            .collect()
    }

    /// Uniform timestamps, exact camera poses, tracks with isotropic
    /// Gaussian noise and splatted depth maps of the noiseless scene.
    pub fn sample_discrete(&self, num_frames: usize, noise_sigma: f64) -> Result<SampledObservation> {
        if num_frames < 2 {
            return Err(Error::InvalidSpec(format!("num_frames must be >= 2, got {num_frames}")));
        }
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::InvalidSpec("noise_sigma must be >= 0".into()));
        }
        let timestamps = uniform_timestamps(num_frames);
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0x6e6f_6973_6521);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut tracks3d = vec![Vec::with_capacity(num_frames); self.num_foreground()];
        let mut camera_poses = Vec::with_capacity(num_frames);
        let mut depth_maps = Vec::with_capacity(num_frames);
        for &t in &timestamps {
            let (pos, pose) = self.ground_truth_at(t);
            for (track, p) in tracks3d.iter_mut().zip(pos) {
                let n = Vector3::from_fn(|_, _| normal.sample(&mut rng));
                track.push(if noise_sigma > 0.0 { p + n * noise_sigma } else { p });
            }
            let cam = self.camera.with_pose(pose);
            depth_maps.push(splat(&self.splat_points_at(t), &cam, 1).depth);
            camera_poses.push(cam);
        }
        Ok(SampledObservation {
            timestamps,
            tracks3d,
            camera_poses,
            depth_maps,
            noise_sigma,
        })
    }

    /// The exact discrete scene: one basis per body (its transform at each
    /// timestamp), one-hot coefficients, canonical points at `t_norm = -1`.
    pub fn dynamic_scene(&self, timestamps: &[f64]) -> DynamicScene {
        let k = self.num_bodies();
        let bases = DiscreteMotionBases {
            timestamps: timestamps.to_vec(),
            basis_states: (0..k)
                .map(|b| {
                    timestamps
                        .iter()
                        .map(|t| Pose9::from_rigid(&self.body_transform(b, *t)))
                        .collect()
                })
                .collect(),
            camera_states: timestamps
                .iter()
                .map(|t| Pose9::from_rigid(&self.camera_pose(*t)))
                .collect(),
        };
        let coefficients = self
            .primitives
            .iter()
            .enumerate()
            .map(|(i, g)| {
                g.is_foreground.then(|| {
                    let mut w = DVector::zeros(k);
                    w[self.body_of[i]] = 1.0;
                    w
                })
            })
            .collect();
        DynamicScene {
            primitives: self.primitives.clone(),
            coefficients,
            bases,
            camera: self.camera,
        }
    }
}
