//! Rotation and rigid-transform algebra, the 9-channel pose state, weighted
//! Procrustes alignment and pinhole projection.

use nalgebra::{Matrix3, Matrix4, SVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 9-channel pose state: `[rot6 (two rotation columns), translation]`.
pub type State9 = SVector<f64, 9>;

/// Channel index of the first translation component inside a [`State9`].
pub const TRANS_OFFSET: usize = 6;

const DEGENERATE_EPS: f64 = 1e-12;

/// Proper rotation in SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix without checking orthonormality.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 || angle == 0.0 {
            return Self::identity();
        }
        let k = axis / n;
        let kx = skew(&k);
        let m = Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos());
        Rotation(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    /// Geodesic angle (radians) between two rotations.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let rel = self.0.transpose() * other.0;
        let c = ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        // acos loses precision near zero; use the skew part there
        let s = 0.5
            * Vector3::new(
                rel[(2, 1)] - rel[(1, 2)],
                rel[(0, 2)] - rel[(2, 0)],
                rel[(1, 0)] - rel[(0, 1)],
            )
            .norm();
        s.atan2(c)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let rrt = self.0 * self.0.transpose();
        (rrt - Matrix3::identity()).amax() <= tol && (self.0.determinant() - 1.0).abs() <= tol
    }

    /// First two columns, column-major.
    pub fn to_rot6(&self) -> [f64; 6] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(1, 0)],
            m[(2, 0)],
            m[(0, 1)],
            m[(1, 1)],
            m[(2, 1)],
        ]
    }
}

/// Gram–Schmidt map from a 6-vector (two stacked 3-vectors) to SO(3).
pub fn rot6_to_rotation(rot6: &[f64; 6]) -> Result<Rotation> {
    let a1 = Vector3::new(rot6[0], rot6[1], rot6[2]);
    let a2 = Vector3::new(rot6[3], rot6[4], rot6[5]);
    let n1 = a1.norm();
    if !(n1 > DEGENERATE_EPS) {
        return Err(Error::DegenerateRotation(format!(
            "first rot6 column has norm {n1:e}"
        )));
    }
    let b1 = a1 / n1;
    let u2 = a2 - b1 * b1.dot(&a2);
    let n2 = u2.norm();
    let n_a2 = a2.norm();
    if !(n2 > DEGENERATE_EPS * n_a2.max(1.0)) {
        return Err(Error::DegenerateRotation(
            "rot6 columns are parallel".to_string(),
        ));
    }
    let b2 = u2 / n2;
    let b3 = b1.cross(&b2);
    Ok(Rotation(Matrix3::from_columns(&[b1, b2, b3])))
}

pub fn rotation_to_rot6(r: &Rotation) -> [f64; 6] {
    r.to_rot6()
}

/// `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(Rotation::identity(), t)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.matrix() * p + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.matrix() * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            translation: -(rt.matrix() * self.translation),
            rotation: rt,
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn apply(t: &RigidTransform, p: &Vector3<f64>) -> Vector3<f64> {
    t.apply(p)
}

/// Rotation (6) + translation (3) pose state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose9 {
    pub rot6: [f64; 6],
    pub trans: [f64; 3],
}

impl Pose9 {
    pub fn identity() -> Self {
        Self::from_rigid(&RigidTransform::identity())
    }

    pub fn from_rigid(t: &RigidTransform) -> Self {
        Pose9 {
            rot6: t.rotation.to_rot6(),
            trans: [t.translation.x, t.translation.y, t.translation.z],
        }
    }

    pub fn to_rigid(&self) -> Result<RigidTransform> {
        Ok(RigidTransform::new(
            rot6_to_rotation(&self.rot6)?,
            Vector3::from(self.trans),
        ))
    }

    pub fn to_state(&self) -> State9 {
        let mut s = State9::zeros();
        s.as_mut_slice()[..6].copy_from_slice(&self.rot6);
        s.as_mut_slice()[6..].copy_from_slice(&self.trans);
        s
    }

    pub fn from_state(s: &State9) -> Self {
        let v = s.as_slice();
        Pose9 {
            rot6: [v[0], v[1], v[2], v[3], v[4], v[5]],
            trans: [v[6], v[7], v[8]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rot6.iter().chain(self.trans.iter()).all(|v| v.is_finite())
    }
}

/// Weighted least-squares rigid alignment of `src` onto `dst`.
pub fn kabsch(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
    weights: &[f64],
) -> Result<RigidTransform> {
    if src.len() != dst.len() || src.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "kabsch: {} src, {} dst, {} weights",
            src.len(),
            dst.len(),
            weights.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::DegenerateConfiguration(format!(
            "kabsch needs >= 3 points, got {}",
            src.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::DegenerateConfiguration(
            "kabsch weights must be non-negative".to_string(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::DegenerateConfiguration(
            "kabsch weights sum to zero".to_string(),
        ));
    }
    let cs = src
        .iter()
        .zip(weights)
        .fold(Vector3::zeros(), |acc, (p, w)| acc + p * *w)
        / wsum;
    let cd = dst
        .iter()
        .zip(weights)
        .fold(Vector3::zeros(), |acc, (p, w)| acc + p * *w)
        / wsum;
    let mut h = Matrix3::zeros();
    let mut spread = 0.0;
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        let a = s - cs;
        h += (a * (d - cd).transpose()) * *w;
        spread += w * a.norm_squared();
    }
    // rank test on the source configuration so that dst = src collapses are
    // still handled when src itself is well spread
    let mut cov = Matrix3::zeros();
    for (s, w) in src.iter().zip(weights) {
        let a = s - cs;
        cov += (a * a.transpose()) * *w;
    }
    let cov_sv = cov.symmetric_eigenvalues();
    let mut ev: Vec<f64> = cov_sv.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if !(spread > 0.0) || ev[1] <= 1e-12 * ev[0].max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateConfiguration(
            "points are collinear or coincident".to_string(),
        ));
    }

    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let v = svd.v_t.unwrap().transpose();
    let sv = svd.singular_values;
    let smallest = (0..3)
        .min_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap())
        .unwrap();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(smallest, smallest)] = -1.0;
    }
    let r = v * d * u.transpose();
    let t = cd - r * cs;
    Ok(RigidTransform::new(Rotation(r), t))
}

/// Pinhole camera; `pose` maps world points into the camera frame (+z forward).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub pose: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Vector2<f64>,
    pub depth: f64,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let cam = CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose: RigidTransform::identity(),
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "camera intrinsics out of range: fx={} fy={} cx={} cy={} {}x{}",
                self.fx, self.fy, self.cx, self.cy, self.width, self.height
            )))
        }
    }

    pub fn with_pose(mut self, pose: RigidTransform) -> Self {
        self.pose = pose;
        self
    }

    pub fn intrinsic_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0,
        )
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        self.pose.inverse().translation
    }

    pub fn project(&self, p_world: &Vector3<f64>) -> Result<Projection> {
        let pc = self.pose.apply(p_world);
        if pc.z <= 1e-6 {
            return Err(Error::BehindCamera { depth: pc.z });
        }
        Ok(Projection {
            pixel: Vector2::new(
                self.fx * pc.x / pc.z + self.cx,
                self.fy * pc.y / pc.z + self.cy,
            ),
            depth: pc.z,
        })
    }
}

pub fn project(cam: &CameraModel, p_world: &Vector3<f64>) -> Result<Projection> {
    cam.project(p_world)
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::FRAC_PI_2;

    fn random_rotation(rng: &mut impl Rng) -> Rotation {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        Rotation::from_axis_angle(&axis, rng.random_range(-3.1..3.1))
    }

    fn random_transform(rng: &mut impl Rng) -> RigidTransform {
        RigidTransform::new(
            random_rotation(rng),
            Vector3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ),
        )
    }

    #[test]
    fn rot6_identity_and_scaled_identity() {
        let r = rot6_to_rotation(&[1., 0., 0., 0., 1., 0.]).unwrap();
        assert_eq!(r, Rotation::identity());
        let r = rot6_to_rotation(&[2., 0., 0., 0., 3., 0.]).unwrap();
        assert_eq!(r, Rotation::identity());
    }

    #[test]
    fn rot6_degenerate_inputs() {
        assert!(matches!(
            rot6_to_rotation(&[0.0; 6]),
            Err(Error::DegenerateRotation(_))
        ));
        assert!(matches!(
            rot6_to_rotation(&[1., 2., 3., 2., 4., 6.]),
            Err(Error::DegenerateRotation(_))
        ));
    }

    #[test]
    fn rot6_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let r = random_rotation(&mut rng);
            let back = rot6_to_rotation(&rotation_to_rot6(&r)).unwrap();
            assert!((back.matrix() - r.matrix()).amax() < 1e-9);
            assert!(back.is_valid(1e-9));
        }
    }

    #[test]
    fn compose_matches_homogeneous_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let c = compose(&a, &b).to_homogeneous();
            let oracle = a.to_homogeneous() * b.to_homogeneous();
            assert!((c - oracle).amax() < 1e-12);
            let id = compose(&a, &a.inverse());
            assert!((id.to_homogeneous() - Matrix4::identity()).amax() < 1e-9);
            assert_eq!(compose(&a, &RigidTransform::identity()), a);
        }
    }

    #[test]
    fn compose_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b, c) = (
                random_transform(&mut rng),
                random_transform(&mut rng),
                random_transform(&mut rng),
            );
            let l = compose(&compose(&a, &b), &c).to_homogeneous();
            let r = compose(&a, &compose(&b, &c)).to_homogeneous();
            assert!((l - r).amax() < 1e-12);
        }
    }

    #[test]
    fn apply_examples() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(apply(&RigidTransform::identity(), &p), p);
        let rz = RigidTransform::new(
            Rotation::from_axis_angle(&Vector3::z(), FRAC_PI_2),
            Vector3::zeros(),
        );
        let q = apply(&rz, &Vector3::x());
        assert_relative_eq!(q, Vector3::y(), epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let t = random_transform(&mut rng);
            let x = Vector3::new(rng.random(), rng.random(), rng.random());
            let h = t.to_homogeneous() * Vector4::new(x.x, x.y, x.z, 1.0);
            assert!((apply(&t, &x) - h.xyz()).amax() < 1e-12);
        }
    }

    fn cloud(rng: &mut impl Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    }

    #[test]
    fn kabsch_identity_and_exact_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = cloud(&mut rng, 10);
        let w = vec![1.0; 10];
        let t = kabsch(&src, &src, &w).unwrap();
        assert!((t.to_homogeneous() - Matrix4::identity()).amax() < 1e-12);

        for n in [3usize, 4, 10, 50] {
            for _ in 0..20 {
                let truth = random_transform(&mut rng);
                let src = cloud(&mut rng, n);
                let dst: Vec<_> = src.iter().map(|p| truth.apply(p)).collect();
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
                let est = kabsch(&src, &dst, &w).unwrap();
                assert!((est.to_homogeneous() - truth.to_homogeneous()).amax() < 1e-9);
                assert!(est.rotation.is_valid(1e-9));
                let res: f64 = src
                    .iter()
                    .zip(&dst)
                    .map(|(s, d)| (est.apply(s) - d).norm())
                    .fold(0.0, f64::max);
                assert!(res < 1e-9);
            }
        }
    }

    #[test]
    fn kabsch_noisy_residual_bounded() {
        let sigma = 1e-3;
        let noise = Normal::new(0.0, sigma).unwrap();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let truth = random_transform(&mut rng);
            let src = cloud(&mut rng, 30);
            let dst: Vec<_> = src
                .iter()
                .map(|p| {
                    truth.apply(p)
                        + Vector3::new(
                            noise.sample(&mut rng),
                            noise.sample(&mut rng),
                            noise.sample(&mut rng),
                        )
                })
                .collect();
            let est = kabsch(&src, &dst, &vec![1.0; 30]).unwrap();
            let rms = (src
                .iter()
                .zip(&dst)
                .map(|(s, d)| (est.apply(s) - d).norm_squared())
                .sum::<f64>()
                / 30.0)
                .sqrt();
            assert!(rms <= 3.0 * sigma, "seed {seed}: rms {rms}");
        }
    }

    #[test]
    fn kabsch_corrects_reflection() {
        // a planar configuration mirrored through its plane admits a reflection
        // with zero residual; the estimate must still be a proper rotation
        let src = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
        ];
        let dst: Vec<_> = src.iter().map(|p| Vector3::new(p.x, -p.y, p.z)).collect();
        let est = kabsch(&src, &dst, &[1.0; 4]).unwrap();
        assert!(est.rotation.is_valid(1e-9));
    }

    #[test]
    fn kabsch_rejects_collinear() {
        let src: Vec<_> = (0..5).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        let r = kabsch(&src, &src, &[1.0; 5]);
        assert!(matches!(r, Err(Error::DegenerateConfiguration(_))));
        let same = vec![Vector3::new(1.0, 1.0, 1.0); 4];
        assert!(kabsch(&same, &same, &[1.0; 4]).is_err());
    }

    fn cam() -> CameraModel {
        CameraModel::new(100.0, 110.0, 64.0, 48.0, 128, 96).unwrap()
    }

    #[test]
    fn project_examples() {
        let c = cam();
        let p = c.project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(p.pixel, Vector2::new(64.0, 48.0));
        assert_eq!(p.depth, 1.0);

        let (px, py, z) = (10.0, 70.0, 3.5);
        let p = c
            .project(&Vector3::new(z * (px - c.cx) / c.fx, z * (py - c.cy) / c.fy, z))
            .unwrap();
        assert_relative_eq!(p.pixel, Vector2::new(px, py), epsilon = 1e-12);

        assert!(matches!(
            c.project(&Vector3::new(0.0, 0.0, -1.0)),
            Err(Error::BehindCamera { .. })
        ));
    }

    #[test]
    fn project_matches_projection_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let pose = random_transform(&mut rng);
            let c = cam().with_pose(pose);
            let x = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let k = c.intrinsic_matrix();
            let h = pose.to_homogeneous();
            let rt = h.fixed_view::<3, 4>(0, 0);
            let pm = k * rt;
            let xh = pm * Vector4::new(x.x, x.y, x.z, 1.0);
            match c.project(&x) {
                Ok(p) => {
                    assert_relative_eq!(p.pixel.x, xh.x / xh.z, epsilon = 1e-9);
                    assert_relative_eq!(p.pixel.y, xh.y / xh.z, epsilon = 1e-9);
                    assert_relative_eq!(p.depth, xh.z, epsilon = 1e-12);
                }
                Err(_) => assert!(xh.z <= 1e-6),
            }
        }
    }

    #[test]
    fn project_scale_consistency() {
        let base = cam();
        let s = 4.0;
        let scaled = CameraModel::new(
            base.fx * s,
            base.fy * s,
            base.cx * s,
            base.cy * s,
            base.width * 4,
            base.height * 4,
        )
        .unwrap();
        let x = Vector3::new(0.3, -0.2, 2.0);
        let a = base.project(&x).unwrap();
        let b = scaled.project(&x).unwrap();
        assert_eq!(a.pixel * s, b.pixel);
    }

    #[test]
    fn invalid_intrinsics() {
        assert!(CameraModel::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraModel::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn pose9_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let back = Pose9::from_rigid(&t).to_rigid().unwrap();
            assert!((back.to_homogeneous() - t.to_homogeneous()).amax() < 1e-9);
            let p = Pose9::from_rigid(&t);
            assert_eq!(Pose9::from_state(&p.to_state()), p);
        }
    }
}
