//! Point-splat projection of a posed scene into a 2D scaffold, plus the
//! three-rule inpainting mask (never observed, low confidence, depth edge).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::motion::PosedPrimitive;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    pub opacity_threshold: f64,
    pub rel_depth_threshold: f64,
    pub splat_radius: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            opacity_threshold: 0.1,
            rel_depth_threshold: 0.05,
            splat_radius: 1,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.opacity_threshold > 0.0 && self.opacity_threshold <= 1.0) {
            return Err(Error::InvalidConfig(
                "opacity_threshold must lie in (0, 1]".into(),
            ));
        }
        if !(self.rel_depth_threshold > 0.0) || !self.rel_depth_threshold.is_finite() {
            return Err(Error::InvalidConfig("rel_depth_threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// Anything that can be splatted: a world position with color and opacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatPoint {
    pub position: Vector3<f64>,
    pub color: [f64; 3],
    pub opacity: f64,
}

impl From<&PosedPrimitive> for SplatPoint {
    fn from(p: &PosedPrimitive) -> Self {
        SplatPoint {
            position: p.mean,
            color: p.color,
            opacity: p.opacity,
        }
    }
}

/// Row-major H×W buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaffoldFrame {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[f64; 3]>,
    /// Scene units; `+inf` where nothing landed.
    pub depth: Vec<f64>,
    pub coverage: Vec<u32>,
    /// Opacity of the depth-winning splat (0 where empty).
    pub opacity: Vec<f64>,
    /// `true` = to be inpainted.
    pub mask: Vec<bool>,
}

impl ScaffoldFrame {
    pub fn empty(width: usize, height: usize) -> Self {
        let n = width * height;
        ScaffoldFrame {
            width,
            height,
            color: vec![[0.0; 3]; n],
            depth: vec![f64::INFINITY; n],
            coverage: vec![0; n],
            opacity: vec![0.0; n],
            mask: vec![true; n],
        }
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn mask_fraction(&self) -> f64 {
        self.mask.iter().filter(|m| **m).count() as f64 / self.mask.len().max(1) as f64
    }
}

/// Nearest-depth-wins splatting into a (2r+1)² neighbourhood around the
/// rounded projection. Points behind the camera or whose center pixel falls
/// outside the image are skipped.
pub fn splat(points: &[SplatPoint], cam: &CameraModel, splat_radius: usize) -> ScaffoldFrame {
    let (w, h) = (cam.width, cam.height);
    let mut f = ScaffoldFrame::empty(w, h);
    let r = splat_radius as i64;
    for p in points {
        let Ok(proj) = cam.project(&p.position) else {
            continue;
        };
        let px = (proj.pixel.x + 0.5).floor();
        let py = (proj.pixel.y + 0.5).floor();
        if !(px >= 0.0 && py >= 0.0 && px < w as f64 && py < h as f64) {
            continue;
        }
        let (px, py) = (px as i64, py as i64);
        for y in (py - r).max(0)..=(py + r).min(h as i64 - 1) {
            for x in (px - r).max(0)..=(px + r).min(w as i64 - 1) {
                let i = y as usize * w + x as usize;
                f.coverage[i] += 1;
                if proj.depth < f.depth[i] {
                    f.depth[i] = proj.depth;
                    f.color[i] = p.color;
                    f.opacity[i] = p.opacity;
                }
            }
        }
    }
    f.mask = f.coverage.iter().map(|c| *c == 0).collect();
    f
}

pub fn relative_depth_difference(d1: f64, d2: f64) -> f64 {
    (d1 - d2).abs() / d1.min(d2)
}

/// Union of the three rules; the result is stored in `frame.mask` and returned.
pub fn build_mask(frame: &mut ScaffoldFrame, opacities: &[f64], cfg: &MaskConfig) -> Vec<bool> {
    let (w, h) = (frame.width, frame.height);
    let mut mask: Vec<bool> = frame
        .coverage
        .iter()
        .zip(opacities)
        .map(|(c, o)| *c == 0 || *o < cfg.opacity_threshold)
        .collect();
    let covered = |i: usize| frame.coverage[i] > 0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !covered(i) {
                continue;
            }
            // right and down neighbours; mark both ends of an offending edge
            for j in [
                (x + 1 < w).then_some(i + 1),
                (y + 1 < h).then_some(i + w),
            ]
            .into_iter()
            .flatten()
            {
                if covered(j)
                    && relative_depth_difference(frame.depth[i], frame.depth[j])
                        > cfg.rel_depth_threshold
                {
                    mask[i] = true;
                    mask[j] = true;
                }
            }
        }
    }
    frame.mask = mask.clone();
    mask
}

/// Splat a posed scene and build its mask using the winning-splat opacities.
pub fn render_scaffold(
    posed: &[PosedPrimitive],
    cam: &CameraModel,
    cfg: &MaskConfig,
) -> ScaffoldFrame {
    let pts: Vec<SplatPoint> = posed.iter().map(SplatPoint::from).collect();
    let mut frame = splat(&pts, cam, cfg.splat_radius);
    let op = frame.opacity.clone();
    build_mask(&mut frame, &op, cfg);
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RigidTransform;

    fn cam(w: usize, h: usize) -> CameraModel {
        CameraModel::new(100.0, 100.0, w as f64 / 2.0, h as f64 / 2.0, w, h).unwrap()
    }

    fn pt(x: f64, y: f64, z: f64) -> SplatPoint {
        SplatPoint {
            position: Vector3::new(x, y, z),
            color: [1.0, 0.5, 0.0],
            opacity: 1.0,
        }
    }

    /// A point whose projection lands on pixel (u, v) at depth z.
    fn at_pixel(c: &CameraModel, u: f64, v: f64, z: f64) -> SplatPoint {
        pt((u - c.cx) * z / c.fx, (v - c.cy) * z / c.fy, z)
    }

    #[test]
    fn empty_scene() {
        let f = splat(&[], &cam(8, 6), 1);
        assert!(f.coverage.iter().all(|c| *c == 0));
        assert!(f.depth.iter().all(|d| *d == f64::INFINITY));
        assert!(f.mask.iter().all(|m| *m));
    }

    #[test]
    fn single_center_point_r0() {
        let c = cam(8, 6);
        let f = splat(&[pt(0.0, 0.0, 2.0)], &c, 0);
        assert_eq!(f.coverage.iter().sum::<u32>(), 1);
        assert_eq!(f.coverage[f.index(4, 3)], 1);
        assert_eq!(f.depth[f.index(4, 3)], 2.0);
    }

    #[test]
    fn nearer_point_wins() {
        let c = cam(8, 6);
        let mut far = pt(0.0, 0.0, 2.0);
        far.color = [0.0, 0.0, 1.0];
        let near = pt(0.0, 0.0, 1.0);
        for order in [[far, near], [near, far]] {
            let f = splat(&order, &c, 0);
            let i = f.index(4, 3);
            assert_eq!(f.depth[i], 1.0);
            assert_eq!(f.color[i], near.color);
            assert_eq!(f.coverage[i], 2);
        }
    }

    #[test]
    fn behind_and_out_of_frame_skipped() {
        let c = cam(8, 6);
        let f = splat(&[pt(0.0, 0.0, -1.0), pt(100.0, 0.0, 1.0)], &c, 1);
        assert!(f.coverage.iter().all(|c| *c == 0));
    }

    #[test]
    fn radius_footprint_clipped_at_border() {
        let c = cam(8, 6);
        let f = splat(&[at_pixel(&c, 0.0, 0.0, 1.0)], &c, 1);
        assert_eq!(f.coverage.iter().sum::<u32>(), 4);
    }

    fn full_frame(c: &CameraModel, depth: impl Fn(usize, usize) -> f64) -> ScaffoldFrame {
        let mut pts = Vec::new();
        for y in 0..c.height {
            for x in 0..c.width {
                pts.push(at_pixel(c, x as f64, y as f64, depth(x, y)));
            }
        }
        splat(&pts, c, 0)
    }

    #[test]
    fn constant_depth_fully_covered_is_unmasked() {
        let c = cam(10, 8);
        let mut f = full_frame(&c, |_, _| 3.0);
        let op = vec![1.0; 80];
        let m = build_mask(&mut f, &op, &MaskConfig::default());
        assert!(m.iter().all(|v| !*v));
        assert_eq!(f.mask, m);
    }

    #[test]
    fn depth_step_masks_both_sides() {
        let c = cam(10, 8);
        let mut f = full_frame(&c, |x, _| if x < 5 { 1.0 } else { 2.0 });
        let op = vec![1.0; 80];
        let m = build_mask(&mut f, &op, &MaskConfig::default());
        for y in 0..8 {
            for x in 0..10 {
                assert_eq!(m[y * 10 + x], x == 4 || x == 5, "({x},{y})");
            }
        }
    }

    #[test]
    fn low_opacity_masked() {
        let c = cam(10, 8);
        let mut f = full_frame(&c, |_, _| 3.0);
        let mut op = vec![1.0; 80];
        op[17] = 0.05;
        let m = build_mask(&mut f, &op, &MaskConfig::default());
        assert_eq!(m.iter().filter(|v| **v).count(), 1);
        assert!(m[17]);
    }

    #[test]
    fn threshold_monotonicity() {
        let c = cam(12, 10);
        let mut f = full_frame(&c, |x, y| 1.0 + 0.03 * (x * y) as f64 + if x > 6 { 0.5 } else { 0.0 });
        let op: Vec<f64> = (0..120).map(|i| (i % 7) as f64 / 6.0).collect();
        let thresholds = [0.01, 0.05, 0.1, 0.3, 0.6];
        for &a in &thresholds {
            for w in thresholds.windows(2) {
                let lo = build_mask(
                    &mut f,
                    &op,
                    &MaskConfig { opacity_threshold: w[0], rel_depth_threshold: a, splat_radius: 0 },
                );
                let hi = build_mask(
                    &mut f,
                    &op,
                    &MaskConfig { opacity_threshold: w[1], rel_depth_threshold: a, splat_radius: 0 },
                );
                assert!(lo.iter().zip(&hi).all(|(l, h)| !*l || *h));
                let lo = build_mask(
                    &mut f,
                    &op,
                    &MaskConfig { opacity_threshold: a, rel_depth_threshold: w[0], splat_radius: 0 },
                );
                let hi = build_mask(
                    &mut f,
                    &op,
                    &MaskConfig { opacity_threshold: a, rel_depth_threshold: w[1], splat_radius: 0 },
                );
                assert!(lo.iter().zip(&hi).all(|(l, h)| *l || !*h));
            }
        }
    }

    #[test]
    fn render_scaffold_with_pose() {
        let c = cam(8, 6).with_pose(RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0)));
        let posed = vec![PosedPrimitive {
            mean: Vector3::new(0.0, 0.0, 1.0),
            orient: crate::geometry::Rotation::identity(),
            scale: Vector3::repeat(0.01),
            opacity: 0.05,
            color: [1.0; 3],
            is_foreground: true,
        }];
        let f = render_scaffold(&posed, &c, &MaskConfig::default());
        let i = f.index(4, 3);
        assert_eq!(f.depth[i], 2.0);
        assert!(f.mask[i], "low-opacity splat stays masked");
    }
}
