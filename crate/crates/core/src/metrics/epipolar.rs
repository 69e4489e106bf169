use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MIN_PAIRS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub x1: Vector2<f64>,
    pub x2: Vector2<f64>,
}

impl Correspondence {
    pub fn new(x1: [f64; 2], x2: [f64; 2]) -> Self {
        Correspondence {
            x1: x1.into(),
            x2: x2.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrespondenceSource {
    GroundTruth,
    Ingested,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    pub pairs: Vec<Correspondence>,
    pub source: CorrespondenceSource,
}

impl CorrespondenceSet {
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.pairs.iter().enumerate() {
            if !(c.x1.iter().chain(c.x2.iter()).all(|v| v.is_finite())) {
                return Err(Error::format(format!("pairs[{i}]"), "non-finite coordinate"));
            }
        }
        Ok(())
    }
}

/// Unit Frobenius norm, sign fixed so the largest-magnitude entry is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(pub Matrix3<f64>);

impl FundamentalMatrix {
    pub fn normalized(m: Matrix3<f64>) -> Self {
        let mut m = m / m.norm();
        let big = m.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if big < 0.0 {
            m = -m;
        }
        FundamentalMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

fn homog(x: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(x.x, x.y, 1.0)
}

/// First-order geometric error `|x̃₂ᵀFx̃₁| / sqrt(...)` in pixels.
pub fn sampson_error(x1: &Vector2<f64>, x2: &Vector2<f64>, f: &Matrix3<f64>) -> Result<f64> {
    let (h1, h2) = (homog(x1), homog(x2));
    let fx1 = f * h1;
    let ftx2 = f.transpose() * h2;
    let den = fx1.x * fx1.x + fx1.y * fx1.y + ftx2.x * ftx2.x + ftx2.y * ftx2.y;
    if !(den > 1e-18) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(h2.dot(&fx1).abs() / den.sqrt())
}

/// Isotropic similarity taking the points to centroid 0, mean distance √2.
fn hartley(points: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let c = points.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
    let mean_d = points.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    let s = if mean_d > 0.0 { std::f64::consts::SQRT_2 / mean_d } else { 1.0 };
    Matrix3::new(s, 0.0, -s * c.x, 0.0, s, -s * c.y, 0.0, 0.0, 1.0)
}

/// Hartley-normalized linear estimate with rank-2 enforcement.
pub fn eight_point(pairs: &[Correspondence]) -> Result<FundamentalMatrix> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::DegenerateConfiguration(format!(
            "eight-point needs >= {MIN_PAIRS} pairs, got {}",
            pairs.len()
        )));
    }
    let p1: Vec<Vector2<f64>> = pairs.iter().map(|c| c.x1).collect();
    let p2: Vec<Vector2<f64>> = pairs.iter().map(|c| c.x2).collect();
    let (t1, t2) = (hartley(&p1), hartley(&p2));
    // pad to at least 9 rows so the SVD exposes the full right null space
    let mut a = DMatrix::zeros(pairs.len().max(9), 9);
    for (i, (a1, a2)) in p1.iter().zip(&p2).enumerate() {
        let u = t1 * homog(a1);
        let v = t2 * homog(a2);
        for r in 0..3 {
            for c in 0..3 {
                a[(i, 3 * r + c)] = v[r] * u[c];
            }
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = svd.singular_values[order[0]];
    if !(svd.singular_values[order[7]] > 1e-10 * smax) {
        return Err(Error::DegenerateConfiguration(
            "design matrix rank < 8".to_string(),
        ));
    }
    let f = vt.row(order[8]);
    let fn_ = Matrix3::from_fn(|r, c| f[3 * r + c]);

    let s = fn_.svd(true, true);
    let (u, vt) = (s.u.unwrap(), s.v_t.unwrap());
    let mut sv = s.singular_values;
    let imin = sv.imin();
    sv[imin] = 0.0;
    let rank2 = u * Matrix3::from_diagonal(&sv) * vt;
    Ok(FundamentalMatrix::normalized(t2.transpose() * rank2 * t1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub inlier_threshold: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            inlier_threshold: 1.0,
            iterations: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub f: FundamentalMatrix,
    pub inliers: Vec<usize>,
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::INFINITY;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Inlier indices (EE below threshold) and their median EE.
fn score(pairs: &[Correspondence], f: &FundamentalMatrix, thr: f64) -> (Vec<usize>, f64) {
    let mut idx = Vec::new();
    let mut errs = Vec::new();
    for (i, c) in pairs.iter().enumerate() {
        if let Ok(e) = sampson_error(&c.x1, &c.x2, f.matrix()) {
            if e < thr {
                idx.push(i);
                errs.push(e);
            }
        }
    }
    (idx, median(&mut errs))
}

fn better(a: &(Vec<usize>, f64), b: &(Vec<usize>, f64)) -> bool {
    a.0.len() > b.0.len() || (a.0.len() == b.0.len() && a.1 < b.1)
}

/// Minimal-sample RANSAC; every iteration draws from its own ChaCha stream of
/// the seed, so the result does not depend on evaluation order.
pub fn ransac_fundamental(pairs: &[Correspondence], cfg: &RansacConfig) -> Result<RansacResult> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::NoConsensus { inliers: 0 });
    }
    let mut best: Option<(FundamentalMatrix, (Vec<usize>, f64))> = None;
    for it in 0..cfg.iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(it as u64);
        let sample: Vec<Correspondence> = rand::seq::index::sample(&mut rng, pairs.len(), MIN_PAIRS)
            .iter()
            .map(|i| pairs[i])
            .collect();
        let Ok(f) = eight_point(&sample) else {
            continue;
        };
        let s = score(pairs, &f, cfg.inlier_threshold);
        if best.as_ref().is_none_or(|(_, b)| better(&s, b)) {
            best = Some((f, s));
        }
    }
    let Some((f, s)) = best else {
        return Err(Error::NoConsensus { inliers: 0 });
    };
    if s.0.len() < MIN_PAIRS {
        return Err(Error::NoConsensus { inliers: s.0.len() });
    }
    let inlier_pairs: Vec<Correspondence> = s.0.iter().map(|i| pairs[*i]).collect();
    // refit on the consensus set; keep it unless it loses inliers
    if let Ok(refit) = eight_point(&inlier_pairs) {
        let rs = score(pairs, &refit, cfg.inlier_threshold);
        if rs.0.len() >= s.0.len() {
            return Ok(RansacResult { f: refit, inliers: rs.0 });
        }
    }
    Ok(RansacResult { f, inliers: s.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarMetrics {
    /// Median Sampson error over the RANSAC inliers, pixels.
    pub ee_median: f64,
    /// Inlier fraction over all pairs.
    pub eir: f64,
    pub inliers: usize,
    pub total: usize,
}

/// EE-median and EIR. A set with no parallax at all (every `x1 == x2`) has
/// no defined F; it is reported as perfectly consistent.
pub fn epipolar_metrics(pairs: &[Correspondence], cfg: &RansacConfig) -> Result<EpipolarMetrics> {
    let n = pairs.len();
    if n >= MIN_PAIRS && pairs.iter().all(|c| (c.x1 - c.x2).norm() < 1e-12) {
        return Ok(EpipolarMetrics {
            ee_median: 0.0,
            eir: 1.0,
            inliers: n,
            total: n,
        });
    }
    let r = ransac_fundamental(pairs, cfg)?;
    let mut errs: Vec<f64> = r
        .inliers
        .iter()
        .map(|i| sampson_error(&pairs[*i].x1, &pairs[*i].x2, r.f.matrix()))
        .collect::<Result<_>>()?;
    Ok(EpipolarMetrics {
        ee_median: median(&mut errs),
        eir: r.inliers.len() as f64 / n as f64,
        inliers: r.inliers.len(),
        total: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{skew, Rotation};
    use rand::Rng;

    fn f_translation() -> Matrix3<f64> {
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
    }

    #[test]
    fn sampson_examples() {
        let f = f_translation();
        let e = sampson_error(&Vector2::new(5.0, 7.0), &Vector2::new(9.0, 7.0), &f).unwrap();
        assert_eq!(e, 0.0);
        let e = sampson_error(&Vector2::new(5.0, 7.0), &Vector2::new(9.0, 8.0), &f).unwrap();
        assert!((e - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            sampson_error(&Vector2::zeros(), &Vector2::zeros(), &Matrix3::zeros()),
            Err(Error::DegenerateDenominator)
        ));
    }

    #[test]
    fn sampson_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let (a, b) = (Vector2::new(3.0, -2.0), Vector2::new(0.5, 4.0));
        let e = sampson_error(&a, &b, &f).unwrap();
        for c in [-3.0, 1e-3, 250.0] {
            assert!((sampson_error(&a, &b, &(f * c)).unwrap() - e).abs() < 1e-12 * e.max(1.0));
        }
    }

    /// Two-view scene with K = diag(fx, fx, 1) + principal point, second
    /// camera `X2 = R X1 + t`; returns pairs and the oracle F.
    pub(crate) fn two_view(n: usize, seed: u64) -> (Vec<Correspondence>, Matrix3<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = Matrix3::new(300.0, 0.0, 160.0, 0.0, 300.0, 120.0, 0.0, 0.0, 1.0);
        let r = *Rotation::from_axis_angle(&Vector3::new(0.2, 1.0, 0.1), 0.15).matrix();
        let t = Vector3::new(0.6, 0.1, 0.05);
        let mut pairs = Vec::new();
        while pairs.len() < n {
            let x = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(4.0..9.0),
            );
            let y = r * x + t;
            let (a, b) = (k * x, k * y);
            pairs.push(Correspondence {
                x1: Vector2::new(a.x / a.z, a.y / a.z),
                x2: Vector2::new(b.x / b.z, b.y / b.z),
            });
        }
        let kinv = k.try_inverse().unwrap();
        (pairs, kinv.transpose() * skew(&t) * r * kinv)
    }

    fn aligned_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        let (a, b) = (a / a.norm(), b / b.norm());
        (a - b).norm().min((a + b).norm())
    }

    #[test]
    fn eight_point_recovers_oracle() {
        let (pairs, f_true) = two_view(20, 2);
        let f = eight_point(&pairs).unwrap();
        assert!(aligned_diff(f.matrix(), &f_true) < 1e-6);
        assert!((f.matrix().norm() - 1.0).abs() < 1e-12);
        let sv = f.matrix().singular_values();
        assert!(sv.min() < 1e-8 * sv.max());
        for c in &pairs {
            assert!(homog(&c.x2).dot(&(f.matrix() * homog(&c.x1))).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_translation_matches_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs: Vec<Correspondence> = (0..15)
            .map(|_| {
                let x = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(2.0..6.0));
                let y = x + Vector3::new(1.0, 0.0, 0.0);
                Correspondence::new([x.x / x.z, x.y / x.z], [y.x / y.z, y.y / y.z])
            })
            .collect();
        let f = eight_point(&pairs).unwrap();
        assert!(aligned_diff(f.matrix(), &f_translation()) < 1e-6);
    }

    #[test]
    fn similarity_invariance() {
        let (pairs, _) = two_view(30, 8);
        let f = eight_point(&pairs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let s: f64 = rng.random_range(0.2..5.0);
            let th: f64 = rng.random_range(-3.0..3.0);
            let d = Vector2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
            let h = Matrix3::new(
                s * th.cos(), -s * th.sin(), d.x,
                s * th.sin(), s * th.cos(), d.y,
                0.0, 0.0, 1.0,
            );
            let warp = |x: &Vector2<f64>| {
                let y = h * homog(x);
                Vector2::new(y.x, y.y)
            };
            let warped: Vec<Correspondence> = pairs
                .iter()
                .map(|c| Correspondence { x1: warp(&c.x1), x2: warp(&c.x2) })
                .collect();
            let fw = eight_point(&warped).unwrap();
            // map back: F = Hᵀ F_w H
            let back = h.transpose() * fw.matrix() * h;
            assert!(aligned_diff(&back, f.matrix()) < 1e-6);
        }
    }

    #[test]
    fn degenerate_configurations() {
        let pairs: Vec<Correspondence> = (0..10)
            .map(|i| Correspondence::new([i as f64, 2.0 * i as f64], [i as f64, 2.0 * i as f64]))
            .collect();
        assert!(matches!(eight_point(&pairs), Err(Error::DegenerateConfiguration(_))));
        assert!(matches!(eight_point(&pairs[..7]), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn ransac_exact_and_too_few() {
        let (pairs, _) = two_view(40, 3);
        let m = epipolar_metrics(&pairs, &RansacConfig { iterations: 50, ..Default::default() }).unwrap();
        assert_eq!(m.eir, 1.0);
        assert!(m.ee_median < 1e-9);
        assert!(matches!(
            ransac_fundamental(&pairs[..7], &RansacConfig::default()),
            Err(Error::NoConsensus { .. })
        ));
    }

    #[test]
    fn ransac_with_outliers() {
        let (mut pairs, _) = two_view(80, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            pairs.push(Correspondence::new(
                [rng.random_range(0.0..320.0), rng.random_range(0.0..240.0)],
                [rng.random_range(0.0..320.0), rng.random_range(0.0..240.0)],
            ));
        }
        let cfg = RansacConfig { iterations: 300, seed: 1, ..Default::default() };
        let r = ransac_fundamental(&pairs, &cfg).unwrap();
        assert!((0..80).all(|i| r.inliers.contains(&i)));
        assert!(r.inliers.iter().filter(|i| **i >= 80).count() <= 2);
        assert_eq!(r, ransac_fundamental(&pairs, &cfg).unwrap());
        let m = epipolar_metrics(&pairs, &cfg).unwrap();
        assert!((0.78..=0.84).contains(&m.eir));
    }

    #[test]
    fn zero_parallax_is_consistent() {
        let pairs: Vec<Correspondence> = (0..12)
            .map(|i| Correspondence::new([i as f64, (i * i) as f64], [i as f64, (i * i) as f64]))
            .collect();
        let m = epipolar_metrics(&pairs, &RansacConfig::default()).unwrap();
        assert_eq!((m.ee_median, m.eir), (0.0, 1.0));
    }
}
