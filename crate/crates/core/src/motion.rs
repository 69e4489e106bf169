//! Canonical Gaussian primitives and the low-rank motion-basis blend.
//!
//! A foreground primitive's pose at time t is the linear combination of the K
//! shared basis states (in the 9-channel pose space) weighted by its own
//! time-invariant coefficient vector, orthonormalized back onto SE(3).

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Pose9, RigidTransform, Rotation, State9};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    pub mean0: Vector3<f64>,
    pub orient0: Rotation,
    pub scale: Vector3<f64>,
    pub opacity: f64,
    pub color: [f64; 3],
    pub is_foreground: bool,
}

impl GaussianPrimitive {
    pub fn point(mean0: Vector3<f64>, color: [f64; 3], is_foreground: bool) -> Self {
        GaussianPrimitive {
            mean0,
            orient0: Rotation::identity(),
            scale: Vector3::repeat(0.01),
            opacity: 1.0,
            color,
            is_foreground,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.mean0.iter().all(|v| v.is_finite()) {
            return Err("mean0: non-finite".into());
        }
        if !self.scale.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err("scale: components must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err("opacity: must lie in [0,1]".into());
        }
        if !self.color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err("color: components must lie in [0,1]".into());
        }
        if !self.orient0.is_valid(1e-9) {
            return Err("orient0: not a rotation".into());
        }
        Ok(())
    }
}

/// A primitive after evolution to some time t.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedPrimitive {
    pub mean: Vector3<f64>,
    pub orient: Rotation,
    pub scale: Vector3<f64>,
    pub opacity: f64,
    pub color: [f64; 3],
    pub is_foreground: bool,
}

/// Per-foreground-primitive blend weights over the K bases.
pub type MotionCoefficients = DVector<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMotionBases {
    /// Normalized timestamps in [-1, 1], strictly increasing.
    pub timestamps: Vec<f64>,
    /// `basis_states[k][t]`.
    pub basis_states: Vec<Vec<Pose9>>,
    pub camera_states: Vec<Pose9>,
}

impl DiscreteMotionBases {
    pub fn num_bases(&self) -> usize {
        self.basis_states.len()
    }

    pub fn num_frames(&self) -> usize {
        self.timestamps.len()
    }

    /// The K basis states at frame `t`.
    pub fn states_at(&self, t: usize) -> Vec<Pose9> {
        self.basis_states.iter().map(|b| b[t]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::format(
                "bases.timestamps",
                "must be strictly increasing",
            ));
        }
        if self.camera_states.len() != n {
            return Err(Error::format(
                "bases.camera_states",
                format!("expected {n} entries, found {}", self.camera_states.len()),
            ));
        }
        for (k, b) in self.basis_states.iter().enumerate() {
            if b.len() != n {
                return Err(Error::format(
                    format!("bases.basis_states[{k}]"),
                    format!("expected {n} entries, found {}", b.len()),
                ));
            }
            for (t, p) in b.iter().enumerate() {
                p.to_rigid().map_err(|e| {
                    Error::format(format!("bases.basis_states[{k}][{t}]"), e.to_string())
                })?;
            }
        }
        for (t, p) in self.camera_states.iter().enumerate() {
            p.to_rigid().map_err(|e| {
                Error::format(format!("bases.camera_states[{t}]"), e.to_string())
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicScene {
    pub primitives: Vec<GaussianPrimitive>,
    /// Indexed by primitive; `None` for background primitives.
    pub coefficients: Vec<Option<MotionCoefficients>>,
    pub bases: DiscreteMotionBases,
    /// Intrinsics template; its pose is replaced per timestamp.
    pub camera: CameraModel,
}

impl DynamicScene {
    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.primitives.len() {
            return Err(Error::format(
                "coefficients",
                format!(
                    "expected {} entries, found {}",
                    self.primitives.len(),
                    self.coefficients.len()
                ),
            ));
        }
        let k = self.bases.num_bases();
        for (i, (g, w)) in self.primitives.iter().zip(&self.coefficients).enumerate() {
            g.validate()
                .map_err(|m| Error::format(format!("primitives[{i}]"), m))?;
            match (g.is_foreground, w) {
                (true, Some(w)) if w.len() == k && w.iter().all(|v| v.is_finite()) => {}
                (true, Some(w)) => {
                    return Err(Error::format(
                        format!("coefficients[{i}]"),
                        format!("expected {k} finite values, found {}", w.len()),
                    ))
                }
                (true, None) => {
                    return Err(Error::format(
                        format!("coefficients[{i}]"),
                        "foreground primitive without coefficients",
                    ))
                }
                (false, Some(_)) => {
                    return Err(Error::format(
                        format!("coefficients[{i}]"),
                        "background primitive must not carry coefficients",
                    ))
                }
                (false, None) => {}
            }
        }
        self.bases.validate()?;
        self.camera
            .validate()
            .map_err(|e| Error::format("camera", e.to_string()))
    }
}

/// Channelwise `Σ_k w_k · state_k`, orthonormalized to a rigid transform.
pub fn blend_bases(states: &[Pose9], w: &[f64]) -> Result<RigidTransform> {
    Pose9::from_state(&blend_states(states, w)?).to_rigid()
}

pub fn blend_states(states: &[Pose9], w: &[f64]) -> Result<State9> {
    if states.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} basis states but {} coefficients",
            states.len(),
            w.len()
        )));
    }
    Ok(states
        .iter()
        .zip(w)
        .fold(State9::zeros(), |acc, (s, wk)| acc + s.to_state() * *wk))
}

pub fn evolve_primitive(g: &GaussianPrimitive, t: &RigidTransform) -> PosedPrimitive {
    PosedPrimitive {
        mean: t.apply(&g.mean0),
        orient: t.rotation.compose(&g.orient0),
        scale: g.scale,
        opacity: g.opacity,
        color: g.color,
        is_foreground: g.is_foreground,
    }
}

/// Evolves every primitive with the supplied basis/camera states.
pub fn scene_at(
    scene: &DynamicScene,
    basis_states: &[Pose9],
    camera_state: &Pose9,
) -> Result<(Vec<PosedPrimitive>, CameraModel)> {
    if basis_states.len() != scene.bases.num_bases() {
        return Err(Error::DimensionMismatch(format!(
            "scene has {} bases, got {} states",
            scene.bases.num_bases(),
            basis_states.len()
        )));
    }
    let mut posed = Vec::with_capacity(scene.primitives.len());
    for (i, (g, w)) in scene.primitives.iter().zip(&scene.coefficients).enumerate() {
        let p = match w {
            Some(w) if g.is_foreground => {
                let t = blend_bases(basis_states, w.as_slice()).map_err(|e| match e {
                    Error::DegenerateRotation(m) => {
                        Error::DegenerateRotation(format!("primitive {i}: {m}"))
                    }
                    other => other,
                })?;
                evolve_primitive(g, &t)
            }
            _ => evolve_primitive(g, &RigidTransform::identity()),
        };
        posed.push(p);
    }
    let pose = camera_state.to_rigid().map_err(|e| match e {
        Error::DegenerateRotation(m) => Error::DegenerateRotation(format!("camera: {m}")),
        other => other,
    })?;
    Ok((posed, scene.camera.with_pose(pose)))
}

/// One point's coefficient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFit {
    pub w: MotionCoefficients,
    /// Numerical rank of the linearized design matrix.
    pub rank: usize,
    /// RMS distance between reconstructed and observed positions.
    pub residual_rms: f64,
}

impl CoefficientFit {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.w.len()
    }
}

/// Observed positions of one tracked point; `None` where not visible.
pub type Track = Vec<Option<Vector3<f64>>>;

/// Least-squares blend weights reproducing each track from its canonical mean.
///
/// Every point gets a (minimum-norm) solution; rank-deficient design matrices
/// are flagged in [`CoefficientFit::rank`]. Use [`require_full_rank`] to turn
/// those flags into an error.
pub fn solve_coefficients(
    tracks: &[Track],
    bases: &DiscreteMotionBases,
    canonical_means: &[Vector3<f64>],
) -> Result<Vec<CoefficientFit>> {
    if tracks.len() != canonical_means.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tracks but {} canonical means",
            tracks.len(),
            canonical_means.len()
        )));
    }
    let k = bases.num_bases();
    let frames = bases.num_frames();
    if k == 0 || k > 9 * frames {
        return Err(Error::InvalidConfig(format!(
            "basis count {k} must lie in 1..={}",
            9 * frames
        )));
    }
    let transforms: Vec<Vec<RigidTransform>> = bases
        .basis_states
        .iter()
        .map(|b| b.iter().map(|p| p.to_rigid()).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let states: Vec<Vec<Pose9>> = (0..frames).map(|t| bases.states_at(t)).collect();

    tracks
        .iter()
        .zip(canonical_means)
        .map(|(track, mean0)| {
            if track.len() != frames {
                return Err(Error::DimensionMismatch(format!(
                    "track has {} frames, bases have {frames}",
                    track.len()
                )));
            }
            solve_one(track, mean0, &transforms, &states)
        })
        .collect()
}

/// Fails with `RankDeficient` on the first flagged point.
pub fn require_full_rank(fits: &[CoefficientFit]) -> Result<()> {
    match fits.iter().position(|f| f.rank_deficient()) {
        Some(point) => Err(Error::RankDeficient {
            point,
            rank: fits[point].rank,
            required: fits[point].w.len(),
        }),
        None => Ok(()),
    }
}

fn solve_one(
    track: &Track,
    mean0: &Vector3<f64>,
    transforms: &[Vec<RigidTransform>],
    states: &[Vec<Pose9>],
) -> Result<CoefficientFit> {
    let k = transforms.len();
    let observed: Vec<(usize, Vector3<f64>)> = track
        .iter()
        .enumerate()
        .filter_map(|(t, p)| p.map(|p| (t, p)))
        .collect();
    if observed.is_empty() {
        return Err(Error::InvalidConfig(
            "track has no observed frame".to_string(),
        ));
    }
    let rows = 3 * observed.len();
    // linear surrogate: position ≈ Σ_k w_k (R_k μ0 + t_k)
    let mut a = DMatrix::zeros(rows, k);
    let mut b = DVector::zeros(rows);
    for (r, (t, p)) in observed.iter().enumerate() {
        for kk in 0..k {
            let col = transforms[kk][*t].apply(mean0);
            a.fixed_view_mut::<3, 1>(3 * r, kk).copy_from(&col);
        }
        b.fixed_rows_mut::<3>(3 * r).copy_from(p);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1e-300);
    let rank = svd.rank(tol);
    let mut w = if smax > 0.0 {
        svd.solve(&b, tol)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
    } else {
        DVector::zeros(k)
    };

    let cost = |w: &DVector<f64>| -> f64 {
        let mut c = 0.0;
        for (t, p) in &observed {
            match blend_bases(&states[*t], w.as_slice()) {
                Ok(tr) => c += (tr.apply(mean0) - p).norm_squared(),
                Err(_) => return f64::INFINITY,
            }
        }
        c
    };

    if !cost(&w).is_finite() {
        // the surrogate left the rotation block degenerate (e.g. μ0 at the
        // origin of a static scene); pin Σw = 1 and take the min-norm solution
        let mut a2 = DMatrix::zeros(rows + 1, k);
        a2.view_mut((0, 0), (rows, k)).copy_from(&a);
        let mut b2 = DVector::zeros(rows + 1);
        b2.rows_mut(0, rows).copy_from(&b);
        let pin = 1e3 * smax.max(1.0);
        for kk in 0..k {
            a2[(rows, kk)] = pin;
        }
        b2[rows] = pin;
        let svd2 = a2.svd(true, true);
        let tol2 = 1e-10 * svd2.singular_values.max();
        w = svd2
            .solve(&b2, tol2)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }

    // Gauss–Newton on the true (orthonormalized) objective
    let mut current = cost(&w);
    for _ in 0..10 {
        if !current.is_finite() || current < 1e-28 {
            break;
        }
        let residual = |w: &DVector<f64>| -> Option<DVector<f64>> {
            let mut r = DVector::zeros(rows);
            for (i, (t, p)) in observed.iter().enumerate() {
                let tr = blend_bases(&states[*t], w.as_slice()).ok()?;
                r.fixed_rows_mut::<3>(3 * i).copy_from(&(tr.apply(mean0) - p));
            }
            Some(r)
        };
        let Some(r0) = residual(&w) else { break };
        let mut jac = DMatrix::zeros(rows, k);
        let h = 1e-7;
        let mut ok = true;
        for kk in 0..k {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[kk] += h;
            wm[kk] -= h;
            match (residual(&wp), residual(&wm)) {
                (Some(rp), Some(rm)) => jac.set_column(kk, &((rp - rm) / (2.0 * h))),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        let jsvd = jac.svd(true, true);
        let jtol = 1e-10 * jsvd.singular_values.max().max(1e-300);
        let Ok(step) = jsvd.solve(&(-r0), jtol) else {
            break;
        };
        if step.norm() < 1e-15 {
            break;
        }
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let cand = &w + &step * alpha;
            let c = cost(&cand);
            if c < current {
                w = cand;
                current = c;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }

    Ok(CoefficientFit {
        residual_rms: (current / observed.len() as f64).sqrt(),
        w,
        rank,
    })
}
