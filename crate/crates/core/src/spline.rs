//! Continuous-time dynamics model: open-uniform B-spline curves over
//! normalized time for K motion bases plus the camera, with linear
//! extrapolation beyond the observed span.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::State9;

/// Lower clip bound of the time map; the upper bound is `1 - TIME_CLIP`.
pub const TIME_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplineConfig {
    pub num_control: usize,
    pub degree: usize,
    pub num_bases: usize,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self {
            num_control: 8,
            degree: 3,
            num_bases: 10,
        }
    }
}

impl SplineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::InvalidConfig("degree must be >= 1".into()));
        }
        if self.num_control < self.degree + 1 {
            return Err(Error::InvalidConfig(format!(
                "num_control {} < degree + 1 = {}",
                self.num_control,
                self.degree + 1
            )));
        }
        if self.num_bases < 1 {
            return Err(Error::InvalidConfig("num_bases must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    pub knots: Vec<f64>,
}

impl KnotVector {
    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Greville abscissae `(u_{j+1} + … + u_{j+p}) / p`.
    pub fn greville(&self, degree: usize) -> Vec<f64> {
        let m = self.knots.len() - degree - 1;
        (0..m)
            .map(|j| self.knots[j + 1..=j + degree].iter().sum::<f64>() / degree as f64)
            .collect()
    }
}

/// Clamped knot vector of length `M + p + 1` with uniform interior knots.
pub fn open_uniform_knots(num_control: usize, degree: usize) -> Result<KnotVector> {
    if num_control < degree + 1 {
        return Err(Error::InvalidConfig(format!(
            "num_control {num_control} < degree + 1 = {}",
            degree + 1
        )));
    }
    let spans = num_control - degree;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..spans).map(|i| i as f64 / spans as f64));
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    Ok(KnotVector { knots })
}

/// `clip(0.5 t + 0.5, 1e-6, 1 - 1e-6)`.
pub fn map_time(t_norm: f64) -> f64 {
    (0.5 * t_norm + 0.5).clamp(TIME_CLIP, 1.0 - TIME_CLIP)
}

/// Cox–de Boor evaluation of all `M` basis functions of degree `p` at `t01`.
///
/// Uses half-open spans `[u_i, u_{i+1})` and `0/0 = 0` at repeated knots.
pub fn bspline_basis(t01: f64, knots: &KnotVector, degree: usize) -> Vec<f64> {
    let u = &knots.knots;
    let m = u.len() - degree - 1;
    let mut n: Vec<f64> = (0..u.len() - 1)
        .map(|i| if u[i] <= t01 && t01 < u[i + 1] { 1.0 } else { 0.0 })
        .collect();
    for d in 1..=degree {
        for i in 0..u.len() - 1 - d {
            let left = ratio(t01 - u[i], u[i + d] - u[i]) * n[i];
            let right = ratio(u[i + d + 1] - t01, u[i + d + 1] - u[i + 1]) * n[i + 1];
            n[i] = left + right;
        }
    }
    n.truncate(m);
    n
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Second derivative (w.r.t. `t01`) of every basis function at `t01`.
pub fn bspline_basis_second_derivative(t01: f64, knots: &KnotVector, degree: usize) -> Vec<f64> {
    let m = knots.len() - degree - 1;
    if degree < 2 {
        return vec![0.0; m];
    }
    let u = &knots.knots;
    let lower = bspline_basis(t01, knots, degree - 2);
    // N''_{i,p} = p(p-1) [ (N_{i,p-2}/(u_{i+p-1}-u_i) - N_{i+1,p-2}/(u_{i+p}-u_{i+1})) / (u_{i+p}-u_i)
    //                     - (N_{i+1,p-2}/(u_{i+p}-u_{i+1}) - N_{i+2,p-2}/(u_{i+p+1}-u_{i+2})) / (u_{i+p+1}-u_{i+1}) ]
    let p = degree;
    let n = |i: usize| lower.get(i).copied().unwrap_or(0.0);
    let scale = (p * (p - 1)) as f64;
    (0..m)
        .map(|i| {
            let a = ratio(n(i), u[i + p - 1] - u[i]);
            let b = ratio(n(i + 1), u[i + p] - u[i + 1]);
            let c = ratio(n(i + 2), u[i + p + 1] - u[i + 2]);
            scale * (ratio(a - b, u[i + p] - u[i]) - ratio(b - c, u[i + p + 1] - u[i + 1]))
        })
        .collect()
}

/// Control points of one 9-channel curve: a `9 × M` matrix.
pub type CurveControls = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct C4ddSpline {
    pub config: SplineConfig,
    pub knots: KnotVector,
    /// K curves, each `9 × M`.
    pub motion_ctrl: Vec<CurveControls>,
    /// `9 × M`.
    pub camera_ctrl: CurveControls,
    /// Number of observed frames; sets the endpoint-slope step.
    pub obs_count: usize,
}

/// Spline outputs for a batch of timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineOutput {
    /// `motion[k][b]`.
    pub motion: Vec<Vec<State9>>,
    pub camera: Vec<State9>,
}

/// Names a curve inside a spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveId {
    Motion(usize),
    Camera,
}

impl std::fmt::Display for CurveId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurveId::Motion(k) => write!(f, "motion[{k}]"),
            CurveId::Camera => write!(f, "camera"),
        }
    }
}

impl C4ddSpline {
    /// Spline with all control points at zero.
    pub fn zeros(config: SplineConfig, obs_count: usize) -> Result<Self> {
        config.validate()?;
        let knots = open_uniform_knots(config.num_control, config.degree)?;
        Ok(Self {
            knots,
            motion_ctrl: vec![DMatrix::zeros(9, config.num_control); config.num_bases],
            camera_ctrl: DMatrix::zeros(9, config.num_control),
            obs_count,
            config,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let expected = open_uniform_knots(self.config.num_control, self.config.degree)?;
        if self.knots.len() != expected.len() {
            return Err(Error::format(
                "knots",
                format!("expected {} knots, found {}", expected.len(), self.knots.len()),
            ));
        }
        if self.motion_ctrl.len() != self.config.num_bases {
            return Err(Error::format(
                "motion_ctrl",
                format!(
                    "expected {} curves, found {}",
                    self.config.num_bases,
                    self.motion_ctrl.len()
                ),
            ));
        }
        for (id, c) in self.curves() {
            if c.nrows() != 9 || c.ncols() != self.config.num_control {
                return Err(Error::format(
                    id.to_string(),
                    format!("expected 9x{} controls", self.config.num_control),
                ));
            }
            if !c.iter().all(|v| v.is_finite()) {
                return Err(Error::format(id.to_string(), "non-finite control point"));
            }
        }
        Ok(())
    }

    pub fn num_curves(&self) -> usize {
        self.motion_ctrl.len() + 1
    }

    pub fn curves(&self) -> impl Iterator<Item = (CurveId, &CurveControls)> {
        self.motion_ctrl
            .iter()
            .enumerate()
            .map(|(k, c)| (CurveId::Motion(k), c))
            .chain(std::iter::once((CurveId::Camera, &self.camera_ctrl)))
    }

    pub fn curve(&self, id: CurveId) -> &CurveControls {
        match id {
            CurveId::Motion(k) => &self.motion_ctrl[k],
            CurveId::Camera => &self.camera_ctrl,
        }
    }

    pub fn curve_mut(&mut self, id: CurveId) -> &mut CurveControls {
        match id {
            CurveId::Motion(k) => &mut self.motion_ctrl[k],
            CurveId::Camera => &mut self.camera_ctrl,
        }
    }

    pub fn basis(&self, t01: f64) -> DVector<f64> {
        DVector::from_vec(bspline_basis(t01, &self.knots, self.config.degree))
    }

    /// Evaluates every curve at the (clipped) time map of each timestamp.
    pub fn forward(&self, t_norm: &[f64]) -> SplineOutput {
        let bases: Vec<DVector<f64>> = t_norm.iter().map(|t| self.basis(map_time(*t))).collect();
        let eval = |c: &CurveControls| -> Vec<State9> {
            bases
                .iter()
                .map(|b| State9::from_iterator((c * b).iter().copied()))
                .collect()
        };
        SplineOutput {
            motion: self.motion_ctrl.iter().map(eval).collect(),
            camera: eval(&self.camera_ctrl),
        }
    }

    /// Single-timestamp convenience wrapper around [`Self::forward`].
    pub fn forward_at(&self, t_norm: f64) -> (Vec<State9>, State9) {
        let out = self.forward(&[t_norm]);
        (
            out.motion.into_iter().map(|m| m[0]).collect(),
            out.camera[0],
        )
    }

    /// One-sided finite-difference slopes at `t = -1` and `t = +1` with step
    /// `2 / (T - 1)`, in normalized-time units.
    pub fn endpoint_slopes(&self) -> Result<(SplineOutput, SplineOutput)> {
        if self.obs_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "endpoint slopes need obs_count >= 2, got {}",
                self.obs_count
            )));
        }
        let delta = 2.0 / (self.obs_count as f64 - 1.0);
        let f = self.forward(&[-1.0, -1.0 + delta, 1.0 - delta, 1.0]);
        let slope = |a: usize, b: usize| SplineOutput {
            motion: f
                .motion
                .iter()
                .map(|m| vec![(m[b] - m[a]) / delta])
                .collect(),
            camera: vec![(f.camera[b] - f.camera[a]) / delta],
        };
        Ok((slope(0, 1), slope(2, 3)))
    }

    /// [`Self::forward`] inside `[-1, 1]`; linear continuation from the
    /// endpoint value and slope outside.
    pub fn forward_extrap(&self, t_norm: &[f64]) -> Result<SplineOutput> {
        let clamped: Vec<f64> = t_norm.iter().map(|t| t.clamp(-1.0, 1.0)).collect();
        let mut out = self.forward(&clamped);
        if t_norm.iter().all(|t| (-1.0..=1.0).contains(t)) {
            return Ok(out);
        }
        let (left, right) = self.endpoint_slopes()?;
        for (b, &t) in t_norm.iter().enumerate() {
            let (dt, s) = if t < -1.0 {
                (t + 1.0, &left)
            } else if t > 1.0 {
                (t - 1.0, &right)
            } else {
                continue;
            };
            for (k, m) in out.motion.iter_mut().enumerate() {
                m[b] += s.motion[k][0] * dt;
            }
            out.camera[b] += s.camera[0] * dt;
        }
        Ok(out)
    }

    pub fn forward_extrap_at(&self, t_norm: f64) -> Result<(Vec<State9>, State9)> {
        let out = self.forward_extrap(&[t_norm])?;
        Ok((
            out.motion.into_iter().map(|m| m[0]).collect(),
            out.camera[0],
        ))
    }

    /// Second derivative w.r.t. normalized time at each `t01` sample, via the
    /// differenced control polygon.
    pub fn second_derivative(&self, t01_grid: &[f64]) -> Result<SplineOutput> {
        let p = self.config.degree;
        if p < 2 {
            return Err(Error::InvalidConfig(format!(
                "second derivative needs degree >= 2, got {p}"
            )));
        }
        let u = &self.knots.knots;
        // knots of the degree p-2 derivative curve: drop two from each end
        let inner = KnotVector {
            knots: u[2..u.len() - 2].to_vec(),
        };
        let eval = |c: &CurveControls| -> Vec<State9> {
            let d2 = second_difference_controls(c, u, p);
            t01_grid
                .iter()
                .map(|t| {
                    let b = DVector::from_vec(bspline_basis(*t, &inner, p - 2));
                    // chain rule: d t01 / d t_norm = 0.5
                    State9::from_iterator((&d2 * b * 0.25).iter().copied())
                })
                .collect()
        };
        Ok(SplineOutput {
            motion: self.motion_ctrl.iter().map(eval).collect(),
            camera: eval(&self.camera_ctrl),
        })
    }
}

/// Control points of the second-derivative curve (degree p-2, `M-2` points).
fn second_difference_controls(c: &CurveControls, u: &[f64], p: usize) -> DMatrix<f64> {
    let m = c.ncols();
    let first = DMatrix::from_fn(c.nrows(), m - 1, |r, i| {
        p as f64 * ratio(c[(r, i + 1)] - c[(r, i)], u[i + p + 1] - u[i + 1])
    });
    DMatrix::from_fn(c.nrows(), m - 2, |r, i| {
        (p - 1) as f64 * ratio(first[(r, i + 1)] - first[(r, i)], u[i + p + 1] - u[i + 2])
    })
}
