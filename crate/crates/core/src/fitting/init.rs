//! Procrustes initialization of the discrete motion bases from 3D tracks.

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{kabsch, Pose9, RigidTransform};
use crate::motion::{solve_coefficients, CoefficientFit, DiscreteMotionBases, Track};

const KMEANS_ITERATIONS: usize = 50;
const MAX_RESEEDS: usize = 5;

/// Tracked 3D points plus per-frame camera states over shared timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSet {
    pub timestamps: Vec<f64>,
    pub tracks: Vec<Track>,
    pub camera_states: Vec<Pose9>,
}

impl TrackSet {
    pub fn num_frames(&self) -> usize {
        self.timestamps.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        if n < 2 {
            return Err(Error::format("timestamps", "need at least 2 frames"));
        }
        if self.timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::format("timestamps", "must be strictly increasing"));
        }
        if self.camera_states.len() != n {
            return Err(Error::format(
                "camera_states",
                format!("expected {n} entries, found {}", self.camera_states.len()),
            ));
        }
        for (i, t) in self.tracks.iter().enumerate() {
            if t.len() != n {
                return Err(Error::format(
                    format!("tracks[{i}]"),
                    format!("expected {n} frames, found {}", t.len()),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitReport {
    pub cluster_assignments: Vec<usize>,
    /// `[k][t]` RMS Procrustes residual of cluster k at frame t.
    pub per_frame_residuals: Vec<Vec<f64>>,
    /// Per track: design matrix rank fell below K.
    pub coefficient_rank_flags: Vec<bool>,
    /// Clusters whose own points could not support an alignment at some frame
    /// and borrowed the all-track alignment there.
    pub fallback_clusters: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct InitResult {
    pub bases: DiscreteMotionBases,
    pub coefficients: Vec<CoefficientFit>,
    pub canonical_means: Vec<Vector3<f64>>,
    pub report: InitReport,
}

/// k-means++ seeded Lloyd iterations; returns per-row labels.
pub fn kmeans(features: &[DVector<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = features.len();
    if n < k || k == 0 {
        return Err(Error::InsufficientTracks {
            have: n,
            required: k.max(1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist2 = |a: &DVector<f64>, b: &DVector<f64>| (a - b).norm_squared();

    let mut centers: Vec<DVector<f64>> = vec![features[rng.random_range(0..n)].clone()];
    let mut chosen = vec![false; n];
    while centers.len() < k {
        let d: Vec<f64> = features
            .iter()
            .map(|f| centers.iter().map(|c| dist2(f, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, di) in d.iter().enumerate() {
                if r < *di {
                    idx = i;
                    break;
                }
                r -= di;
            }
            idx
        } else {
            // all rows coincide with existing centers
            chosen.iter().position(|c| !c).unwrap_or(0)
        };
        chosen[pick] = true;
        centers.push(features[pick].clone());
    }

    let assign = |centers: &[DVector<f64>]| -> Vec<usize> {
        features
            .iter()
            .map(|f| {
                let mut best = 0;
                let mut bd = f64::INFINITY;
                for (c, center) in centers.iter().enumerate() {
                    let d = dist2(f, center);
                    if d < bd {
                        bd = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let mut labels = assign(&centers);
    let mut reseeds = 0;
    for _ in 0..KMEANS_ITERATIONS {
        let mut counts = vec![0usize; k];
        let mut sums = vec![DVector::zeros(features[0].len()); k];
        for (f, l) in features.iter().zip(&labels) {
            counts[*l] += 1;
            sums[*l] += f;
        }
        if let Some(empty) = counts.iter().position(|c| *c == 0) {
            if reseeds == MAX_RESEEDS {
                return Err(Error::EmptyCluster {
                    cluster: empty,
                    retries: reseeds,
                });
            }
            reseeds += 1;
            // farthest row from its current center seeds the empty cluster
            let far = (0..n)
                .max_by(|&a, &b| {
                    dist2(&features[a], &centers[labels[a]])
                        .partial_cmp(&dist2(&features[b], &centers[labels[b]]))
                        .unwrap()
                        .then(b.cmp(&a))
                })
                .unwrap();
            centers[empty] = features[far].clone();
            labels = assign(&centers);
            continue;
        }
        for c in 0..k {
            centers[c] = &sums[c] / counts[c] as f64;
        }
        let next = assign(&centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|l| counts[*l] += 1);
    if let Some(empty) = counts.iter().position(|c| *c == 0) {
        return Err(Error::EmptyCluster {
            cluster: empty,
            retries: reseeds,
        });
    }
    Ok(labels)
}

fn displacement_features(set: &TrackSet) -> Vec<DVector<f64>> {
    let frames = set.num_frames();
    set.tracks
        .iter()
        .map(|track| {
            let mut f = DVector::zeros(3 * frames);
            if let Some(p0) = track[0] {
                for (t, p) in track.iter().enumerate() {
                    if let Some(p) = p {
                        f.fixed_rows_mut::<3>(3 * t).copy_from(&(p - p0));
                    }
                }
            }
            f
        })
        .collect()
}

fn align_frame(
    set: &TrackSet,
    members: &[usize],
    t: usize,
) -> Result<(RigidTransform, f64)> {
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for &i in members {
        if let (Some(a), Some(b)) = (set.tracks[i][0], set.tracks[i][t]) {
            src.push(a);
            dst.push(b);
        }
    }
    let w = vec![1.0; src.len()];
    let tr = kabsch(&src, &dst, &w)?;
    let rms = (src
        .iter()
        .zip(&dst)
        .map(|(a, b)| (tr.apply(a) - b).norm_squared())
        .sum::<f64>()
        / src.len() as f64)
        .sqrt();
    Ok((tr, rms))
}

/// Clusters tracks by displacement, aligns each cluster's frame-0 points to
/// every frame, then solves per-track blend weights against those bases.
pub fn init_bases_from_tracks(set: &TrackSet, k: usize, seed: u64) -> Result<InitResult> {
    set.validate()?;
    if set.tracks.len() < k || k == 0 {
        return Err(Error::InsufficientTracks {
            have: set.tracks.len(),
            required: k.max(1),
        });
    }
    let frames = set.num_frames();
    let labels = kmeans(&displacement_features(set), k, seed)?;
    let members: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..labels.len()).filter(|i| labels[*i] == c).collect())
        .collect();
    let all: Vec<usize> = (0..set.tracks.len()).collect();

    let mut basis_states = vec![Vec::with_capacity(frames); k];
    let mut residuals = vec![vec![0.0; frames]; k];
    let mut transforms = vec![Vec::with_capacity(frames); k];
    let mut fallback = Vec::new();
    for c in 0..k {
        for t in 0..frames {
            let (tr, rms) = match align_frame(set, &members[c], t) {
                Ok(v) => v,
                Err(Error::DegenerateConfiguration(_)) => {
                    if !fallback.contains(&c) {
                        fallback.push(c);
                    }
                    align_frame(set, &all, t)?
                }
                Err(e) => return Err(e),
            };
            basis_states[c].push(Pose9::from_rigid(&tr));
            transforms[c].push(tr);
            residuals[c][t] = rms;
        }
    }

    // canonical means live at frame 0; tracks first seen later are pulled
    // back through their cluster's transform
    let canonical_means: Vec<Vector3<f64>> = set
        .tracks
        .iter()
        .enumerate()
        .map(|(i, track)| {
            track
                .iter()
                .enumerate()
                .find_map(|(t, p)| {
                    p.map(|p| match t {
                        0 => p,
                        _ => transforms[labels[i]][t].inverse().apply(&p),
                    })
                })
                .ok_or_else(|| Error::format(format!("tracks[{i}]"), "never visible"))
        })
        .collect::<Result<_>>()?;

    let bases = DiscreteMotionBases {
        timestamps: set.timestamps.clone(),
        basis_states,
        camera_states: set.camera_states.clone(),
    };
    let coefficients = solve_coefficients(&set.tracks, &bases, &canonical_means)?;
    let report = InitReport {
        coefficient_rank_flags: coefficients.iter().map(|c| c.rank_deficient()).collect(),
        cluster_assignments: labels,
        per_frame_residuals: residuals,
        fallback_clusters: fallback,
    };
    Ok(InitResult {
        bases,
        coefficients,
        canonical_means,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_set(frames: usize) -> TrackSet {
        let ts: Vec<f64> = (0..frames)
            .map(|i| -1.0 + 2.0 * i as f64 / (frames as f64 - 1.0))
            .collect();
        TrackSet {
            camera_states: vec![Pose9::identity(); frames],
            tracks: Vec::new(),
            timestamps: ts,
        }
    }

    #[test]
    fn static_tracks_give_identity_bases() {
        let mut set = line_set(4);
        let pts = [
            Vector3::new(0.0, 0.0, 3.0),
            Vector3::new(1.0, 0.0, 3.0),
            Vector3::new(0.0, 1.0, 3.5),
            Vector3::new(0.5, 0.2, 4.0),
        ];
        set.tracks = pts.iter().map(|p| vec![Some(*p); 4]).collect();
        let r = init_bases_from_tracks(&set, 1, 0).unwrap();
        for p in &r.bases.basis_states[0] {
            let tr = p.to_rigid().unwrap();
            assert!((tr.to_homogeneous() - nalgebra::Matrix4::identity()).amax() < 1e-12);
        }
        for c in &r.coefficients {
            assert!((c.w[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn insufficient_tracks() {
        let mut set = line_set(3);
        set.tracks = vec![vec![Some(Vector3::zeros()); 3]];
        assert!(matches!(
            init_bases_from_tracks(&set, 2, 0),
            Err(Error::InsufficientTracks { have: 1, required: 2 })
        ));
    }

    #[test]
    fn kmeans_separates_blobs_deterministically() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let feats: Vec<DVector<f64>> = (0..60)
            .map(|i| {
                let c = if i % 2 == 0 { 0.0 } else { 10.0 };
                DVector::from_vec(vec![c + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)])
            })
            .collect();
        let a = kmeans(&feats, 2, 7).unwrap();
        let b = kmeans(&feats, 2, 7).unwrap();
        assert_eq!(a, b);
        for i in 0..60 {
            assert_eq!(a[i] == a[0], i % 2 == 0);
        }
    }

    #[test]
    fn kmeans_identical_rows_report_empty_cluster() {
        let feats = vec![DVector::from_vec(vec![1.0, 1.0]); 10];
        assert!(matches!(
            kmeans(&feats, 3, 0),
            Err(Error::EmptyCluster { .. })
        ));
    }
}
