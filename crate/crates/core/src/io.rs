//! On-disk formats: versioned JSON envelopes for scenes, tracks, spline
//! checkpoints and run configs; PNG/PFM frames; CSV reports; SVG charts.
//!
//! Floats are written as shortest round-trip decimals and parsed back
//! exactly, so `load(save(x)) == x` bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Cursor, Read};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{FitConfig, TrackSet};
use crate::geometry::{Pose9, Rotation};
use crate::metrics::{Correspondence, Image};
use crate::motion::{DiscreteMotionBases, DynamicScene, GaussianPrimitive};
use crate::scaffold::{MaskConfig, ScaffoldFrame};
use crate::spline::{open_uniform_knots, C4ddSpline, KnotVector, SplineConfig};
use crate::synth::{AnalyticSceneSpec, Intrinsics};

pub const SCENE_VERSION: &str = "dyn4d-scene/1";
pub const TRACKS_VERSION: &str = "dyn4d-tracks/1";
pub const CHECKPOINT_VERSION: &str = "dyn4d-checkpoint/1";

/// JSON → `T` with the offending field path in any error.
fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::format(if path == "." { "<root>".into() } else { path }, e.inner().to_string())
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable document");
    s.push('\n');
    s
}

fn check_version(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::format(
            "version",
            format!("expected '{expected}', found '{found}'"),
        ));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------- scene

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveDoc {
    mean0: [f64; 3],
    /// Row-major 3×3.
    orient0: [[f64; 3]; 3],
    scale: [f64; 3],
    opacity: f64,
    color: [f64; 3],
    foreground: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasesDoc {
    timestamps: Vec<f64>,
    basis_states: Vec<Vec<Pose9>>,
    camera_states: Vec<Pose9>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    version: String,
    camera: Intrinsics,
    primitives: Vec<PrimitiveDoc>,
    coefficients: Vec<Option<Vec<f64>>>,
    bases: BasesDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analytic: Option<AnalyticSceneSpec>,
}

/// A discrete dynamic scene plus, for synthetic scenes, the spec that
/// regenerates its analytic ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub scene: DynamicScene,
    pub analytic: Option<AnalyticSceneSpec>,
}

impl SceneFile {
    pub fn to_json(&self) -> String {
        let s = &self.scene;
        let doc = SceneDoc {
            version: SCENE_VERSION.into(),
            camera: Intrinsics::of(&s.camera),
            primitives: s
                .primitives
                .iter()
                .map(|g| {
                    let m = g.orient0.matrix();
                    PrimitiveDoc {
                        mean0: g.mean0.into(),
                        orient0: [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)])),
                        scale: g.scale.into(),
                        opacity: g.opacity,
                        color: g.color,
                        foreground: g.is_foreground,
                    }
                })
                .collect(),
            coefficients: s
                .coefficients
                .iter()
                .map(|w| w.as_ref().map(|w| w.iter().copied().collect()))
                .collect(),
            bases: BasesDoc {
                timestamps: s.bases.timestamps.clone(),
                basis_states: s.bases.basis_states.clone(),
                camera_states: s.bases.camera_states.clone(),
            },
            analytic: self.analytic.clone(),
        };
        to_json(&doc)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SceneDoc = parse_json(text)?;
        check_version(&doc.version, SCENE_VERSION)?;
        let camera = doc
            .camera
            .camera()
            .map_err(|e| Error::format("camera", e.to_string()))?;
        let primitives = doc
            .primitives
            .into_iter()
            .map(|p| GaussianPrimitive {
                mean0: p.mean0.into(),
                orient0: Rotation::from_matrix_unchecked(Matrix3::from_fn(|r, c| p.orient0[r][c])),
                scale: p.scale.into(),
                opacity: p.opacity,
                color: p.color,
                is_foreground: p.foreground,
            })
            .collect();
        let scene = DynamicScene {
            primitives,
            coefficients: doc
                .coefficients
                .into_iter()
                .map(|w| w.map(DVector::from_vec))
                .collect(),
            bases: DiscreteMotionBases {
                timestamps: doc.bases.timestamps,
                basis_states: doc.bases.basis_states,
                camera_states: doc.bases.camera_states,
            },
            camera,
        };
        scene.validate()?;
        if let Some(t) = scene.bases.timestamps.iter().position(|t| !(-1.0..=1.0).contains(t)) {
            return Err(Error::format(format!("bases.timestamps[{t}]"), "outside [-1, 1]"));
        }
        if let Some(a) = &doc.analytic {
            a.validate()
                .map_err(|e| Error::format("analytic", e.to_string()))?;
        }
        Ok(SceneFile {
            scene,
            analytic: doc.analytic,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }
}

// ---------------------------------------------------------------- tracks

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleDoc {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    visible: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDoc {
    id: usize,
    samples: Vec<SampleDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackDoc {
    version: String,
    intrinsics: Intrinsics,
    timestamps: Vec<f64>,
    camera_states: Vec<Pose9>,
    points: Vec<PointDoc>,
}

/// Point tracks plus per-frame camera poses and intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackFile {
    pub tracks: TrackSet,
    pub intrinsics: Intrinsics,
}

impl TrackFile {
    pub fn to_json(&self) -> String {
        let ts = &self.tracks;
        let doc = TrackDoc {
            version: TRACKS_VERSION.into(),
            intrinsics: self.intrinsics,
            timestamps: ts.timestamps.clone(),
            camera_states: ts.camera_states.clone(),
            points: ts
                .tracks
                .iter()
                .enumerate()
                .map(|(id, tr)| PointDoc {
                    id,
                    samples: tr
                        .iter()
                        .zip(&ts.timestamps)
                        .map(|(p, t)| {
                            let v = p.unwrap_or_else(Vector3::zeros);
                            SampleDoc {
                                t: *t,
                                x: v.x,
                                y: v.y,
                                z: v.z,
                                visible: p.is_some(),
                            }
                        })
                        .collect(),
                })
                .collect(),
        };
        to_json(&doc)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TrackDoc = parse_json(text)?;
        check_version(&doc.version, TRACKS_VERSION)?;
        doc.intrinsics
            .camera()
            .map_err(|e| Error::format("intrinsics", e.to_string()))?;
        let n = doc.timestamps.len();
        if let Some(t) = doc.timestamps.iter().position(|t| !(-1.0..=1.0).contains(t)) {
            return Err(Error::format(format!("timestamps[{t}]"), "outside [-1, 1]"));
        }
        let mut tracks = Vec::with_capacity(doc.points.len());
        for (i, p) in doc.points.iter().enumerate() {
            if p.samples.len() != n {
                return Err(Error::format(
                    format!("points[{i}].samples"),
                    format!("expected {n} samples, found {}", p.samples.len()),
                ));
            }
            let mut tr = Vec::with_capacity(n);
            for (f, s) in p.samples.iter().enumerate() {
                let here = format!("points[{i}].samples[{f}]");
                if s.t.to_bits() != doc.timestamps[f].to_bits() {
                    return Err(Error::format(
                        format!("{here}.t"),
                        format!("{} disagrees with timestamps[{f}] = {}", s.t, doc.timestamps[f]),
                    ));
                }
                if s.visible && !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite()) {
                    return Err(Error::format(here, "non-finite position"));
                }
                tr.push(s.visible.then(|| Vector3::new(s.x, s.y, s.z)));
            }
            tracks.push(tr);
        }
        let set = TrackSet {
            timestamps: doc.timestamps,
            tracks,
            camera_states: doc.camera_states,
        };
        set.validate()?;
        for (t, p) in set.camera_states.iter().enumerate() {
            p.to_rigid()
                .map_err(|e| Error::format(format!("camera_states[{t}]"), e.to_string()))?;
        }
        Ok(TrackFile {
            tracks: set,
            intrinsics: doc.intrinsics,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }
}

// ---------------------------------------------------------------- checkpoint

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    version: String,
    config: SplineConfig,
    knots: Vec<f64>,
    obs_count: usize,
    /// `[k][channel][control]`.
    motion_ctrl: Vec<Vec<Vec<f64>>>,
    /// `[channel][control]`.
    camera_ctrl: Vec<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_of(rows: &[Vec<f64>], cols: usize, path: &str) -> Result<DMatrix<f64>> {
    if rows.len() != 9 {
        return Err(Error::format(path, format!("expected 9 channels, found {}", rows.len())));
    }
    for (c, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::format(
                format!("{path}[{c}]"),
                format!("expected {cols} control points, found {}", r.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(9, cols, |r, c| rows[r][c]))
}

pub fn checkpoint_to_json(s: &C4ddSpline) -> String {
    to_json(&CheckpointDoc {
        version: CHECKPOINT_VERSION.into(),
        config: s.config,
        knots: s.knots.knots.clone(),
        obs_count: s.obs_count,
        motion_ctrl: s.motion_ctrl.iter().map(rows_of).collect(),
        camera_ctrl: rows_of(&s.camera_ctrl),
    })
}

pub fn checkpoint_from_json(text: &str) -> Result<C4ddSpline> {
    let doc: CheckpointDoc = parse_json(text)?;
    check_version(&doc.version, CHECKPOINT_VERSION)?;
    doc.config
        .validate()
        .map_err(|e| Error::format("config", e.to_string()))?;
    let m = doc.config.num_control;
    let expected = open_uniform_knots(m, doc.config.degree)?;
    if doc.knots.len() != expected.len()
        || doc.knots.iter().zip(&expected.knots).any(|(a, b)| a.to_bits() != b.to_bits())
    {
        return Err(Error::format("knots", "not the open-uniform vector for config"));
    }
    if doc.obs_count < 2 {
        return Err(Error::format("obs_count", "must be >= 2"));
    }
    let motion_ctrl = doc
        .motion_ctrl
        .iter()
        .enumerate()
        .map(|(k, rows)| matrix_of(rows, m, &format!("motion_ctrl[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    let spline = C4ddSpline {
        config: doc.config,
        knots: KnotVector { knots: doc.knots },
        motion_ctrl,
        camera_ctrl: matrix_of(&doc.camera_ctrl, m, "camera_ctrl")?,
        obs_count: doc.obs_count,
    };
    spline.validate()?;
    Ok(spline)
}

pub fn save_checkpoint(path: &Path, s: &C4ddSpline) -> Result<()> {
    write_bytes(path, checkpoint_to_json(s).as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<C4ddSpline> {
    checkpoint_from_json(&read_text(path)?)
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacSettings {
    pub inlier_threshold: f64,
    pub iterations: usize,
}

impl Default for RansacSettings {
    fn default() -> Self {
        RansacSettings {
            inlier_threshold: 1.0,
            iterations: 2000,
        }
    }
}

/// Everything a CLI run can be configured with; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fit: FitConfig,
    pub mask: MaskConfig,
    pub spline: SplineConfig,
    pub ransac: RansacSettings,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fit: FitConfig::default(),
            mask: MaskConfig::default(),
            spline: SplineConfig::default(),
            ransac: RansacSettings::default(),
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let at = |p: &'static str| move |e: Error| Error::format(p, e.to_string());
        self.fit.validate().map_err(at("fit"))?;
        self.mask.validate().map_err(at("mask"))?;
        self.spline.validate().map_err(at("spline"))?;
        if !(self.ransac.inlier_threshold > 0.0) || self.ransac.iterations == 0 {
            return Err(Error::format("ransac", "threshold and iterations must be > 0"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = parse_json(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }
}

// ---------------------------------------------------------------- images

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn png_bytes(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc
            .write_header()
            .map_err(|e| Error::Io(format!("png header: {e}")))?;
        w.write_image_data(data)
            .map_err(|e| Error::Io(format!("png data: {e}")))?;
    }
    Ok(out)
}

pub fn write_color_png(path: &Path, frame: &ScaffoldFrame) -> Result<()> {
    let data: Vec<u8> = frame.color.iter().flat_map(|c| c.map(to_u8)).collect();
    write_bytes(path, &png_bytes(frame.width, frame.height, png::ColorType::Rgb, &data)?)
}

pub fn write_mask_png(path: &Path, frame: &ScaffoldFrame) -> Result<()> {
    let data: Vec<u8> = frame.mask.iter().map(|m| if *m { 255 } else { 0 }).collect();
    write_bytes(path, &png_bytes(frame.width, frame.height, png::ColorType::Grayscale, &data)?)
}

/// 8-bit PNG → image with values in [0, 1]; channels as stored (alpha dropped).
pub fn read_png(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec
        .read_info()
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    let (ch, keep) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        other => {
            return Err(Error::format(
                path.display().to_string(),
                format!("unsupported color type {other:?}"),
            ))
        }
    };
    let data: Vec<f64> = buf[..info.buffer_size()]
        .chunks(ch)
        .flat_map(|px| px[..keep].iter().map(|v| *v as f64 / 255.0).collect::<Vec<_>>())
        .collect();
    Image::new(info.width as usize, info.height as usize, keep, data)
}

/// Single-channel PFM: `Pf` header, negative scale (little-endian), rows
/// stored bottom to top.
pub fn pfm_bytes(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for y in (0..height).rev() {
        for x in 0..width {
            out.extend_from_slice(&(values[y * width + x] as f32).to_le_bytes());
        }
    }
    out
}

pub fn write_depth_pfm(path: &Path, frame: &ScaffoldFrame) -> Result<()> {
    write_bytes(path, &pfm_bytes(frame.width, frame.height, &frame.depth))
}

/// Inverse of [`pfm_bytes`] (little- or big-endian `Pf`); row-major top-down.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let f = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut bytes = Vec::new();
    BufReader::new(f).read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::format(path.display().to_string(), m.to_string());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "Pf" {
        return Err(bad("not a single-channel PFM"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = fields[3].parse().map_err(|_| bad("bad scale"))?;
    let body = &bytes[pos.min(bytes.len())..];
    if body.len() != 4 * w * h {
        return Err(bad("payload size mismatch"));
    }
    let mut v = vec![0f32; w * h];
    for (i, c) in body.chunks(4).enumerate() {
        let raw = [c[0], c[1], c[2], c[3]];
        let val = if scale < 0.0 { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, x) = (i / w, i % w);
        v[(h - 1 - row) * w + x] = val;
    }
    Ok((w, h, v))
}

pub fn frame_to_image(frame: &ScaffoldFrame) -> Image {
    Image {
        width: frame.width,
        height: frame.height,
        channels: 3,
        data: frame.color.iter().flatten().copied().collect(),
    }
}

// ---------------------------------------------------------------- csv / svg

/// Writes a header plus rows of already-formatted fields.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()?;
    }
    write_bytes(path, &buf)
}

/// `x1,y1,x2,y2` rows, optional header line.
pub fn read_correspondences(path: &Path) -> Result<Vec<Correspondence>> {
    let f = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(f));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(format!("row {i}"), e.to_string()))?;
        let vals: Vec<std::result::Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if i == 0 && vals.iter().any(|v| v.is_err()) {
            continue;
        }
        if vals.len() != 4 {
            return Err(Error::format(format!("row {i}"), format!("expected 4 fields, found {}", vals.len())));
        }
        let v: Vec<f64> = vals
            .into_iter()
            .enumerate()
            .map(|(c, v)| v.map_err(|_| Error::format(format!("row {i}.col {c}"), "not a number")))
            .collect::<Result<_>>()?;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::format(format!("row {i}"), "non-finite coordinate"));
        }
        out.push(Correspondence::new([v[0], v[1]], [v[2], v[3]]));
    }
    Ok(out)
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [(f64, f64)],
}

/// Plain line chart: axes, ticks at the data extremes, one polyline per series.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{title}</text>"#, w / 2.0);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        b = h - m,
        r = w - m
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}" font-size="11">{v:.3}</text>"#, sx(v), h - m + 16.0);
    }
    for v in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{v:.3e}</text>"#, m - 4.0, sy(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{x_label}</text>"#, w / 2.0, h - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {0})">{y_label}</text>"#,
        h / 2.0
    );
    for (i, se) in series.iter().enumerate() {
        let pts: Vec<String> = se
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{}" fill="none" stroke-width="1.5"/>"#, pts.join(" "), se.color);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{}">{}</text>"#,
            w - m - 120.0,
            m + 14.0 * i as f64,
            se.color,
            se.label
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}
