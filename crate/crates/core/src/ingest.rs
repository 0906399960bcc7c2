//! On-disk containers for velocity-map series, ROI masks and physiological traces.
//!
//! * `.csfd` series: 8-byte magic `CSFDYN01`, little-endian `u32` header length,
//!   UTF-8 JSON [`SeriesHeader`], then `n_frames * height * width` little-endian
//!   `f32` values, frame-major and row-major within a frame.
//! * `.pgm` masks: binary P5, maxval 255, nonzero means inside. The ROI label is
//!   carried in a `# label <NAME>` comment line.
//! * `.csv` physio traces: header `t_ms,amplitude` followed by numeric rows.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SERIES_MAGIC: &[u8; 8] = b"CSFDYN01";

/// Frames per reconstructed cardiac cycle of a gated conventional acquisition.
pub const GATED_POINTS_PER_CYCLE: usize = 32;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("value out of range: {0}")]
    ValueOutOfRange(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("non-uniform sampling at line {line}: gap {gap} ms vs median {median} ms")]
    NonUniformSampling { line: u64, gap: f64, median: f64 },
    #[error("mask has no pixels inside")]
    EmptyMask,
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Encoding {
    PhaseRadians,
    VelocityCmps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SeriesKind {
    ContinuousEpi,
    GatedConv,
}

/// Geometry and encoding of a velocity-map series. Lengths in mm, times in ms,
/// velocities in cm/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesHeader {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub pixel_spacing_x: f64,
    pub pixel_spacing_y: f64,
    pub slice_thickness: f64,
    pub venc: f64,
    pub frame_interval: f64,
    pub t0: f64,
    pub encoding: Encoding,
    pub series_kind: SeriesKind,
}

impl SeriesHeader {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::MalformedHeader(m.to_string()));
        if self.width == 0 || self.height == 0 || self.n_frames == 0 {
            return bad("width, height and n_frames must be >= 1");
        }
        let positive = [
            ("pixel_spacing_x", self.pixel_spacing_x),
            ("pixel_spacing_y", self.pixel_spacing_y),
            ("venc", self.venc),
            ("frame_interval", self.frame_interval),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !self.slice_thickness.is_finite() || self.slice_thickness < 0.0 {
            return bad("slice_thickness must be finite and >= 0");
        }
        if !self.t0.is_finite() {
            return bad("t0 must be finite");
        }
        if self.series_kind == SeriesKind::GatedConv && self.n_frames != GATED_POINTS_PER_CYCLE {
            return Err(IngestError::DimensionMismatch(format!(
                "GATED_CONV series must hold {GATED_POINTS_PER_CYCLE} frames, header says {}",
                self.n_frames
            )));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel_area(&self) -> f64 {
        self.pixel_spacing_x * self.pixel_spacing_y
    }

    pub fn timestamp(&self, frame: usize) -> f64 {
        self.t0 + frame as f64 * self.frame_interval
    }
}

/// Phase is valid in `[-pi, pi)`, compared in f64.
pub fn phase_in_range(v: f32) -> bool {
    let v = v as f64;
    (-PI..PI).contains(&v)
}

/// Round a wrapped phase to f32 while keeping it inside `[-pi, pi)`.
pub fn phase_to_f32(phase: f64) -> f32 {
    let mut v = phase as f32;
    if (v as f64) >= PI {
        v = f32::from_bits(v.to_bits() - 1);
    }
    if (v as f64) < -PI {
        // negative floats: decrementing the bit pattern moves toward zero
        v = f32::from_bits(v.to_bits() - 1);
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySeries {
    pub header: SeriesHeader,
    /// Frame-major, row-major within frame.
    pub frames: Vec<f32>,
    pub timestamps: Vec<f64>,
}

impl VelocitySeries {
    /// Build a series, deriving timestamps from the header and checking every invariant.
    pub fn new(header: SeriesHeader, frames: Vec<f32>) -> Result<Self, IngestError> {
        header.validate()?;
        let timestamps = (0..header.n_frames).map(|k| header.timestamp(k)).collect();
        let s = Self {
            header,
            frames,
            timestamps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        self.header.validate()?;
        let expected = self.header.n_frames * self.header.frame_len();
        if self.frames.len() != expected {
            return Err(IngestError::DimensionMismatch(format!(
                "payload holds {} values, header implies {expected}",
                self.frames.len()
            )));
        }
        if self.timestamps.len() != self.header.n_frames {
            return Err(IngestError::DimensionMismatch(format!(
                "{} timestamps for {} frames",
                self.timestamps.len(),
                self.header.n_frames
            )));
        }
        if self.timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(IngestError::MalformedHeader(
                "timestamps not strictly increasing".into(),
            ));
        }
        match self.header.encoding {
            Encoding::PhaseRadians => {
                if let Some((i, v)) = self
                    .frames
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !phase_in_range(**v))
                {
                    return Err(IngestError::ValueOutOfRange(format!(
                        "phase {v} at index {i} outside [-pi, pi)"
                    )));
                }
            }
            Encoding::VelocityCmps => {
                if let Some((i, v)) = self.frames.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                    return Err(IngestError::ValueOutOfRange(format!(
                        "non-finite velocity {v} at index {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn frame(&self, k: usize) -> &[f32] {
        let n = self.header.frame_len();
        &self.frames[k * n..(k + 1) * n]
    }

    /// Serialize to the `.csfd` byte layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>, IngestError> {
        self.validate()?;
        let json = serde_json::to_vec(&self.header)
            .map_err(|e| IngestError::MalformedHeader(e.to_string()))?;
        let mut out = Vec::with_capacity(12 + json.len() + 4 * self.frames.len());
        out.extend_from_slice(SERIES_MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for v in &self.frames {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IngestError> {
        if bytes.len() < 12 || &bytes[..8] != SERIES_MAGIC {
            return Err(IngestError::MalformedHeader("bad magic or version".into()));
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[12..];
        if hlen > body.len() {
            return Err(IngestError::MalformedHeader(format!(
                "header length {hlen} exceeds file size"
            )));
        }
        let header: SeriesHeader = serde_json::from_slice(&body[..hlen])
            .map_err(|e| IngestError::MalformedHeader(e.to_string()))?;
        header.validate()?;
        let payload = &body[hlen..];
        let expected = header
            .n_frames
            .checked_mul(header.frame_len())
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| IngestError::MalformedHeader("dimensions overflow".into()))?;
        if payload.len() != expected {
            return Err(IngestError::DimensionMismatch(format!(
                "payload is {} bytes, header implies {expected}",
                payload.len()
            )));
        }
        let frames = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(header, frames)
    }
}

pub fn read_series(path: impl AsRef<Path>) -> Result<VelocitySeries, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    VelocitySeries::from_bytes(&bytes)
}

pub fn write_series(series: &VelocitySeries, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let bytes = series.to_bytes()?;
    fs::write(path, bytes).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RoiLabel {
    Aqueduct,
    SpinalCanal,
    StaticTissue,
    Other,
}

impl RoiLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RoiLabel::Aqueduct => "AQUEDUCT",
            RoiLabel::SpinalCanal => "SPINAL_CANAL",
            RoiLabel::StaticTissue => "STATIC_TISSUE",
            RoiLabel::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "AQUEDUCT" => Some(RoiLabel::Aqueduct),
            "SPINAL_CANAL" => Some(RoiLabel::SpinalCanal),
            "STATIC_TISSUE" => Some(RoiLabel::StaticTissue),
            "OTHER" => Some(RoiLabel::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub pixels: Vec<bool>,
    pub label: RoiLabel,
}

impl RoiMask {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<bool>,
        label: RoiLabel,
    ) -> Result<Self, IngestError> {
        if pixels.len() != width * height {
            return Err(IngestError::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} mask",
                pixels.len()
            )));
        }
        if !pixels.iter().any(|&p| p) {
            return Err(IngestError::EmptyMask);
        }
        Ok(Self {
            width,
            height,
            pixels,
            label,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        label: RoiLabel,
        inside: impl Fn(usize, usize) -> bool,
    ) -> Result<Self, IngestError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(inside(x, y));
            }
        }
        Self::new(width, height, pixels, label)
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| p.then_some(i))
    }

    /// Pairing check against a series geometry.
    pub fn check_dims(&self, width: usize, height: usize) -> Result<(), IngestError> {
        if self.width != width || self.height != height {
            return Err(IngestError::DimensionMismatch(format!(
                "mask is {}x{}, series is {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!(
            "P5\n# label {}\n{} {}\n255\n",
            self.label.as_str(),
            self.width,
            self.height
        )
        .into_bytes();
        out.extend(self.pixels.iter().map(|&p| if p { 255u8 } else { 0 }));
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, IngestError> {
        let bad = |m: &str| IngestError::MalformedHeader(m.to_string());
        let mut pos = 0usize;
        let mut label = RoiLabel::Other;
        let mut tokens: Vec<String> = Vec::with_capacity(4);
        while tokens.len() < 4 {
            // skip whitespace and comments
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos >= bytes.len() {
                return Err(bad("truncated PGM header"));
            }
            if bytes[pos] == b'#' {
                let end = bytes[pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(bytes.len(), |e| pos + e);
                let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("label") {
                    if let Some(l) = parts.next().and_then(RoiLabel::parse) {
                        label = l;
                    }
                }
                pos = end;
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if tokens[0] != "P5" {
            return Err(bad("not a binary P5 PGM"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM dimension"));
        let (width, height, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
        if maxval != 255 {
            return Err(bad("PGM maxval must be 255"));
        }
        if width == 0 || height == 0 {
            return Err(bad("PGM dimensions must be >= 1"));
        }
        // exactly one whitespace byte separates maxval from raster
        pos += 1;
        let raster = bytes.get(pos..).unwrap_or(&[]);
        if raster.len() != width * height {
            return Err(IngestError::DimensionMismatch(format!(
                "raster holds {} bytes, expected {}",
                raster.len(),
                width * height
            )));
        }
        Self::new(width, height, raster.iter().map(|&b| b != 0).collect(), label)
    }
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<RoiMask, IngestError> {
    let path = path.as_ref();
    RoiMask::from_pgm(&fs::read(path).map_err(io_err(path))?)
}

pub fn write_mask(mask: &RoiMask, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    fs::write(path, mask.to_pgm()).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhysioKind {
    RespBelt,
    CardiacPlethysmo,
}

/// Uniformly sampled physiological signal on its own clock (ms).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysioTrace {
    pub sample_interval: f64,
    pub t0: f64,
    pub samples: Vec<f64>,
    pub kind: PhysioKind,
}

impl PhysioTrace {
    pub fn new(
        sample_interval: f64,
        t0: f64,
        samples: Vec<f64>,
        kind: PhysioKind,
    ) -> Result<Self, IngestError> {
        if !(sample_interval.is_finite() && sample_interval > 0.0) {
            return Err(IngestError::MalformedHeader(format!(
                "sample_interval must be > 0, got {sample_interval}"
            )));
        }
        if samples.len() < 2 {
            return Err(IngestError::DimensionMismatch(
                "physio trace needs at least 2 samples".into(),
            ));
        }
        if !t0.is_finite() || samples.iter().any(|v| !v.is_finite()) {
            return Err(IngestError::ValueOutOfRange("non-finite physio value".into()));
        }
        Ok(Self {
            sample_interval,
            t0,
            samples,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.sample_interval
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn duration(&self) -> f64 {
        self.t_end() - self.t0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_ms,amplitude\n");
        for (i, v) in self.samples.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.time(i), v));
        }
        s
    }

    /// Parse a `t_ms,amplitude` CSV. Sampling must be uniform within 1% of the
    /// median interval; irregular input is rejected rather than resampled.
    pub fn from_csv(text: &str, kind: PhysioKind) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| IngestError::MalformedRow {
                line: 1,
                reason: e.to_string(),
            })?
            .clone();
        if headers.len() != 2 || &headers[0] != "t_ms" || &headers[1] != "amplitude" {
            return Err(IngestError::MalformedRow {
                line: 1,
                reason: "expected header `t_ms,amplitude`".into(),
            });
        }
        let mut times = Vec::new();
        let mut lines = Vec::new();
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| IngestError::MalformedRow {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            let field = |i: usize, name: &str| -> Result<f64, IngestError> {
                let raw = rec.get(i).filter(|s| !s.is_empty()).ok_or_else(|| {
                    IngestError::MalformedRow {
                        line,
                        reason: format!("missing {name}"),
                    }
                })?;
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| IngestError::MalformedRow {
                        line,
                        reason: format!("bad {name} `{raw}`"),
                    })
            };
            if rec.len() > 2 {
                return Err(IngestError::MalformedRow {
                    line,
                    reason: format!("expected 2 columns, found {}", rec.len()),
                });
            }
            times.push(field(0, "t_ms")?);
            samples.push(field(1, "amplitude")?);
            lines.push(line);
        }
        if times.len() < 2 {
            return Err(IngestError::DimensionMismatch(
                "physio trace needs at least 2 samples".into(),
            ));
        }
        let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let mut sorted = gaps.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        if median <= 0.0 {
            return Err(IngestError::NonUniformSampling {
                line: lines[1],
                gap: median,
                median,
            });
        }
        for (i, &g) in gaps.iter().enumerate() {
            if (g - median).abs() > 0.01 * median {
                return Err(IngestError::NonUniformSampling {
                    line: lines[i + 1],
                    gap: g,
                    median,
                });
            }
        }
        Self::new(median, times[0], samples, kind)
    }
}

pub fn read_physio(path: impl AsRef<Path>, kind: PhysioKind) -> Result<PhysioTrace, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    PhysioTrace::from_csv(&text, kind)
}

pub fn write_physio(trace: &PhysioTrace, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(trace.to_csv().as_bytes()).map_err(io_err(path))
}
