//! Phase to velocity conversion, temporal unwrapping and static-tissue
//! background correction.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{Encoding, RoiLabel, RoiMask, SeriesHeader, VelocitySeries};

#[derive(Debug, Error)]
pub enum VelocityError {
    #[error("expected encoding {expected:?}, series is {found:?}")]
    WrongEncoding { expected: Encoding, found: Encoding },
    #[error("mask has no pixels inside")]
    EmptyMask,
    #[error("background mask must be labeled STATIC_TISSUE, got {0:?}")]
    WrongMaskLabel(RoiLabel),
    #[error("mask is {mask_w}x{mask_h}, field is {width}x{height}")]
    DimensionMismatch {
        mask_w: usize,
        mask_h: usize,
        width: usize,
        height: usize,
    },
    #[error("anchor frame {anchor} beyond {n_frames} frames")]
    AnchorOutOfRange { anchor: usize, n_frames: usize },
}

/// Velocity maps in cm/s with the geometry of the source series.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub header: SeriesHeader,
    /// Frame-major, row-major within frame.
    pub values: Vec<f64>,
    pub timestamps: Vec<f64>,
    pub unwrapped: bool,
    pub background_corrected: bool,
}

impl VelocityField {
    /// Wrap an already velocity-encoded series.
    pub fn from_velocity_series(series: &VelocitySeries) -> Result<Self, VelocityError> {
        if series.header.encoding != Encoding::VelocityCmps {
            return Err(VelocityError::WrongEncoding {
                expected: Encoding::VelocityCmps,
                found: series.header.encoding,
            });
        }
        Ok(Self {
            header: series.header.clone(),
            values: series.frames.iter().map(|&v| v as f64).collect(),
            timestamps: series.timestamps.clone(),
            unwrapped: false,
            background_corrected: false,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.header.n_frames
    }

    pub fn frame_len(&self) -> usize {
        self.header.frame_len()
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        let n = self.frame_len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn get(&self, frame: usize, pixel: usize) -> f64 {
        self.values[frame * self.frame_len() + pixel]
    }

    /// Temporal profile of one pixel.
    pub fn pixel_series(&self, pixel: usize) -> Vec<f64> {
        let n = self.frame_len();
        (0..self.n_frames()).map(|k| self.values[k * n + pixel]).collect()
    }

    pub fn check_mask(&self, mask: &RoiMask) -> Result<(), VelocityError> {
        if mask.width != self.header.width || mask.height != self.header.height {
            return Err(VelocityError::DimensionMismatch {
                mask_w: mask.width,
                mask_h: mask.height,
                width: self.header.width,
                height: self.header.height,
            });
        }
        Ok(())
    }

    /// Apply `f` to every pixel's time course, in parallel over pixels.
    fn map_pixel_series(&self, f: impl Fn(&mut [f64]) + Sync) -> Vec<f64> {
        let n = self.frame_len();
        let nf = self.n_frames();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|p| {
                let mut col = self.pixel_series(p);
                f(&mut col);
                col
            })
            .collect();
        let mut out = vec![0.0; n * nf];
        for (p, col) in columns.into_iter().enumerate() {
            for (k, v) in col.into_iter().enumerate() {
                out[k * n + p] = v;
            }
        }
        out
    }
}

/// `v = (phi / pi) * venc`, elementwise.
pub fn phase_to_velocity(series: &VelocitySeries) -> Result<VelocityField, VelocityError> {
    if series.header.encoding != Encoding::PhaseRadians {
        return Err(VelocityError::WrongEncoding {
            expected: Encoding::PhaseRadians,
            found: series.header.encoding,
        });
    }
    let venc = series.header.venc;
    let mut header = series.header.clone();
    header.encoding = Encoding::VelocityCmps;
    Ok(VelocityField {
        header,
        values: series
            .frames
            .iter()
            .map(|&phi| phi as f64 / PI * venc)
            .collect(),
        timestamps: series.timestamps.clone(),
        unwrapped: false,
        background_corrected: false,
    })
}

/// Unwrap one time course in place, trusting `anchor` as unaliased.
///
/// Jumps larger than `venc` between consecutive raw samples shift every later
/// sample by `-2 venc` (or `+2 venc` for negative jumps), cumulatively. Samples
/// before the anchor are handled symmetrically walking backwards.
pub fn unwrap_samples(samples: &mut [f64], venc: f64, anchor: usize) {
    if samples.len() < 2 {
        return;
    }
    let raw = samples.to_vec();
    let mut offset = 0.0;
    for t in anchor + 1..raw.len() {
        let d = raw[t] - raw[t - 1];
        if d > venc {
            offset -= 2.0 * venc;
        } else if d < -venc {
            offset += 2.0 * venc;
        }
        samples[t] = raw[t] + offset;
    }
    offset = 0.0;
    for t in (0..anchor).rev() {
        let d = raw[t] - raw[t + 1];
        if d > venc {
            offset -= 2.0 * venc;
        } else if d < -venc {
            offset += 2.0 * venc;
        }
        samples[t] = raw[t] + offset;
    }
}

/// Temporal unwrap with the first frame trusted.
pub fn unwrap_temporal(field: &VelocityField) -> VelocityField {
    unwrap_temporal_from(field, 0).expect("frame 0 always exists")
}

/// Temporal unwrap with a caller-chosen anchor frame. A field already marked
/// unwrapped is returned unchanged.
pub fn unwrap_temporal_from(
    field: &VelocityField,
    anchor: usize,
) -> Result<VelocityField, VelocityError> {
    if anchor >= field.n_frames() {
        return Err(VelocityError::AnchorOutOfRange {
            anchor,
            n_frames: field.n_frames(),
        });
    }
    if field.unwrapped {
        return Ok(field.clone());
    }
    let venc = field.header.venc;
    let values = field.map_pixel_series(|col| unwrap_samples(col, venc, anchor));
    Ok(VelocityField {
        values,
        unwrapped: true,
        ..field.clone()
    })
}

/// Statistics of the static-tissue reference used by [`background_correct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundStats {
    /// Global offset subtracted from every pixel (cm/s).
    pub offset: f64,
    /// Standard deviation over frames of the per-frame static-mask mean (cm/s).
    pub temporal_sd: f64,
    /// Temporal sd exceeds 10% of venc; the mask probably overlaps moving fluid.
    pub suspect: bool,
}

pub const STATIC_SD_WARN_FRACTION: f64 = 0.10;

/// Subtract one global offset: the static-mask mean over all pixels and frames.
pub fn background_correct(
    field: &VelocityField,
    static_mask: &RoiMask,
) -> Result<(VelocityField, BackgroundStats), VelocityError> {
    if static_mask.label != RoiLabel::StaticTissue {
        return Err(VelocityError::WrongMaskLabel(static_mask.label));
    }
    field.check_mask(static_mask)?;
    let idx: Vec<usize> = static_mask.indices().collect();
    if idx.is_empty() {
        return Err(VelocityError::EmptyMask);
    }
    let frame_means: Vec<f64> = (0..field.n_frames())
        .map(|k| {
            let frame = field.frame(k);
            idx.iter().map(|&i| frame[i]).sum::<f64>() / idx.len() as f64
        })
        .collect();
    let nf = frame_means.len() as f64;
    let offset = frame_means.iter().sum::<f64>() / nf;
    let temporal_sd =
        (frame_means.iter().map(|m| (m - offset).powi(2)).sum::<f64>() / nf).sqrt();
    let suspect = temporal_sd > STATIC_SD_WARN_FRACTION * field.header.venc;
    if suspect {
        log::warn!(
            "static-tissue temporal sd {temporal_sd:.4} cm/s exceeds {:.0}% of venc; background offset may be biased",
            STATIC_SD_WARN_FRACTION * 100.0
        );
    }
    let out = VelocityField {
        values: field.values.iter().map(|v| v - offset).collect(),
        background_corrected: true,
        ..field.clone()
    };
    Ok((
        out,
        BackgroundStats {
            offset,
            temporal_sd,
            suspect,
        },
    ))
}
