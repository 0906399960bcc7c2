//! ROI flow integration and correlation-based ROI refinement.

use std::collections::VecDeque;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{RoiLabel, RoiMask};
use crate::velocity::VelocityField;

/// mm^2 * cm/s -> mL/s
pub const MM2_CMPS_TO_ML_PER_S: f64 = 0.01;

pub const DEFAULT_REFINE_THRESHOLD: f64 = 0.7;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("mask is {mask_w}x{mask_h}, field is {width}x{height}")]
    DimensionMismatch {
        mask_w: usize,
        mask_h: usize,
        width: usize,
        height: usize,
    },
    #[error("mask has no pixels inside")]
    EmptyMask,
    #[error("correlation threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
}

/// Flow waveform in mL/s at the frame timestamps of the source series.
/// Positive values point craniocaudally (systolic flush).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSamples {
    pub timestamps: Vec<f64>,
    pub q: Vec<f64>,
    pub roi_label: RoiLabel,
    pub pixel_area: f64,
    pub n_roi_pixels: usize,
    pub venc: f64,
}

impl FlowSamples {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Mean sampling interval in ms.
    pub fn sample_interval(&self) -> f64 {
        let n = self.timestamps.len();
        if n < 2 {
            return 0.0;
        }
        (self.timestamps[n - 1] - self.timestamps[0]) / (n - 1) as f64
    }

    /// Largest |q| representable without aliasing.
    pub fn unit_bound(&self) -> f64 {
        self.n_roi_pixels as f64 * self.pixel_area * self.venc * MM2_CMPS_TO_ML_PER_S
    }

    /// Flip the sign convention, for acquisitions encoded caudocranially.
    pub fn negated(&self) -> Self {
        Self {
            q: self.q.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            q: self.q.iter().map(|v| alpha * v).collect(),
            ..self.clone()
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            timestamps: self.timestamps.iter().map(|t| t + dt).collect(),
            ..self.clone()
        }
    }
}

fn check_dims(field: &VelocityField, roi: &RoiMask) -> Result<(), FlowError> {
    if roi.width != field.header.width || roi.height != field.header.height {
        return Err(FlowError::DimensionMismatch {
            mask_w: roi.width,
            mask_h: roi.height,
            width: field.header.width,
            height: field.header.height,
        });
    }
    Ok(())
}

/// `q(t) = sum_{i in roi} v_i(t) * pixel_area * 0.01` in mL/s.
pub fn extract_flow(field: &VelocityField, roi: &RoiMask) -> Result<FlowSamples, FlowError> {
    check_dims(field, roi)?;
    let idx: Vec<usize> = roi.indices().collect();
    if idx.is_empty() {
        return Err(FlowError::EmptyMask);
    }
    if !field.background_corrected {
        log::debug!("extracting flow from a field without background correction");
    }
    let area = field.header.pixel_area();
    let q = (0..field.n_frames())
        .into_par_iter()
        .map(|k| {
            let frame = field.frame(k);
            idx.iter().map(|&i| frame[i]).sum::<f64>() * area * MM2_CMPS_TO_ML_PER_S
        })
        .collect();
    Ok(FlowSamples {
        timestamps: field.timestamps.clone(),
        q,
        roi_label: roi.label,
        pixel_area: area,
        n_roi_pixels: idx.len(),
        venc: field.header.venc,
    })
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

/// Grow the ROI over pixels 8-connected to the seed whose time course
/// correlates with the seed-mean curve at `threshold` or better.
pub fn refine_roi(
    field: &VelocityField,
    seed: &RoiMask,
    threshold: f64,
) -> Result<RoiMask, FlowError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(FlowError::InvalidThreshold(threshold));
    }
    check_dims(field, seed)?;
    let seed_idx: Vec<usize> = seed.indices().collect();
    if seed_idx.is_empty() {
        return Err(FlowError::EmptyMask);
    }
    let nf = field.n_frames();
    let reference: Vec<f64> = (0..nf)
        .map(|k| {
            let frame = field.frame(k);
            seed_idx.iter().map(|&i| frame[i]).sum::<f64>() / seed_idx.len() as f64
        })
        .collect();
    let (w, h) = (field.header.width, field.header.height);
    let accepted: Vec<bool> = (0..w * h)
        .into_par_iter()
        .map(|p| pearson(&field.pixel_series(p), &reference) >= threshold)
        .collect();

    let mut inside = vec![false; w * h];
    let mut queue: VecDeque<usize> = seed_idx.iter().copied().filter(|&p| accepted[p]).collect();
    for &p in &queue {
        inside[p] = true;
    }
    while let Some(p) = queue.pop_front() {
        let (x, y) = ((p % w) as isize, (p / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if !inside[q] && accepted[q] {
                    inside[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    RoiMask::new(w, h, inside, seed.label).map_err(|_| FlowError::EmptyMask)
}
