//! Stroke volume and cycle-shape descriptors of a 32-point flow curve.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::RoiLabel;

/// Amplitude below which a curve sample counts as zero flow (mL/s).
pub const REVERSAL_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("curve contains non-finite values or rr is not positive")]
    NonFinite,
    #[error("expiration stroke volume is zero")]
    DivisionByZeroSv,
    #[error("stroke volumes in different units ({0:?} vs {1:?})")]
    UnitMismatch(VolumeUnit, VolumeUnit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeUnit {
    #[serde(rename = "uL")]
    Microliter,
    #[serde(rename = "mL")]
    Milliliter,
}

impl VolumeUnit {
    pub fn per_ml(self) -> f64 {
        match self {
            VolumeUnit::Microliter => 1000.0,
            VolumeUnit::Milliliter => 1.0,
        }
    }

    /// Aqueduct volumes are reported in uL, everything else in mL.
    pub fn for_roi(label: RoiLabel) -> Self {
        match label {
            RoiLabel::Aqueduct => VolumeUnit::Microliter,
            _ => VolumeUnit::Milliliter,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            VolumeUnit::Microliter => "uL",
            VolumeUnit::Milliliter => "mL",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvConvention {
    /// Mean of the positive and negative lobe volumes.
    #[default]
    LobeMean,
    /// Volume of the positive (flush) lobe alone.
    FlushLobe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvReport {
    pub sv: f64,
    pub v_plus: f64,
    pub v_minus: f64,
    pub unit: VolumeUnit,
    pub convention: SvConvention,
    /// mL/min regardless of `unit`.
    pub net_flow: f64,
    pub flush_duration_fraction: f64,
    pub direction_reversals: usize,
    pub mean_rr: f64,
}

/// Trapezoid integration of the rectified lobes on the periodic grid
/// (`dt = rr / n`), q in mL/s and rr in ms.
pub fn stroke_volume(
    curve: &[f64],
    rr: f64,
    unit: VolumeUnit,
    convention: SvConvention,
) -> Result<SvReport, MetricsError> {
    if curve.is_empty() || curve.iter().any(|v| !v.is_finite()) || !(rr.is_finite() && rr > 0.0) {
        return Err(MetricsError::NonFinite);
    }
    let n = curve.len();
    let dt_s = rr / n as f64 / 1000.0;
    // periodic trapezoid: each segment averages its endpoints, every point appears twice
    let lobe = |f: &dyn Fn(f64) -> f64| -> f64 {
        (0..n)
            .map(|k| 0.5 * (f(curve[k]) + f(curve[(k + 1) % n])) * dt_s)
            .sum::<f64>()
    };
    let v_plus_ml = lobe(&|q| q.max(0.0));
    let v_minus_ml = lobe(&|q| (-q).max(0.0));
    let sv_ml = match convention {
        SvConvention::LobeMean => 0.5 * (v_plus_ml + v_minus_ml),
        SvConvention::FlushLobe => v_plus_ml,
    };
    let scale = unit.per_ml();
    Ok(SvReport {
        sv: sv_ml * scale,
        v_plus: v_plus_ml * scale,
        v_minus: v_minus_ml * scale,
        unit,
        convention,
        net_flow: (v_plus_ml - v_minus_ml) / rr * 60_000.0,
        flush_duration_fraction: curve.iter().filter(|&&q| q > 0.0).count() as f64 / n as f64,
        direction_reversals: direction_reversals(curve),
        mean_rr: rr,
    })
}

/// Sign changes around the periodic curve, ignoring exact zeros.
pub fn direction_reversals(curve: &[f64]) -> usize {
    let signs: Vec<bool> = curve.iter().filter(|&&q| q != 0.0).map(|&q| q > 0.0).collect();
    if signs.len() < 2 {
        return 0;
    }
    (0..signs.len())
        .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
        .count()
}

/// Relative inspiration-over-expiration stroke-volume change.
pub fn sv_modulation(insp: &SvReport, exp: &SvReport) -> Result<f64, MetricsError> {
    if insp.unit != exp.unit {
        return Err(MetricsError::UnitMismatch(insp.unit, exp.unit));
    }
    if exp.sv == 0.0 {
        return Err(MetricsError::DivisionByZeroSv);
    }
    Ok((insp.sv - exp.sv) / exp.sv)
}

/// True when the curve flows both ways within one cycle.
pub fn reversal_check(curve: &[f64]) -> bool {
    curve.iter().any(|&q| q > REVERSAL_EPS) && curve.iter().any(|&q| q < -REVERSAL_EPS)
}
