//! Per-cycle resampling onto the 32-point cardiac phase grid and
//! ensemble averaging into global, inspiration and expiration curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gating::{CycleLabel, LabeledCycle};

pub const GRID_POINTS: usize = 32;
pub const MIN_CYCLE_SAMPLES: usize = 4;

pub type Curve32 = [f64; GRID_POINTS];

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("cycle {id} holds {found} samples, need at least {MIN_CYCLE_SAMPLES}")]
    TooFewSamples { id: usize, found: usize },
    #[error("no cycles to average")]
    EmptyEnsemble,
    #[error("invalid cycle: {0}")]
    InvalidCycle(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    CubicSpline,
    Linear,
}

/// Interpolating periodic cubic spline with period 1 through non-uniform knots in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl PeriodicSpline {
    /// `x` strictly increasing within `[0, 1)`, at least 3 knots.
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        assert!(n >= 3 && y.len() == n, "periodic spline needs >= 3 knots");
        let h: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { x[i + 1] - x[i] } else { x[0] + 1.0 - x[n - 1] })
            .collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            sub[i] = h[prev];
            diag[i] = 2.0 * (h[prev] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * ((y[next] - y[i]) / h[i] - (y[i] - y[prev]) / h[prev]);
        }
        let m = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let n = self.x.len();
        let u = u.rem_euclid(1.0);
        // interval i spans [x_i, x_{i+1}), the last one wraps to x_0 + 1
        let (i, lo, hi, uu) = match self.x.partition_point(|&k| k <= u) {
            0 => (n - 1, self.x[n - 1], self.x[0] + 1.0, u + 1.0),
            p if p == n => (n - 1, self.x[n - 1], self.x[0] + 1.0, u),
            p => (p - 1, self.x[p - 1], self.x[p], u),
        };
        let j = (i + 1) % n;
        let h = hi - lo;
        let (a, b) = (hi - uu, uu - lo);
        self.m[i] * a.powi(3) / (6.0 * h)
            + self.m[j] * b.powi(3) / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * a
            + (self.y[j] / h - self.m[j] * h / 6.0) * b
    }
}

/// Cyclic tridiagonal solve via Sherman-Morrison on the Thomas algorithm.
/// Row i: sub[i] * x[i-1] + diag[i] * x[i] + sup[i] * x[i+1] = rhs[i], indices mod n.
fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = sup[n - 1]; // corner (n-1, 0)
    let beta = sub[0]; // corner (0, n-1)
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let x = thomas(sub, &d, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(sub, &d, sup, &u);
    let factor = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn linear_periodic(x: &[f64], y: &[f64], u: f64) -> f64 {
    let n = x.len();
    let u = u.rem_euclid(1.0);
    let (lo, hi, ylo, yhi, uu) = match x.partition_point(|&k| k <= u) {
        0 => (x[n - 1], x[0] + 1.0, y[n - 1], y[0], u + 1.0),
        p if p == n => (x[n - 1], x[0] + 1.0, y[n - 1], y[0], u),
        p => (x[p - 1], x[p], y[p - 1], y[p], u),
    };
    ylo + (yhi - ylo) * (uu - lo) / (hi - lo)
}

/// One cardiac cycle on the normalized grid `k / 32`, phase 0 at the onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCycle {
    pub q32: Curve32,
    pub source_cycle_id: usize,
    pub resp_label: CycleLabel,
    pub rr: f64,
}

/// Cycle phases `u = (t - start) / (end - start)` of each sample.
pub fn cycle_phases(cycle: &LabeledCycle) -> Vec<f64> {
    let rr = cycle.rr();
    cycle.samples.iter().map(|(t, _)| (t - cycle.start) / rr).collect()
}

pub fn resample_cycle(
    cycle: &LabeledCycle,
    interpolation: Interpolation,
) -> Result<CanonicalCycle, EnsembleError> {
    if cycle.samples.len() < MIN_CYCLE_SAMPLES {
        return Err(EnsembleError::TooFewSamples {
            id: cycle.id,
            found: cycle.samples.len(),
        });
    }
    if !(cycle.rr() > 0.0) {
        return Err(EnsembleError::InvalidCycle(format!(
            "cycle {} has non-positive length",
            cycle.id
        )));
    }
    let u = cycle_phases(cycle);
    if u.iter().any(|p| !(0.0..1.0).contains(p)) || u.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EnsembleError::InvalidCycle(format!(
            "cycle {} samples must be increasing within [start, end)",
            cycle.id
        )));
    }
    let y: Vec<f64> = cycle.samples.iter().map(|(_, q)| *q).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EnsembleError::InvalidCycle(format!("cycle {} is not finite", cycle.id)));
    }
    let grid = |k: usize| k as f64 / GRID_POINTS as f64;
    let mut q32 = [0.0; GRID_POINTS];
    match interpolation {
        Interpolation::CubicSpline => {
            let spline = PeriodicSpline::new(&u, &y);
            for (k, v) in q32.iter_mut().enumerate() {
                *v = spline.eval(grid(k));
            }
        }
        Interpolation::Linear => {
            for (k, v) in q32.iter_mut().enumerate() {
                *v = linear_periodic(&u, &y, grid(k));
            }
        }
    }
    Ok(CanonicalCycle {
        q32,
        source_cycle_id: cycle.id,
        resp_label: cycle.resp_label,
        rr: cycle.rr(),
    })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCurve {
    pub mean: Curve32,
    /// Sample standard deviation per grid point (0 for a single cycle).
    pub sd: Curve32,
    pub n_cycles: usize,
    pub mean_rr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCurves {
    pub global: EnsembleCurve,
    pub inspiration: Option<EnsembleCurve>,
    pub expiration: Option<EnsembleCurve>,
    pub n_mixed: usize,
}

fn average(cycles: &[&CanonicalCycle]) -> Option<EnsembleCurve> {
    if cycles.is_empty() {
        return None;
    }
    let n = cycles.len() as f64;
    let mut mean = [0.0; GRID_POINTS];
    let mut sd = [0.0; GRID_POINTS];
    for k in 0..GRID_POINTS {
        // shifted by the first sample so identical inputs average exactly
        let pivot = cycles[0].q32[k];
        let mut s = Compensated::default();
        for c in cycles {
            s.add(c.q32[k] - pivot);
        }
        mean[k] = pivot + s.value() / n;
        if cycles.len() > 1 {
            let mut ss = Compensated::default();
            for c in cycles {
                ss.add((c.q32[k] - mean[k]).powi(2));
            }
            sd[k] = (ss.value() / (n - 1.0)).sqrt();
        }
    }
    let mut rr = Compensated::default();
    for c in cycles {
        rr.add(c.rr - cycles[0].rr);
    }
    Some(EnsembleCurve {
        mean,
        sd,
        n_cycles: cycles.len(),
        mean_rr: cycles[0].rr + rr.value() / n,
    })
}

/// Pointwise means over all cycles, inspiration-only and expiration-only.
/// Mixed and unlabeled cycles enter the global ensemble only. Input order does
/// not affect the result: cycles are reduced in source-id order.
pub fn build_ensembles(cycles: &[CanonicalCycle]) -> Result<EnsembleCurves, EnsembleError> {
    let mut ordered: Vec<&CanonicalCycle> = cycles.iter().collect();
    ordered.sort_by(|a, b| {
        a.source_cycle_id
            .cmp(&b.source_cycle_id)
            .then(a.rr.total_cmp(&b.rr))
            .then_with(|| {
                a.q32
                    .iter()
                    .zip(&b.q32)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    let global = average(&ordered).ok_or(EnsembleError::EmptyEnsemble)?;
    let pick = |label: CycleLabel| -> Vec<&CanonicalCycle> {
        ordered.iter().copied().filter(|c| c.resp_label == label).collect()
    };
    let inspiration = average(&pick(CycleLabel::Inspiration));
    let expiration = average(&pick(CycleLabel::Expiration));
    if inspiration.is_none() || expiration.is_none() {
        log::info!("respiratory ensemble empty: insp={} exp={}", inspiration.is_some(), expiration.is_some());
    }
    Ok(EnsembleCurves {
        global,
        inspiration,
        expiration,
        n_mixed: pick(CycleLabel::Mixed).len(),
    })
}
