//! Retrospective double gating: cardiac cycles detected from the flow signal
//! (or a plethysmograph), respiratory phases from the belt trace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowSamples;
use crate::ingest::{PhysioKind, PhysioTrace};
use crate::signal::{local_maxima, moving_average, noise_floor, percentile, prominence, window_samples};

pub const DEFAULT_MIN_RR: f64 = 300.0;
pub const DEFAULT_MAX_RR: f64 = 2000.0;
pub const MIN_CYCLES: usize = 5;
pub const MAX_RR_CV: f64 = 0.35;
pub const DEFAULT_SMOOTHING_WINDOW: f64 = 500.0;
pub const DEFAULT_HYSTERESIS: f64 = 0.05;
/// Shortest respiratory label run kept after debouncing (ms).
pub const MIN_RUN_MS: f64 = 200.0;
pub const INSP_THRESHOLD: f64 = 0.7;
pub const EXP_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error)]
pub enum GatingError {
    #[error("too few cardiac cycles: {found} detected, need {MIN_CYCLES}")]
    TooFewCycles { found: usize },
    #[error("arrhythmic signal: RR coefficient of variation {rr_cv:.3} > {MAX_RR_CV}; use a plethysmograph")]
    ArrhythmicSignal { rr_cv: f64 },
    #[error("physio trace kind {found:?}, expected {expected:?}")]
    WrongTraceKind { expected: PhysioKind, found: PhysioKind },
    #[error("respiratory trace is flat (range {range} vs noise floor {noise})")]
    FlatSignal { range: f64, noise: f64 },
    #[error("respiratory trace spans {duration} ms, need at least one breath ({min} ms)")]
    TraceTooShort { duration: f64, min: f64 },
    #[error("physio clock [{trace_start}, {trace_end}] ms does not cover flow [{flow_start}, {flow_end}] ms")]
    ClockMismatch {
        trace_start: f64,
        trace_end: f64,
        flow_start: f64,
        flow_end: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CycleMethod {
    FlowPeaks,
    Plethysmo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CardiacParams {
    pub min_rr: f64,
    pub max_rr: f64,
}

impl Default for CardiacParams {
    fn default() -> Self {
        Self {
            min_rr: DEFAULT_MIN_RR,
            max_rr: DEFAULT_MAX_RR,
        }
    }
}

impl CardiacParams {
    fn validate(&self) -> Result<(), GatingError> {
        if !(self.min_rr > 0.0 && self.max_rr > self.min_rr && self.max_rr.is_finite()) {
            return Err(GatingError::InvalidParameter(format!(
                "need 0 < min_rr < max_rr, got {} / {}",
                self.min_rr, self.max_rr
            )));
        }
        Ok(())
    }
}

/// Detected cardiac cycle starts. Consecutive onsets whose spacing falls
/// outside `[min_rr, max_rr]` (missed or extra beats) do not form a cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleBoundaries {
    pub onsets: Vec<f64>,
    pub method: CycleMethod,
    pub mean_rr: f64,
    pub rr_cv: f64,
    pub min_rr: f64,
    pub max_rr: f64,
}

impl CycleBoundaries {
    fn from_onsets(
        onsets: Vec<f64>,
        method: CycleMethod,
        params: CardiacParams,
    ) -> Result<Self, GatingError> {
        let mut b = Self {
            onsets,
            method,
            mean_rr: 0.0,
            rr_cv: 0.0,
            min_rr: params.min_rr,
            max_rr: params.max_rr,
        };
        let rr: Vec<f64> = b.cycles().iter().map(|(s, e)| e - s).collect();
        if b.onsets.len() < MIN_CYCLES || rr.is_empty() {
            return Err(GatingError::TooFewCycles {
                found: b.onsets.len(),
            });
        }
        let n = rr.len() as f64;
        b.mean_rr = rr.iter().sum::<f64>() / n;
        let var = rr.iter().map(|r| (r - b.mean_rr).powi(2)).sum::<f64>() / n;
        b.rr_cv = var.sqrt() / b.mean_rr;
        if b.rr_cv > MAX_RR_CV {
            return Err(GatingError::ArrhythmicSignal { rr_cv: b.rr_cv });
        }
        Ok(b)
    }

    /// `(start, end)` of every accepted cycle, in time order.
    pub fn cycles(&self) -> Vec<(f64, f64)> {
        self.onsets
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|(s, e)| (self.min_rr..=self.max_rr).contains(&(e - s)))
            .collect()
    }
}

/// Detrend by a `max_rr` moving average, then smooth over 3 samples.
fn band_limit(x: &[f64], dt: f64, max_rr: f64) -> Vec<f64> {
    let trend = moving_average(x, window_samples(max_rr, dt));
    let detrended: Vec<f64> = x.iter().zip(&trend).map(|(a, b)| a - b).collect();
    moving_average(&detrended, 3)
}

/// Prominent peaks of `s`, thinned so no two are closer than `min_rr`.
fn select_peaks(s: &[f64], times: &[f64], min_rr: f64) -> Vec<usize> {
    let positive: Vec<f64> = s.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        return Vec::new();
    }
    let min_prominence = 0.5 * percentile(&positive, 75.0);
    let mut candidates: Vec<usize> = local_maxima(s)
        .into_iter()
        .filter(|&i| s[i] > 0.0 && prominence(s, i) >= min_prominence)
        .collect();
    candidates.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| (times[k] - times[c]).abs() >= min_rr) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// A signal whose pulsatile part is negligible against its level carries no cycles.
fn is_flat(x: &[f64], s: &[f64]) -> bool {
    let level = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pulsatile = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    pulsatile <= 1e-9 * level || pulsatile == 0.0
}

/// Self-gated cardiac cycles from the flow waveform: onsets sit at the last
/// upward zero crossing of the band-limited flow before each systolic peak.
pub fn detect_cycles_from_flow(
    flow: &FlowSamples,
    params: CardiacParams,
) -> Result<CycleBoundaries, GatingError> {
    params.validate()?;
    let n = flow.len();
    if n < 3 || flow.timestamps[n - 1] - flow.timestamps[0] < MIN_CYCLES as f64 * params.min_rr {
        return Err(GatingError::TooFewCycles { found: 0 });
    }
    let dt = flow.sample_interval();
    let s = band_limit(&flow.q, dt, params.max_rr);
    if is_flat(&flow.q, &s) {
        return Err(GatingError::TooFewCycles { found: 0 });
    }
    let peaks = select_peaks(&s, &flow.timestamps, params.min_rr);
    let t = &flow.timestamps;
    let mut onsets: Vec<f64> = Vec::with_capacity(peaks.len());
    for &p in &peaks {
        let earliest = t[p] - params.max_rr;
        let crossing = (0..p)
            .rev()
            .take_while(|&i| t[i] >= earliest)
            .find(|&i| s[i] <= 0.0 && s[i + 1] > 0.0);
        let Some(i) = crossing else { continue };
        let frac = -s[i] / (s[i + 1] - s[i]);
        let onset = t[i] + frac * (t[i + 1] - t[i]);
        if onsets.last().is_none_or(|&last| onset > last) {
            onsets.push(onset);
        }
    }
    CycleBoundaries::from_onsets(onsets, CycleMethod::FlowPeaks, params)
}

/// Cardiac cycles from a plethysmograph pulse: onsets at the foot (minimum)
/// preceding each pulse peak.
pub fn detect_cycles_from_plethysmo(
    trace: &PhysioTrace,
    params: CardiacParams,
) -> Result<CycleBoundaries, GatingError> {
    if trace.kind != PhysioKind::CardiacPlethysmo {
        return Err(GatingError::WrongTraceKind {
            expected: PhysioKind::CardiacPlethysmo,
            found: trace.kind,
        });
    }
    params.validate()?;
    if trace.duration() < params.min_rr || trace.len() < 3 {
        return Err(GatingError::TooFewCycles { found: 0 });
    }
    let x = &trace.samples;
    let times: Vec<f64> = (0..trace.len()).map(|i| trace.time(i)).collect();
    let s = band_limit(x, trace.sample_interval, params.max_rr);
    if is_flat(x, &s) {
        return Err(GatingError::TooFewCycles { found: 0 });
    }
    let peaks = select_peaks(&s, &times, params.min_rr);
    let mut onsets: Vec<f64> = Vec::with_capacity(peaks.len());
    let mut prev_peak: Option<usize> = None;
    for &p in &peaks {
        let window_start = ((times[p] - params.max_rr - trace.t0) / trace.sample_interval)
            .ceil()
            .max(0.0) as usize;
        let lo = prev_peak.map_or(window_start, |q| q.max(window_start));
        prev_peak = Some(p);
        if lo >= p {
            continue;
        }
        // last minimum: the foot closest to the upstroke
        let mut foot = lo;
        for i in lo..p {
            if x[i] <= x[foot] {
                foot = i;
            }
        }
        if foot == 0 && lo == 0 && p > 0 && x[0] > x[1] {
            // record started mid-downstroke; the foot is not observed
            continue;
        }
        let onset = times[foot];
        if onsets.last().is_none_or(|&last| onset > last) {
            onsets.push(onset);
        }
    }
    CycleBoundaries::from_onsets(onsets, CycleMethod::Plethysmo, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RespPhase {
    Inspiration,
    Expiration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RespParams {
    /// Centered moving-average window (ms).
    pub smoothing_window: f64,
    /// Schmitt-trigger threshold as a fraction of the smoothed signal range.
    pub hysteresis: f64,
}

impl Default for RespParams {
    fn default() -> Self {
        Self {
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            hysteresis: DEFAULT_HYSTERESIS,
        }
    }
}

/// Per-sample respiratory labels on the belt trace clock.
#[derive(Debug, Clone, PartialEq)]
pub struct RespPhases {
    pub labels: Vec<RespPhase>,
    pub t0: f64,
    pub sample_interval: f64,
    pub smoothing_window: f64,
    pub hysteresis: f64,
}

impl RespPhases {
    pub fn t_end(&self) -> f64 {
        self.t0 + (self.labels.len() - 1) as f64 * self.sample_interval
    }

    /// Label of the belt sample nearest to `t`, clamped to the trace.
    pub fn label_at(&self, t: f64) -> RespPhase {
        let i = ((t - self.t0) / self.sample_interval).round();
        let i = i.clamp(0.0, (self.labels.len() - 1) as f64) as usize;
        self.labels[i]
    }

    /// `(start_index, end_index_exclusive, label)` runs.
    pub fn runs(&self) -> Vec<(usize, usize, RespPhase)> {
        label_runs(&self.labels)
    }

    /// Start times of every run, i.e. the detected respiratory transitions.
    pub fn transitions(&self) -> Vec<(f64, RespPhase)> {
        self.runs()
            .into_iter()
            .skip(1)
            .map(|(s, _, l)| (self.t0 + s as f64 * self.sample_interval, l))
            .collect()
    }
}

fn label_runs(labels: &[RespPhase]) -> Vec<(usize, usize, RespPhase)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            runs.push((start, i, labels[start]));
            start = i;
        }
    }
    runs
}

fn opposite(p: RespPhase) -> RespPhase {
    match p {
        RespPhase::Inspiration => RespPhase::Expiration,
        RespPhase::Expiration => RespPhase::Inspiration,
    }
}

/// Label each belt sample as inspiration (smoothed signal rising) or
/// expiration (falling). Turning points are confirmed once the signal moves
/// `hysteresis * range` away from the running extremum; the transition is
/// placed at the extremum itself. Runs shorter than 200 ms are merged into
/// their neighbours.
pub fn classify_resp(trace: &PhysioTrace, params: RespParams) -> Result<RespPhases, GatingError> {
    if trace.kind != PhysioKind::RespBelt {
        return Err(GatingError::WrongTraceKind {
            expected: PhysioKind::RespBelt,
            found: trace.kind,
        });
    }
    if !(params.smoothing_window > 0.0 && (0.0..1.0).contains(&params.hysteresis)) {
        return Err(GatingError::InvalidParameter(format!(
            "smoothing_window {} ms, hysteresis {}",
            params.smoothing_window, params.hysteresis
        )));
    }
    const MIN_BREATH_MS: f64 = 2000.0;
    if trace.duration() < MIN_BREATH_MS {
        return Err(GatingError::TraceTooShort {
            duration: trace.duration(),
            min: MIN_BREATH_MS,
        });
    }
    let dt = trace.sample_interval;
    let s = moving_average(&trace.samples, window_samples(params.smoothing_window, dt));
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let noise = noise_floor(&trace.samples);
    if range <= 0.0 || range < 10.0 * noise {
        return Err(GatingError::FlatSignal { range, noise });
    }
    let h = params.hysteresis * range;

    // zigzag over the smoothed signal
    let n = s.len();
    let mut turns: Vec<(usize, RespPhase)> = Vec::new();
    let mut dir: Option<RespPhase> = None;
    let (mut lo_i, mut hi_i) = (0usize, 0usize);
    let mut ext = 0usize;
    for i in 1..n {
        match dir {
            None => {
                if s[i] < s[lo_i] {
                    lo_i = i;
                }
                if s[i] > s[hi_i] {
                    hi_i = i;
                }
                if s[i] >= s[lo_i] + h && lo_i < i {
                    dir = Some(RespPhase::Inspiration);
                    turns.push((lo_i, RespPhase::Inspiration));
                    ext = i;
                } else if s[i] <= s[hi_i] - h && hi_i < i {
                    dir = Some(RespPhase::Expiration);
                    turns.push((hi_i, RespPhase::Expiration));
                    ext = i;
                }
            }
            Some(RespPhase::Inspiration) => {
                if s[i] > s[ext] {
                    ext = i;
                } else if s[i] <= s[ext] - h {
                    turns.push((ext, RespPhase::Expiration));
                    dir = Some(RespPhase::Expiration);
                    ext = i;
                }
            }
            Some(RespPhase::Expiration) => {
                if s[i] < s[ext] {
                    ext = i;
                } else if s[i] >= s[ext] + h {
                    turns.push((ext, RespPhase::Inspiration));
                    dir = Some(RespPhase::Inspiration);
                    ext = i;
                }
            }
        }
    }
    let Some(&(_, first_dir)) = turns.first() else {
        return Err(GatingError::FlatSignal { range, noise });
    };
    let mut labels = vec![opposite(first_dir); n];
    for (k, &(start, phase)) in turns.iter().enumerate() {
        let end = turns.get(k + 1).map_or(n, |t| t.0);
        labels[start..end].fill(phase);
    }

    let min_run = (MIN_RUN_MS / dt).ceil() as usize;
    loop {
        let runs = label_runs(&labels);
        if runs.len() < 2 {
            break;
        }
        let Some((k, &(s0, e0, _))) = runs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.1 - r.0 < min_run)
            .min_by_key(|(k, r)| (r.1 - r.0, *k))
        else {
            break;
        };
        let target = if k == 0 { runs[1].2 } else { runs[k - 1].2 };
        labels[s0..e0].fill(target);
    }

    Ok(RespPhases {
        labels,
        t0: trace.t0,
        sample_interval: dt,
        smoothing_window: params.smoothing_window,
        hysteresis: params.hysteresis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CycleLabel {
    Inspiration,
    Expiration,
    Mixed,
    /// No respiratory reference was supplied.
    Unlabeled,
}

impl CycleLabel {
    pub fn from_fraction(inspiration_fraction: f64) -> Self {
        if inspiration_fraction >= INSP_THRESHOLD {
            CycleLabel::Inspiration
        } else if inspiration_fraction <= EXP_THRESHOLD {
            CycleLabel::Expiration
        } else {
            CycleLabel::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCycle {
    pub id: usize,
    pub start: f64,
    pub end: f64,
    /// `(t_ms, q_ml_s)` samples in `[start, end)`.
    pub samples: Vec<(f64, f64)>,
    pub resp_label: CycleLabel,
    /// NaN when unlabeled.
    pub inspiration_fraction: f64,
}

impl LabeledCycle {
    pub fn rr(&self) -> f64 {
        self.end - self.start
    }
}

fn cut_cycles(boundaries: &CycleBoundaries, flow: &FlowSamples) -> Vec<LabeledCycle> {
    let mut out = Vec::new();
    let mut cursor = 0usize;
    for (id, (start, end)) in boundaries.cycles().into_iter().enumerate() {
        while cursor < flow.len() && flow.timestamps[cursor] < start {
            cursor += 1;
        }
        let mut samples = Vec::new();
        let mut j = cursor;
        while j < flow.len() && flow.timestamps[j] < end {
            samples.push((flow.timestamps[j], flow.q[j]));
            j += 1;
        }
        if samples.is_empty() {
            continue;
        }
        if !(4..=24).contains(&samples.len()) {
            log::warn!(
                "cycle {id} at {start:.1} ms holds {} samples (typical 8-12)",
                samples.len()
            );
        }
        out.push(LabeledCycle {
            id,
            start,
            end,
            samples,
            resp_label: CycleLabel::Unlabeled,
            inspiration_fraction: f64::NAN,
        });
    }
    out
}

/// Cut the flow into cycles without a respiratory reference.
pub fn segment_cycles(boundaries: &CycleBoundaries, flow: &FlowSamples) -> Vec<LabeledCycle> {
    cut_cycles(boundaries, flow)
}

/// Cut the flow into cycles and label each from the fraction of its samples
/// falling in inspiration: >= 0.7 inspiration, <= 0.3 expiration, else mixed.
pub fn label_cycles(
    boundaries: &CycleBoundaries,
    phases: &RespPhases,
    flow: &FlowSamples,
) -> Result<Vec<LabeledCycle>, GatingError> {
    if flow.is_empty() || phases.labels.is_empty() {
        return Err(GatingError::TooFewCycles { found: 0 });
    }
    let half = 0.5 * phases.sample_interval;
    let (fs, fe) = (flow.timestamps[0], flow.timestamps[flow.len() - 1]);
    if phases.t0 - half > fs || phases.t_end() + half < fe {
        return Err(GatingError::ClockMismatch {
            trace_start: phases.t0,
            trace_end: phases.t_end(),
            flow_start: fs,
            flow_end: fe,
        });
    }
    let mut cycles = cut_cycles(boundaries, flow);
    for c in &mut cycles {
        let insp = c
            .samples
            .iter()
            .filter(|(t, _)| phases.label_at(*t) == RespPhase::Inspiration)
            .count();
        c.inspiration_fraction = insp as f64 / c.samples.len() as f64;
        c.resp_label = CycleLabel::from_fraction(c.inspiration_fraction);
    }
    Ok(cycles)
}
