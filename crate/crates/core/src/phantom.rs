//! Forward simulation of phase-contrast CSF acquisitions with analytic ground truth.
//!
//! The flow waveform is `Q(t) = A * shape((t - onset_i) / rr_i) * (1 + m * insp(t))`
//! where `shape` is a zero-mean harmonic series, `A` is chosen so that a nominal
//! cycle of length `rr_mean` has lobe-mean stroke volume `sv_true`, and `insp(t)`
//! is 1 during the rising part of the breathing waveform. Velocity maps are
//! encoded to phase, offset, perturbed by Gaussian phase noise and wrapped into
//! `[-pi, pi)`.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`) seeded with `spec.seed`;
//! every frame, gated bin and physio trace draws from its own stream, so
//! results do not depend on thread scheduling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::GRID_POINTS;
use crate::gating::CycleLabel;
use crate::ingest::{
    phase_to_f32, Encoding, PhysioKind, PhysioTrace, RoiLabel, RoiMask, SeriesHeader, SeriesKind,
    VelocitySeries,
};
use crate::flow::MM2_CMPS_TO_ML_PER_S;

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), one stream per frame/bin/trace";

const STREAM_RR: u64 = 0;
const STREAM_BELT: u64 = 1;
const STREAM_PLETH: u64 = 2;
const STREAM_COHORT: u64 = 3;
const STREAM_FRAMES: u64 = 1 << 20;
const STREAM_GATED: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, PhantomError> {
    Err(PhantomError::InvalidSpec(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Profile {
    Plug,
    Poiseuille,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LumenSpec {
    pub center_x: f64,
    pub center_y: f64,
    /// Pixels; a pixel is inside when its center lies within the radius.
    pub radius: f64,
    pub profile: Profile,
    pub label: RoiLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub thickness: f64,
    /// Width in pixels of the border band used as static-tissue reference.
    pub static_margin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub sin: f64,
    pub cos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardiacSpec {
    pub rr_mean: f64,
    pub rr_jitter_sd: f64,
    /// Coefficients of harmonics 1, 2, ... of the zero-mean waveform shape.
    pub harmonics: Vec<Harmonic>,
    /// Lobe-mean stroke volume of a nominal (`rr_mean`, expiration) cycle, mL.
    pub sv_true: f64,
    /// Time of the first cycle onset after `t0`, ms in `[0, rr_mean)`.
    pub onset_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespSpec {
    pub period: f64,
    /// Fraction of each breath spent inhaling (belt rising).
    pub insp_fraction: f64,
    pub modulation_insp: f64,
    pub belt_noise_sd: f64,
    pub belt_interval: f64,
    /// Time of the first inspiration start, ms.
    pub phase_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlethSpec {
    pub sample_interval: f64,
    /// Time from foot to peak of each pulse, ms.
    pub rise_time: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub venc: f64,
    pub frame_interval: f64,
    pub duration: f64,
    pub t0: f64,
    pub noise_sd_phase: f64,
    /// Constant velocity offset on every pixel, cm/s.
    pub background_offset: f64,
    /// Optional slow sinusoidal velocity drift on every pixel, cm/s.
    pub drift_amplitude: f64,
    pub drift_period: f64,
    pub series_kind: SeriesKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub lumen: LumenSpec,
    pub grid: GridSpec,
    pub cardiac: CardiacSpec,
    pub resp: RespSpec,
    pub plethysmo: PlethSpec,
    pub acquisition: AcquisitionSpec,
    pub seed: u64,
}

fn default_harmonics() -> Vec<Harmonic> {
    vec![
        Harmonic { sin: 1.0, cos: 0.0 },
        Harmonic { sin: 0.3, cos: 0.0 },
    ]
}

impl PhantomSpec {
    /// Aqueduct at EPI-PC settings: 88 ms frames over 80 s, VENC 10 cm/s,
    /// 1.2 x 1.2 mm pixels, 4 mm slices, heart period 1143 ms (70 cycles).
    pub fn aqueduct() -> Self {
        Self {
            lumen: LumenSpec {
                center_x: 24.0,
                center_y: 24.0,
                radius: 3.0,
                profile: Profile::Poiseuille,
                label: RoiLabel::Aqueduct,
            },
            grid: GridSpec {
                width: 48,
                height: 48,
                spacing_x: 1.2,
                spacing_y: 1.2,
                thickness: 4.0,
                static_margin: 6,
            },
            cardiac: CardiacSpec {
                rr_mean: 1143.0,
                rr_jitter_sd: 0.0,
                harmonics: default_harmonics(),
                sv_true: 0.05,
                onset_offset: 300.0,
            },
            resp: RespSpec {
                period: 5000.0,
                insp_fraction: 0.5,
                modulation_insp: 0.09,
                belt_noise_sd: 0.02,
                belt_interval: 10.0,
                phase_offset: 0.0,
            },
            plethysmo: PlethSpec {
                sample_interval: 10.0,
                rise_time: 120.0,
                noise_sd: 0.0,
            },
            acquisition: AcquisitionSpec {
                venc: 10.0,
                frame_interval: 88.0,
                duration: 80_000.0,
                t0: 0.0,
                noise_sd_phase: 0.02,
                background_offset: 0.0,
                drift_amplitude: 0.0,
                drift_period: 20_000.0,
                series_kind: SeriesKind::ContinuousEpi,
            },
            seed: 1,
        }
    }

    /// Cervical spinal canal: larger lumen, VENC 5 cm/s, mL-scale stroke volume.
    pub fn spinal() -> Self {
        let mut s = Self::aqueduct();
        s.lumen.radius = 8.0;
        s.lumen.label = RoiLabel::SpinalCanal;
        s.cardiac.sv_true = 0.5;
        s.resp.modulation_insp = 0.08;
        s.acquisition.venc = 5.0;
        s
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let g = &self.grid;
        let l = &self.lumen;
        if g.width == 0 || g.height == 0 || !(g.spacing_x > 0.0 && g.spacing_y > 0.0) {
            return invalid("grid dimensions and spacing must be positive");
        }
        if !(l.radius > 0.0) {
            return invalid("lumen radius must be positive");
        }
        let m = g.static_margin as f64;
        if l.center_x - l.radius < m
            || l.center_y - l.radius < m
            || l.center_x + l.radius > (g.width as f64 - 1.0) - m
            || l.center_y + l.radius > (g.height as f64 - 1.0) - m
        {
            return invalid("lumen exceeds the grid interior (inside the static margin)");
        }
        if g.static_margin == 0 {
            return invalid("static_margin must be >= 1");
        }
        let c = &self.cardiac;
        if !(c.rr_mean > 0.0) || c.rr_jitter_sd < 0.0 {
            return invalid("rr_mean must be positive, jitter non-negative");
        }
        if c.harmonics.is_empty() || !(c.sv_true >= 0.0) {
            return invalid("need at least one harmonic and sv_true >= 0");
        }
        if shape_abs_integral(&c.harmonics) <= 0.0 {
            return invalid("waveform shape is identically zero");
        }
        if !(0.0..c.rr_mean).contains(&c.onset_offset) {
            return invalid("onset_offset must lie in [0, rr_mean)");
        }
        let r = &self.resp;
        if !(r.period > 0.0) || !(r.insp_fraction > 0.0 && r.insp_fraction < 1.0) {
            return invalid("respiratory period must be positive, insp_fraction in (0, 1)");
        }
        if !(r.belt_interval > 0.0) || r.belt_noise_sd < 0.0 || r.modulation_insp <= -1.0 {
            return invalid("belt interval must be positive, noise non-negative, modulation > -1");
        }
        let p = &self.plethysmo;
        if !(p.sample_interval > 0.0 && p.rise_time > 0.0) || p.noise_sd < 0.0 {
            return invalid("plethysmograph interval and rise time must be positive");
        }
        let a = &self.acquisition;
        if !(a.venc > 0.0 && a.frame_interval > 0.0 && a.duration >= a.frame_interval) {
            return invalid("venc, frame_interval must be positive and duration >= one frame");
        }
        if a.noise_sd_phase < 0.0 || !(a.drift_period > 0.0) {
            return invalid("noise must be non-negative and drift period positive");
        }
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        (self.acquisition.duration / self.acquisition.frame_interval).floor() as usize
    }
}

fn shape_value(h: &[Harmonic], u: f64) -> f64 {
    h.iter()
        .enumerate()
        .map(|(k, c)| {
            let w = 2.0 * PI * (k + 1) as f64 * u;
            c.sin * w.sin() + c.cos * w.cos()
        })
        .sum()
}

/// Integral of |shape| over one period (midpoint rule, 2^18 points).
pub fn shape_abs_integral(h: &[Harmonic]) -> f64 {
    let n = 1usize << 18;
    (0..n)
        .map(|i| shape_value(h, (i as f64 + 0.5) / n as f64).abs())
        .sum::<f64>()
        / n as f64
}

/// Analytic model of one phantom acquisition.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub spec: PhantomSpec,
    /// Every onset from one cycle before `t0` to past the end of acquisition.
    onsets: Vec<f64>,
    rrs: Vec<f64>,
    /// Flow amplitude (mL/s) multiplying the shape.
    pub amplitude: f64,
    lumen_pixels: Vec<(usize, f64)>,
    /// Center velocity (cm/s) per unit flow (mL/s).
    velocity_per_flow: f64,
}

impl Phantom {
    pub fn new(spec: &PhantomSpec) -> Result<Self, PhantomError> {
        spec.validate()?;
        let c = &spec.cardiac;
        let a = &spec.acquisition;
        let mut rng = stream_rng(spec.seed, STREAM_RR);
        let mut draw_rr = || {
            let z: f64 = if c.rr_jitter_sd > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
            (c.rr_mean + c.rr_jitter_sd * z).clamp(0.5 * c.rr_mean, 1.5 * c.rr_mean)
        };
        let first = a.t0 + c.onset_offset;
        let first_rr = draw_rr();
        let mut onsets = vec![first - first_rr, first];
        let mut rrs = vec![first_rr];
        let end = a.t0 + a.duration;
        while *onsets.last().unwrap() <= end {
            let rr = draw_rr();
            rrs.push(rr);
            let next = onsets.last().unwrap() + rr;
            onsets.push(next);
        }
        let amplitude = if c.sv_true == 0.0 {
            0.0
        } else {
            c.sv_true / (0.5 * c.rr_mean / 1000.0 * shape_abs_integral(&c.harmonics))
        };

        let l = &spec.lumen;
        let g = &spec.grid;
        let mut lumen_pixels = Vec::new();
        for y in 0..g.height {
            for x in 0..g.width {
                let r2 = ((x as f64 - l.center_x).powi(2) + (y as f64 - l.center_y).powi(2))
                    / (l.radius * l.radius);
                if r2 <= 1.0 {
                    let w = match l.profile {
                        Profile::Plug => 1.0,
                        Profile::Poiseuille => 1.0 - r2,
                    };
                    lumen_pixels.push((y * g.width + x, w));
                }
            }
        }
        let pixel_area = g.spacing_x * g.spacing_y;
        // plug: flux is the discrete sum; parabolic: continuous half-peak flux
        let effective_area = match l.profile {
            Profile::Plug => lumen_pixels.len() as f64 * pixel_area,
            Profile::Poiseuille => 0.5 * PI * l.radius * l.radius * pixel_area,
        };
        Ok(Self {
            spec: spec.clone(),
            onsets,
            rrs,
            amplitude,
            lumen_pixels,
            velocity_per_flow: 1.0 / (effective_area * MM2_CMPS_TO_ML_PER_S),
        })
    }

    fn cycle_index(&self, t: f64) -> usize {
        self.onsets.partition_point(|&o| o <= t).saturating_sub(1).min(self.rrs.len() - 1)
    }

    /// Cycle phase in [0, 1) at time `t`.
    pub fn cardiac_phase(&self, t: f64) -> f64 {
        let i = self.cycle_index(t);
        ((t - self.onsets[i]) / self.rrs[i]).clamp(0.0, 1.0 - f64::EPSILON)
    }

    pub fn in_inspiration(&self, t: f64) -> bool {
        let r = &self.spec.resp;
        ((t - r.phase_offset).rem_euclid(r.period) / r.period) < r.insp_fraction
    }

    /// Analytic flow (mL/s).
    pub fn flow_at(&self, t: f64) -> f64 {
        let m = if self.in_inspiration(t) { self.spec.resp.modulation_insp } else { 0.0 };
        self.amplitude * shape_value(&self.spec.cardiac.harmonics, self.cardiac_phase(t)) * (1.0 + m)
    }

    /// Unmodulated flow at a cycle phase.
    pub fn shape_flow(&self, u: f64) -> f64 {
        self.amplitude * shape_value(&self.spec.cardiac.harmonics, u)
    }

    pub fn belt_value(&self, t: f64) -> f64 {
        let r = &self.spec.resp;
        let p = (t - r.phase_offset).rem_euclid(r.period) / r.period;
        let f = r.insp_fraction;
        if p < f {
            -(PI * p / f).cos()
        } else {
            (PI * (p - f) / (1.0 - f)).cos()
        }
    }

    pub fn plethysmo_value(&self, t: f64) -> f64 {
        let tau = self.spec.plethysmo.rise_time;
        let upto = self.onsets.partition_point(|&o| o <= t);
        self.onsets[..upto]
            .iter()
            .rev()
            .take_while(|&&o| t - o < 30.0 * tau)
            .map(|&o| {
                let x = (t - o) / tau;
                x * (1.0 - x).exp()
            })
            .sum()
    }

    fn drift(&self, t: f64) -> f64 {
        let a = &self.spec.acquisition;
        if a.drift_amplitude == 0.0 {
            0.0
        } else {
            a.drift_amplitude * (2.0 * PI * (t - a.t0) / a.drift_period).sin()
        }
    }

    /// True velocity map (cm/s) for a given flow, before offset, noise and wrapping.
    pub fn velocity_map(&self, flow: f64) -> Vec<f64> {
        let g = &self.spec.grid;
        let mut v = vec![0.0; g.width * g.height];
        let vc = flow * self.velocity_per_flow;
        for &(i, w) in &self.lumen_pixels {
            v[i] = w * vc;
        }
        v
    }

    pub fn truth_velocity_frame(&self, frame: usize) -> Vec<f64> {
        self.velocity_map(self.flow_at(self.frame_time(frame)))
    }

    pub fn frame_time(&self, frame: usize) -> f64 {
        let a = &self.spec.acquisition;
        a.t0 + frame as f64 * a.frame_interval
    }

    /// Largest centerline speed over the acquisition's waveform (cm/s).
    pub fn peak_velocity(&self) -> f64 {
        let m = self.spec.resp.modulation_insp.max(0.0);
        let peak_shape = (0..4096)
            .map(|i| shape_value(&self.spec.cardiac.harmonics, i as f64 / 4096.0).abs())
            .fold(0.0, f64::max);
        self.amplitude * peak_shape * (1.0 + m) * self.velocity_per_flow
    }

    fn header(&self, kind: SeriesKind) -> SeriesHeader {
        let g = &self.spec.grid;
        let a = &self.spec.acquisition;
        let (n_frames, frame_interval, t0) = match kind {
            SeriesKind::ContinuousEpi => (self.spec.n_frames(), a.frame_interval, a.t0),
            SeriesKind::GatedConv => (
                GRID_POINTS,
                self.spec.cardiac.rr_mean / GRID_POINTS as f64,
                0.0,
            ),
        };
        SeriesHeader {
            width: g.width,
            height: g.height,
            n_frames,
            pixel_spacing_x: g.spacing_x,
            pixel_spacing_y: g.spacing_y,
            slice_thickness: g.thickness,
            venc: a.venc,
            frame_interval,
            t0,
            encoding: Encoding::PhaseRadians,
            series_kind: kind,
        }
    }

    /// Encode a velocity map (with offset and drift) to pre-wrap phase.
    fn encode(&self, v: &[f64], t: f64) -> Vec<f64> {
        let a = &self.spec.acquisition;
        let off = a.background_offset + self.drift(t);
        v.iter().map(|x| PI * (x + off) / a.venc).collect()
    }

    fn add_noise(&self, phase: &mut [f64], stream: u64) {
        let sd = self.spec.acquisition.noise_sd_phase;
        if sd > 0.0 {
            let mut rng = stream_rng(self.spec.seed, stream);
            for p in phase.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *p += sd * z;
            }
        }
    }

    pub fn lumen_mask(&self) -> RoiMask {
        let g = &self.spec.grid;
        let mut px = vec![false; g.width * g.height];
        for &(i, _) in &self.lumen_pixels {
            px[i] = true;
        }
        RoiMask::new(g.width, g.height, px, self.spec.lumen.label).expect("lumen is non-empty")
    }

    pub fn static_mask(&self) -> RoiMask {
        let g = &self.spec.grid;
        let m = g.static_margin;
        RoiMask::from_fn(g.width, g.height, RoiLabel::StaticTissue, |x, y| {
            x < m || y < m || x >= g.width - m || y >= g.height - m
        })
        .expect("margin is non-empty")
    }

    /// True onsets within the acquisition window.
    pub fn onsets_in_window(&self) -> Vec<(f64, f64)> {
        let a = &self.spec.acquisition;
        self.onsets
            .iter()
            .zip(&self.rrs)
            .filter(|(&o, _)| o >= a.t0 && o < a.t0 + a.duration)
            .map(|(&o, &rr)| (o, rr))
            .collect()
    }

    /// Continuous-time fraction of `[start, end)` spent in inspiration.
    pub fn inspiration_fraction(&self, start: f64, end: f64) -> f64 {
        let n = 1000;
        let dt = (end - start) / n as f64;
        (0..n)
            .filter(|&i| self.in_inspiration(start + (i as f64 + 0.5) * dt))
            .count() as f64
            / n as f64
    }

    pub fn truth(&self) -> GroundTruth {
        let spec = &self.spec;
        let cycles: Vec<TruthCycle> = self
            .onsets_in_window()
            .into_iter()
            .map(|(onset, rr)| {
                let f = self.inspiration_fraction(onset, onset + rr);
                TruthCycle {
                    onset,
                    rr,
                    inspiration_fraction: f,
                    label: CycleLabel::from_fraction(f),
                }
            })
            .collect();
        let sv = spec.cardiac.sv_true;
        GroundTruth {
            cycles,
            amplitude: self.amplitude,
            sv_true: sv,
            sv_insp_true: sv * (1.0 + spec.resp.modulation_insp),
            sv_exp_true: sv,
            modulation_insp: spec.resp.modulation_insp,
            peak_velocity: self.peak_velocity(),
            n_lumen_pixels: self.lumen_pixels.len(),
            rng: RNG_ALGORITHM.to_string(),
            spec: spec.clone(),
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn wrap_phase(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCycle {
    pub onset: f64,
    pub rr: f64,
    pub inspiration_fraction: f64,
    pub label: CycleLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cycles: Vec<TruthCycle>,
    /// mL/s
    pub amplitude: f64,
    /// Nominal-cycle stroke volumes, mL.
    pub sv_true: f64,
    pub sv_insp_true: f64,
    pub sv_exp_true: f64,
    pub modulation_insp: f64,
    /// cm/s
    pub peak_velocity: f64,
    pub n_lumen_pixels: usize,
    pub rng: String,
    pub spec: PhantomSpec,
}

#[derive(Debug, Clone)]
pub struct PhantomDataset {
    pub series: VelocitySeries,
    pub belt: PhysioTrace,
    pub plethysmo: PhysioTrace,
    pub lumen_mask: RoiMask,
    pub static_mask: RoiMask,
    pub truth: GroundTruth,
}

fn trace(
    seed: u64,
    stream: u64,
    t0: f64,
    duration: f64,
    dt: f64,
    noise_sd: f64,
    kind: PhysioKind,
    f: impl Fn(f64) -> f64,
) -> PhysioTrace {
    let n = (duration / dt).floor() as usize + 1;
    let mut rng = stream_rng(seed, stream);
    let samples = (0..n)
        .map(|i| {
            let v = f(t0 + i as f64 * dt);
            if noise_sd > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                v + noise_sd * z
            } else {
                v
            }
        })
        .collect();
    PhysioTrace::new(dt, t0, samples, kind).expect("phantom trace is valid")
}

/// Simulate a continuous ungated acquisition with its physio traces and truth.
pub fn generate(spec: &PhantomSpec) -> Result<PhantomDataset, PhantomError> {
    let ph = Phantom::new(spec)?;
    if spec.acquisition.series_kind != SeriesKind::ContinuousEpi {
        return invalid("generate() simulates CONTINUOUS_EPI; use generate_gated() for GATED_CONV");
    }
    let header = ph.header(SeriesKind::ContinuousEpi);
    let n_frames = header.n_frames;
    let frames: Vec<Vec<f32>> = (0..n_frames)
        .into_par_iter()
        .map(|k| {
            let t = ph.frame_time(k);
            let mut phase = ph.encode(&ph.velocity_map(ph.flow_at(t)), t);
            ph.add_noise(&mut phase, STREAM_FRAMES + k as u64);
            phase.into_iter().map(|p| phase_to_f32(wrap_phase(p))).collect()
        })
        .collect();
    let series = VelocitySeries::new(header, frames.concat())
        .map_err(|e| PhantomError::InvalidSpec(e.to_string()))?;
    let a = &spec.acquisition;
    let belt = trace(
        spec.seed,
        STREAM_BELT,
        a.t0,
        a.duration,
        spec.resp.belt_interval,
        spec.resp.belt_noise_sd,
        PhysioKind::RespBelt,
        |t| ph.belt_value(t),
    );
    let plethysmo = trace(
        spec.seed,
        STREAM_PLETH,
        a.t0,
        a.duration,
        spec.plethysmo.sample_interval,
        spec.plethysmo.noise_sd,
        PhysioKind::CardiacPlethysmo,
        |t| ph.plethysmo_value(t),
    );
    Ok(PhantomDataset {
        series,
        belt,
        plethysmo,
        lumen_mask: ph.lumen_mask(),
        static_mask: ph.static_mask(),
        truth: ph.truth(),
    })
}

/// Simulate a retrospectively gated conventional acquisition: each of the 32
/// frames averages the phase of every complete simulated cycle at that cycle
/// phase, noise drawn independently per cycle, then wraps.
pub fn generate_gated(spec: &PhantomSpec) -> Result<VelocitySeries, PhantomError> {
    if spec.acquisition.series_kind != SeriesKind::GatedConv {
        return invalid("generate_gated() requires series_kind GATED_CONV");
    }
    let ph = Phantom::new(spec)?;
    let a = &spec.acquisition;
    let end = a.t0 + a.duration;
    let cycles: Vec<(f64, f64)> = ph
        .onsets_in_window()
        .into_iter()
        .filter(|(o, rr)| o + rr <= end)
        .collect();
    if cycles.is_empty() {
        return invalid("acquisition holds no complete cardiac cycle");
    }
    let header = ph.header(SeriesKind::GatedConv);
    let npx = header.frame_len();
    let frames: Vec<Vec<f32>> = (0..GRID_POINTS)
        .into_par_iter()
        .map(|k| {
            let mut acc = vec![0.0; npx];
            for (ci, (onset, rr)) in cycles.iter().enumerate() {
                let t = onset + rr * k as f64 / GRID_POINTS as f64;
                let mut phase = ph.encode(&ph.velocity_map(ph.flow_at(t)), t);
                ph.add_noise(&mut phase, STREAM_GATED + (ci * GRID_POINTS + k) as u64);
                for (s, p) in acc.iter_mut().zip(phase) {
                    *s += p;
                }
            }
            let n = cycles.len() as f64;
            acc.into_iter().map(|s| phase_to_f32(wrap_phase(s / n))).collect()
        })
        .collect();
    VelocitySeries::new(header, frames.concat()).map_err(|e| PhantomError::InvalidSpec(e.to_string()))
}

/// Per-parameter between-subject standard deviations of a synthetic cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortJitter {
    pub rr_sd: f64,
    /// Relative sd of each ROI's stroke volume.
    pub sv_rel_sd: f64,
    /// Absolute sd of the inspiration modulation.
    pub modulation_sd: f64,
}

impl Default for CohortJitter {
    fn default() -> Self {
        Self {
            rr_sd: 100.0,
            sv_rel_sd: 0.3,
            modulation_sd: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSubject {
    pub subject_id: String,
    pub aqueduct: PhantomSpec,
    pub spinal: PhantomSpec,
}

impl CohortSubject {
    pub fn specs(&self) -> [&PhantomSpec; 2] {
        [&self.aqueduct, &self.spinal]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTruthRow {
    pub subject_id: String,
    pub roi: RoiLabel,
    pub rr_mean: f64,
    pub sv_true: f64,
    pub modulation_insp: f64,
}

/// Deterministic synthetic cohort around the aqueduct and spinal presets.
/// Specs are returned rather than generated datasets; call [`generate`] per ROI.
pub fn cohort(
    n_subjects: usize,
    jitter: CohortJitter,
    seed: u64,
) -> Result<(Vec<CohortSubject>, Vec<CohortTruthRow>), PhantomError> {
    if n_subjects == 0 {
        return invalid("cohort needs at least one subject");
    }
    let mut rng = stream_rng(seed, STREAM_COHORT);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let mut subjects = Vec::with_capacity(n_subjects);
    let mut truth = Vec::with_capacity(2 * n_subjects);
    for i in 0..n_subjects {
        let id = format!("S{:02}", i + 1);
        let rr = (1143.0 + jitter.rr_sd * normal()).clamp(600.0, 1800.0);
        let mut specs = [PhantomSpec::aqueduct(), PhantomSpec::spinal()];
        for (j, s) in specs.iter_mut().enumerate() {
            s.cardiac.rr_mean = rr;
            s.cardiac.onset_offset = 300.0_f64.min(0.5 * rr);
            s.cardiac.sv_true *= (1.0 + jitter.sv_rel_sd * normal()).clamp(0.3, 3.0);
            s.resp.modulation_insp += jitter.modulation_sd * normal();
            s.seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((2 * i + j) as u64 + 1);
            truth.push(CohortTruthRow {
                subject_id: id.clone(),
                roi: s.lumen.label,
                rr_mean: rr,
                sv_true: s.cardiac.sv_true,
                modulation_insp: s.resp.modulation_insp,
            });
        }
        let [aqueduct, spinal] = specs;
        subjects.push(CohortSubject {
            subject_id: id,
            aqueduct,
            spinal,
        });
    }
    Ok((subjects, truth))
}
