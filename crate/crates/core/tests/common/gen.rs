//! Synthetic inputs with known structure.

use csfdyn::ensemble::{CanonicalCycle, GRID_POINTS};
use csfdyn::flow::FlowSamples;
use csfdyn::gating::{CycleLabel, LabeledCycle};
use csfdyn::ingest::{PhysioKind, PhysioTrace, RoiLabel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct FlowCase {
    pub rr_mean: f64,
    pub jitter: f64,
    pub dt: f64,
    pub n_cycles: usize,
    pub second: f64,
    pub noise: f64,
    pub t0: f64,
    pub seed: u64,
}

/// Biphasic cycle shape with zero mean over the cycle.
pub fn cardiac_shape(u: f64, second: f64) -> f64 {
    (2.0 * PI * u).sin() + second * (4.0 * PI * u).sin()
}

/// True onsets and sampled flow for a jittered periodic waveform.
pub fn synth_flow(c: &FlowCase) -> (FlowSamples, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut onsets = vec![c.t0 - 0.3 * c.rr_mean];
    let end = c.t0 + c.n_cycles as f64 * c.rr_mean;
    while *onsets.last().unwrap() < end + 2.0 * c.rr_mean {
        let f: f64 = rng.random_range(-1.0..1.0);
        onsets.push(onsets.last().unwrap() + c.rr_mean * (1.0 + c.jitter * f));
    }
    let noise = Normal::new(0.0, c.noise.max(1e-300)).unwrap();
    let n = ((end - c.t0) / c.dt) as usize;
    let mut timestamps = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let t = c.t0 + k as f64 * c.dt;
        while onsets[j + 1] <= t {
            j += 1;
        }
        let u = (t - onsets[j]) / (onsets[j + 1] - onsets[j]);
        let e = if c.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        timestamps.push(t);
        q.push(cardiac_shape(u, c.second) + e);
    }
    let flow = FlowSamples {
        timestamps,
        q,
        roi_label: RoiLabel::Aqueduct,
        pixel_area: 1.44,
        n_roi_pixels: 29,
        venc: 10.0,
    };
    (flow, onsets)
}

pub fn flow_case() -> impl Strategy<Value = FlowCase> {
    (
        700.0..1300.0f64,
        0.0..0.05f64,
        60.0..100.0f64,
        20usize..45,
        0.0..0.4f64,
        0.0..0.05f64,
        -500.0..500.0f64,
        any::<u64>(),
    )
        .prop_map(|(rr_mean, jitter, dt, n_cycles, second, noise, t0, seed)| FlowCase {
            rr_mean,
            jitter,
            dt,
            n_cycles,
            second,
            noise,
            t0,
            seed,
        })
}

#[derive(Debug, Clone)]
pub struct BeltCase {
    pub period: f64,
    pub interval: f64,
    pub duration: f64,
    pub noise: f64,
    pub asym: f64,
    pub t0: f64,
    pub seed: u64,
}

/// Breathing waveform with adjustable asymmetry: `asym` skews the rise.
pub fn breath(t: f64, period: f64, asym: f64) -> f64 {
    let x = 2.0 * PI * t / period;
    -(x + asym * x.sin()).cos()
}

pub fn synth_belt(c: &BeltCase) -> PhysioTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let noise = Normal::new(0.0, c.noise.max(1e-300)).unwrap();
    let n = (c.duration / c.interval) as usize + 1;
    let samples = (0..n)
        .map(|i| {
            let e = if c.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            breath(i as f64 * c.interval, c.period, c.asym) + e
        })
        .collect();
    PhysioTrace::new(c.interval, c.t0, samples, PhysioKind::RespBelt).unwrap()
}

/// Breathing at 0.1 to 0.5 Hz.
pub fn belt_case() -> impl Strategy<Value = BeltCase> {
    (
        2000.0..10000.0f64,
        prop::sample::select(vec![10.0, 20.0, 25.0, 40.0]),
        20000.0..60000.0f64,
        0.0..0.02f64,
        0.0..0.5f64,
        -1000.0..1000.0f64,
        any::<u64>(),
    )
        .prop_map(|(period, interval, duration, noise, asym, t0, seed)| BeltCase {
            period,
            interval,
            duration,
            noise,
            asym,
            t0,
            seed,
        })
}

fn label_strategy() -> impl Strategy<Value = CycleLabel> {
    prop::sample::select(vec![
        CycleLabel::Inspiration,
        CycleLabel::Expiration,
        CycleLabel::Mixed,
        CycleLabel::Unlabeled,
    ])
}

pub fn canonical_cycles() -> impl Strategy<Value = Vec<CanonicalCycle>> {
    prop::collection::vec(
        (
            prop::array::uniform32(-50.0..50.0f64),
            label_strategy(),
            300.0..2000.0f64,
        ),
        1..30,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (q32, resp_label, rr))| CanonicalCycle {
                q32,
                source_cycle_id: i,
                resp_label,
                rr,
            })
            .collect()
    })
}

/// A cycle with `n` samples at random increasing phases in `[0, 1)`.
pub fn labeled_cycle() -> impl Strategy<Value = LabeledCycle> {
    (
        prop::collection::btree_set(0u32..4096, 4..24),
        prop::collection::vec(-20.0..20.0f64, 24),
        0.0..1.0e5f64,
        300.0..2000.0f64,
    )
        .prop_map(|(phases, values, start, rr)| {
            let samples = phases
                .iter()
                .zip(&values)
                .map(|(&p, &q)| (start + p as f64 / 4096.0 * rr, q))
                .collect();
            LabeledCycle {
                id: 0,
                start,
                end: start + rr,
                samples,
                resp_label: CycleLabel::Unlabeled,
                inspiration_fraction: f64::NAN,
            }
        })
}

/// Cycles sampled exactly on the 32-point grid.
pub fn grid_cycles() -> impl Strategy<Value = Vec<LabeledCycle>> {
    prop::collection::vec(
        (
            prop::array::uniform32(-20.0..20.0f64),
            label_strategy(),
            300.0..2000.0f64,
        ),
        1..12,
    )
    .prop_map(|v| {
        let mut start = 0.0;
        v.into_iter()
            .enumerate()
            .map(|(id, (q, resp_label, rr))| {
                let c = LabeledCycle {
                    id,
                    start,
                    end: start + rr,
                    samples: (0..GRID_POINTS)
                        .map(|k| (start + k as f64 * rr / GRID_POINTS as f64, q[k]))
                        .collect(),
                    resp_label,
                    inspiration_fraction: f64::NAN,
                };
                start += rr;
                c
            })
            .collect()
    })
}

pub fn curve32() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, GRID_POINTS)
}

/// Band-limited zero-mean periodic waveform: a dominant fundamental plus
/// weaker second and third harmonics.
#[derive(Debug, Clone)]
pub struct BandLimited {
    pub amp: [f64; 3],
    pub phase: [f64; 3],
}

impl BandLimited {
    pub fn eval(&self, u: f64) -> f64 {
        (0..3)
            .map(|h| self.amp[h] * (2.0 * PI * (h + 1) as f64 * u + self.phase[h]).sin())
            .sum()
    }
}

pub fn band_limited() -> impl Strategy<Value = BandLimited> {
    (
        0.1..10.0f64,
        0.0..0.3f64,
        0.0..0.15f64,
        prop::array::uniform3(0.0..(2.0 * PI)),
    )
        .prop_map(|(a, r2, r3, phase)| BandLimited {
            amp: [a, a * r2, a * r3],
            phase,
        })
}

/// Paired values on a dyadic grid (multiples of 1/8), so sums and
/// differences are exact.
pub fn dyadic_pairs(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-800i32..800, -800i32..800), n).prop_map(|v| {
        v.into_iter()
            .map(|(a, b)| (a as f64 / 8.0, b as f64 / 8.0))
            .collect()
    })
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seeded n-subject cohort of paired values with a common trend plus noise.
pub fn seeded_cohort(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = seeded_rng(seed);
    (0..n)
        .map(|_| {
            let a: f64 = rng.random_range(20.0..80.0);
            let b = a * rng.random_range(0.9..1.2) + rng.random_range(-3.0..3.0);
            (a, b)
        })
        .collect()
}
