//! Property bodies shared by the proptest suites and the acceptance runner.

use super::gen::{self, BandLimited, BeltCase, FlowCase};
use super::oracles;
use super::seeded;
use csfdyn::ensemble::{
    build_ensembles, resample_cycle, CanonicalCycle, EnsembleCurve, Interpolation, PeriodicSpline,
    GRID_POINTS,
};
use csfdyn::gating::{
    classify_resp, detect_cycles_from_flow, label_cycles, segment_cycles, CardiacParams,
    CycleLabel, LabeledCycle, RespParams, MIN_RUN_MS,
};
use csfdyn::ingest::PhysioTrace;
use csfdyn::metrics::{stroke_volume, SvConvention, VolumeUnit};
use csfdyn::stats::{spearman, wilcoxon_paired, PairedSample, StatMethod};
use proptest::prelude::*;
use proptest::test_runner::{TestCaseError, TestRunner};
use std::mem::discriminant;

pub type Check = Result<(), TestCaseError>;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---- gating ----

/// detect(alpha q) = detect(q); bit-identical for powers of two.
pub fn gating_scale(c: &FlowCase, exp2: i32, alpha: f64) -> Check {
    let (flow, _) = gen::synth_flow(c);
    let p = CardiacParams::default();
    let base = detect_cycles_from_flow(&flow, p);
    let pow2 = detect_cycles_from_flow(&flow.scaled(2f64.powi(exp2)), p);
    let general = detect_cycles_from_flow(&flow.scaled(alpha), p);
    match (&base, &pow2, &general) {
        (Ok(b), Ok(s), Ok(g)) => {
            prop_assert_eq!(&b.onsets, &s.onsets);
            prop_assert_eq!(b.onsets.len(), g.onsets.len());
            for (x, y) in b.onsets.iter().zip(&g.onsets) {
                prop_assert!(close(*x, *y, 1e-9 * x.abs().max(1.0)), "{} vs {}", x, y);
            }
        }
        (Err(b), Err(s), Err(g)) => {
            prop_assert_eq!(discriminant(b), discriminant(s));
            prop_assert_eq!(discriminant(b), discriminant(g));
        }
        _ => prop_assert!(false, "scaling changed success: {:?} / {:?} / {:?}", base.is_ok(), pow2.is_ok(), general.is_ok()),
    }
    Ok(())
}

fn belt_for(flow_t0: f64, flow_t1: f64, period: f64, seed: u64) -> PhysioTrace {
    gen::synth_belt(&BeltCase {
        period,
        interval: 10.0,
        duration: flow_t1 - flow_t0 + 2000.0,
        noise: 0.01,
        asym: 0.2,
        t0: flow_t0.floor() - 1000.0,
        seed,
    })
}

fn shifted_trace(t: &PhysioTrace, dt: f64) -> PhysioTrace {
    PhysioTrace {
        t0: t.t0 + dt,
        ..t.clone()
    }
}

/// Shifting flow and belt together by delta shifts every output by delta.
pub fn gating_time_shift(c: &FlowCase, period: f64, delta: f64) -> Check {
    let (flow, _) = gen::synth_flow(c);
    let belt = belt_for(flow.timestamps[0], *flow.timestamps.last().unwrap(), period, c.seed ^ 1);
    let p = CardiacParams::default();
    let (Ok(b0), Ok(b1)) = (
        detect_cycles_from_flow(&flow, p),
        detect_cycles_from_flow(&flow.shifted(delta), p),
    ) else {
        let ok0 = detect_cycles_from_flow(&flow, p).is_ok();
        let ok1 = detect_cycles_from_flow(&flow.shifted(delta), p).is_ok();
        prop_assert_eq!(ok0, ok1);
        return Ok(());
    };
    let tol = |t: f64| 1e-9 * (t.abs() + delta.abs()).max(1.0);
    prop_assert_eq!(b0.onsets.len(), b1.onsets.len());
    for (x, y) in b0.onsets.iter().zip(&b1.onsets) {
        prop_assert!(close(x + delta, *y, tol(*x)), "{} + {} vs {}", x, delta, y);
    }
    prop_assert!(close(b0.mean_rr, b1.mean_rr, 1e-9 * b0.mean_rr));

    let r0 = classify_resp(&belt, RespParams::default()).unwrap();
    let r1 = classify_resp(&shifted_trace(&belt, delta), RespParams::default()).unwrap();
    prop_assert_eq!(&r0.labels, &r1.labels);

    let l0 = label_cycles(&b0, &r0, &flow).unwrap();
    let l1 = label_cycles(&b1, &r1, &flow.shifted(delta)).unwrap();
    prop_assert_eq!(l0.len(), l1.len());
    for (a, b) in l0.iter().zip(&l1) {
        prop_assert_eq!(a.resp_label, b.resp_label);
        prop_assert_eq!(a.inspiration_fraction, b.inspiration_fraction);
        prop_assert_eq!(a.samples.len(), b.samples.len());
        prop_assert!(close(a.start + delta, b.start, tol(a.start)));
        for (s, t) in a.samples.iter().zip(&b.samples) {
            prop_assert!(close(s.0 + delta, t.0, tol(s.0)));
            prop_assert_eq!(s.1, t.1);
        }
    }
    Ok(())
}

fn check_cycle_structure(cycles: &[LabeledCycle], flow_len: usize, min_rr: f64, max_rr: f64) -> Check {
    let mut seen = 0usize;
    for w in cycles.windows(2) {
        prop_assert!(w[0].end <= w[1].start, "cycles overlap or are unordered");
        prop_assert!(w[0].id < w[1].id);
    }
    for c in cycles {
        prop_assert!(c.rr() >= min_rr && c.rr() <= max_rr);
        prop_assert!(!c.samples.is_empty());
        for w in c.samples.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
        }
        for s in &c.samples {
            prop_assert!(s.0 >= c.start && s.0 < c.end);
        }
        seen += c.samples.len();
        if c.resp_label != CycleLabel::Unlabeled {
            prop_assert!((0.0..=1.0).contains(&c.inspiration_fraction));
            prop_assert_eq!(c.resp_label, CycleLabel::from_fraction(c.inspiration_fraction));
        }
    }
    prop_assert!(seen <= flow_len);
    Ok(())
}

/// Onsets increase strictly, accepted RR lies in range, cycles are disjoint
/// and ordered, and no sample belongs to two cycles.
pub fn gating_structure(c: &FlowCase, period: f64) -> Check {
    let (flow, _) = gen::synth_flow(c);
    let p = CardiacParams::default();
    let Ok(b) = detect_cycles_from_flow(&flow, p) else {
        return Ok(());
    };
    for w in b.onsets.windows(2) {
        prop_assert!(w[1] > w[0]);
    }
    let rr: Vec<f64> = b.cycles().iter().map(|(s, e)| e - s).collect();
    let mean = rr.iter().sum::<f64>() / rr.len() as f64;
    let cv = (rr.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rr.len() as f64).sqrt() / mean;
    prop_assert!(close(mean, b.mean_rr, 1e-9 * mean));
    prop_assert!(close(cv, b.rr_cv, 1e-9));

    let plain = segment_cycles(&b, &flow);
    check_cycle_structure(&plain, flow.len(), p.min_rr, p.max_rr)?;
    let belt = belt_for(flow.timestamps[0], *flow.timestamps.last().unwrap(), period, c.seed ^ 2);
    let phases = classify_resp(&belt, RespParams::default()).unwrap();
    let labeled = label_cycles(&b, &phases, &flow).unwrap();
    check_cycle_structure(&labeled, flow.len(), p.min_rr, p.max_rr)?;
    prop_assert_eq!(plain.len(), labeled.len());
    Ok(())
}

/// classify_resp(a + b x) = classify_resp(x) for b > 0; runs last >= 200 ms.
pub fn gating_belt_affine(c: &BeltCase, a: f64, b: f64) -> Check {
    let trace = gen::synth_belt(c);
    let moved = PhysioTrace {
        samples: trace.samples.iter().map(|x| a + b * x).collect(),
        ..trace.clone()
    };
    let r0 = classify_resp(&trace, RespParams::default());
    let r1 = classify_resp(&moved, RespParams::default());
    match (r0, r1) {
        (Ok(r0), Ok(r1)) => {
            prop_assert_eq!(&r0.labels, &r1.labels);
            prop_assert_eq!(r0.labels.len(), trace.len());
            let min_run = (MIN_RUN_MS / c.interval).ceil() as usize;
            let runs = r0.runs();
            if runs.len() > 1 {
                for (s, e, _) in runs {
                    prop_assert!(e - s >= min_run, "run of {} samples", e - s);
                }
            }
        }
        (Err(e0), Err(e1)) => prop_assert_eq!(discriminant(&e0), discriminant(&e1)),
        (r0, r1) => prop_assert!(false, "affine map changed success: {:?} {:?}", r0.is_ok(), r1.is_ok()),
    }
    Ok(())
}

// ---- ensemble ----

pub fn ensemble_permutation(cycles: &[CanonicalCycle], shuffled: &[CanonicalCycle]) -> Check {
    let a = build_ensembles(cycles).unwrap();
    let b = build_ensembles(shuffled).unwrap();
    prop_assert_eq!(&a, &b);
    let count = |l: CycleLabel| cycles.iter().filter(|c| c.resp_label == l).count();
    prop_assert_eq!(a.global.n_cycles, cycles.len());
    prop_assert_eq!(a.inspiration.map_or(0, |e| e.n_cycles), count(CycleLabel::Inspiration));
    prop_assert_eq!(a.expiration.map_or(0, |e| e.n_cycles), count(CycleLabel::Expiration));
    prop_assert_eq!(a.n_mixed, count(CycleLabel::Mixed));
    Ok(())
}

/// resample(alpha q) = alpha resample(q); bit-identical for powers of two.
pub fn ensemble_scaling(cycle: &LabeledCycle, exp2: i32, alpha: f64) -> Check {
    let scaled = |k: f64| LabeledCycle {
        samples: cycle.samples.iter().map(|&(t, q)| (t, k * q)).collect(),
        ..cycle.clone()
    };
    for interp in [Interpolation::CubicSpline, Interpolation::Linear] {
        let base = resample_cycle(cycle, interp).unwrap();
        let k = 2f64.powi(exp2);
        let s = resample_cycle(&scaled(k), interp).unwrap();
        for i in 0..GRID_POINTS {
            prop_assert_eq!(s.q32[i], k * base.q32[i]);
        }
        let g = resample_cycle(&scaled(alpha), interp).unwrap();
        let mag = base.q32.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for i in 0..GRID_POINTS {
            prop_assert!(
                close(g.q32[i], alpha * base.q32[i], 1e-12 * alpha * mag),
                "{:?} point {}: {} vs {}",
                interp,
                i,
                g.q32[i],
                alpha * base.q32[i]
            );
        }
    }
    Ok(())
}

fn direct_mean(cycles: &[&LabeledCycle]) -> Vec<f64> {
    let n = cycles.len() as f64;
    (0..GRID_POINTS)
        .map(|k| cycles.iter().map(|c| c.samples[k].1).sum::<f64>() / n)
        .collect()
}

fn assert_curve(curve: Option<&EnsembleCurve>, cycles: &[&LabeledCycle]) -> Check {
    match curve {
        None => prop_assert!(cycles.is_empty()),
        Some(e) => {
            prop_assert_eq!(e.n_cycles, cycles.len());
            let m = direct_mean(cycles);
            for k in 0..GRID_POINTS {
                prop_assert!(close(e.mean[k], m[k], 1e-9), "point {}: {} vs {}", k, e.mean[k], m[k]);
            }
        }
    }
    Ok(())
}

/// For cycles sampled on the grid, ensemble after resampling equals plain averaging.
pub fn ensemble_grid_identity(cycles: &[LabeledCycle]) -> Check {
    for interp in [Interpolation::CubicSpline, Interpolation::Linear] {
        let canon: Vec<CanonicalCycle> = cycles
            .iter()
            .map(|c| resample_cycle(c, interp).unwrap())
            .collect();
        for (c, r) in cycles.iter().zip(&canon) {
            for k in 0..GRID_POINTS {
                prop_assert!(close(r.q32[k], c.samples[k].1, 1e-9));
            }
        }
        let e = build_ensembles(&canon).unwrap();
        let all: Vec<&LabeledCycle> = cycles.iter().collect();
        let pick = |l: CycleLabel| -> Vec<&LabeledCycle> {
            cycles.iter().filter(|c| c.resp_label == l).collect()
        };
        assert_curve(Some(&e.global), &all)?;
        assert_curve(e.inspiration.as_ref(), &pick(CycleLabel::Inspiration))?;
        assert_curve(e.expiration.as_ref(), &pick(CycleLabel::Expiration))?;
    }
    Ok(())
}

// ---- metrics ----

fn sv(curve: &[f64], rr: f64) -> csfdyn::metrics::SvReport {
    stroke_volume(curve, rr, VolumeUnit::Milliliter, SvConvention::LobeMean).unwrap()
}

/// sv(alpha c) = alpha sv(c); sv(-c) = sv(c).
pub fn metrics_scale(curve: &[f64], rr: f64, alpha: f64) -> Check {
    let base = sv(curve, rr);
    prop_assert!(base.sv >= 0.0);
    let scaled: Vec<f64> = curve.iter().map(|q| alpha * q).collect();
    let s = sv(&scaled, rr);
    prop_assert!(close(s.sv, alpha * base.sv, 1e-12 * alpha * base.sv.max(1e-300)));
    let neg: Vec<f64> = curve.iter().map(|q| -q).collect();
    let n = sv(&neg, rr);
    prop_assert_eq!(n.sv, base.sv);
    prop_assert_eq!(n.v_plus, base.v_minus);
    prop_assert_eq!(n.v_minus, base.v_plus);
    prop_assert_eq!(n.direction_reversals, base.direction_reversals);
    Ok(())
}

/// For c >= max|q|: v_minus = 0 and sv = v_plus / 2 exactly.
pub fn metrics_offset(curve: &[f64], rr: f64, extra: f64) -> Check {
    let c = curve.iter().fold(0.0f64, |m, v| m.max(v.abs())) + extra;
    let lifted: Vec<f64> = curve.iter().map(|q| q + c).collect();
    let r = sv(&lifted, rr);
    prop_assert_eq!(r.v_minus, 0.0);
    prop_assert_eq!(r.sv, r.v_plus / 2.0);
    prop_assert_eq!(r.direction_reversals, 0);
    Ok(())
}

/// Both lobes nonzero implies at least two (and an even number of) reversals.
pub fn metrics_reversals(curve: &[f64], rr: f64) -> Check {
    let r = sv(curve, rr);
    if r.v_plus > 0.0 && r.v_minus > 0.0 {
        prop_assert!(r.direction_reversals >= 2);
    }
    prop_assert_eq!(r.direction_reversals % 2, 0);
    let (plus, minus) = oracles::periodic_trapezoid_lobes(curve, rr);
    prop_assert!(close(r.v_plus, plus, 1e-12 * plus.max(1.0)));
    prop_assert!(close(r.v_minus, minus, 1e-12 * minus.max(1.0)));
    Ok(())
}

/// 32-point SV within 0.5% of the SV on a 4096-point refinement of the same spline.
pub fn metrics_refined(w: &BandLimited, rr: f64) -> Check {
    let u32: Vec<f64> = (0..GRID_POINTS).map(|k| k as f64 / GRID_POINTS as f64).collect();
    let q32: Vec<f64> = u32.iter().map(|&u| w.eval(u)).collect();
    let spline = PeriodicSpline::new(&u32, &q32);
    let fine: Vec<f64> = (0..4096).map(|k| spline.eval(k as f64 / 4096.0)).collect();
    let coarse = sv(&q32, rr).sv;
    let refined = sv(&fine, rr).sv;
    prop_assert!(
        ((coarse - refined) / refined).abs() < 0.005,
        "coarse {} refined {}",
        coarse,
        refined
    );
    Ok(())
}

// ---- stats ----

pub fn pairs_of(v: &[(f64, f64)]) -> Vec<PairedSample> {
    v.iter()
        .enumerate()
        .map(|(i, &(a, b))| PairedSample::new(format!("S{i:02}"), a, b))
        .collect()
}

fn nonconstant(v: &[(f64, f64)]) -> bool {
    v.iter().any(|p| p.0 != v[0].0) && v.iter().any(|p| p.1 != v[0].1)
}

fn nonzero_diffs(v: &[(f64, f64)]) -> usize {
    v.iter().filter(|p| p.1 - p.0 != 0.0).count()
}

/// Strictly increasing transforms of a and b leave rs and p bit-identical.
pub fn stats_monotone(v: &[(f64, f64)]) -> Check {
    if !nonconstant(v) {
        return Ok(());
    }
    let base = spearman(&pairs_of(v)).unwrap();
    let moved: Vec<(f64, f64)> = v.iter().map(|&(a, b)| (a * a * a, (b / 64.0).exp())).collect();
    let t = spearman(&pairs_of(&moved)).unwrap();
    prop_assert_eq!(base.statistic.to_bits(), t.statistic.to_bits());
    prop_assert_eq!(base.p_value.to_bits(), t.p_value.to_bits());
    Ok(())
}

/// Adding c to both members of every pair leaves the Wilcoxon test unchanged.
pub fn stats_shift(v: &[(f64, f64)], c: f64) -> Check {
    if nonzero_diffs(v) < 5 {
        return Ok(());
    }
    let base = wilcoxon_paired(&pairs_of(v)).unwrap();
    let moved: Vec<(f64, f64)> = v.iter().map(|&(a, b)| (a + c, b + c)).collect();
    let s = wilcoxon_paired(&pairs_of(&moved)).unwrap();
    prop_assert_eq!(base, s);
    Ok(())
}

/// Swapping a and b: Wilcoxon W and p unchanged, rs unchanged (correlation
/// is symmetric). Negating b negates rs.
pub fn stats_swap(v: &[(f64, f64)]) -> Check {
    let swapped: Vec<(f64, f64)> = v.iter().map(|&(a, b)| (b, a)).collect();
    if nonzero_diffs(v) >= 5 {
        let w0 = wilcoxon_paired(&pairs_of(v)).unwrap();
        let w1 = wilcoxon_paired(&pairs_of(&swapped)).unwrap();
        prop_assert_eq!(w0.statistic, w1.statistic);
        prop_assert_eq!(w0.p_value, w1.p_value);
    }
    if nonconstant(v) {
        let s0 = spearman(&pairs_of(v)).unwrap();
        let s1 = spearman(&pairs_of(&swapped)).unwrap();
        prop_assert_eq!(s0.statistic, s1.statistic);
        prop_assert_eq!(s0.p_value, s1.p_value);
        let negated: Vec<(f64, f64)> = v.iter().map(|&(a, b)| (a, -b)).collect();
        let s2 = spearman(&pairs_of(&negated)).unwrap();
        prop_assert!(close(s2.statistic, -s0.statistic, 1e-12));
        prop_assert!(close(s2.p_value, s0.p_value, 1e-9));
    }
    Ok(())
}

/// Range of every statistic and the exact-test floor p >= 2 / 2^n.
pub fn stats_bounds(v: &[(f64, f64)]) -> Check {
    let n = nonzero_diffs(v);
    if n >= 5 {
        let w = wilcoxon_paired(&pairs_of(v)).unwrap();
        prop_assert!(w.p_value > 0.0 && w.p_value <= 1.0);
        prop_assert!(w.statistic >= 0.0);
        prop_assert!(w.statistic <= (n * (n + 1)) as f64 / 4.0);
        prop_assert_eq!(w.n, n);
        if n <= 25 {
            prop_assert_eq!(w.method, StatMethod::WilcoxonExact);
            prop_assert!(w.p_value >= 2.0 / 2f64.powi(n as i32));
        }
    }
    if nonconstant(v) {
        let s = spearman(&pairs_of(v)).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s.statistic));
        prop_assert!(s.p_value > 0.0 && s.p_value <= 1.0);
    }
    Ok(())
}

/// Exact p against brute-force enumeration of every sign pattern.
pub fn stats_exact_vs_enumeration(v: &[(f64, f64)]) -> Check {
    if nonzero_diffs(v) < 5 {
        return Ok(());
    }
    let a: Vec<f64> = v.iter().map(|p| p.0).collect();
    let b: Vec<f64> = v.iter().map(|p| p.1).collect();
    let (w, p) = oracles::wilcoxon_enumeration(&a, &b);
    let r = wilcoxon_paired(&pairs_of(v)).unwrap();
    prop_assert_eq!(r.statistic, w);
    prop_assert!(close(r.p_value, p, 1e-15), "{} vs {}", r.p_value, p);
    Ok(())
}

/// rs against rank-by-counting followed by textbook Pearson.
pub fn stats_rs_oracle(v: &[(f64, f64)]) -> Check {
    if !nonconstant(v) {
        return Ok(());
    }
    let a: Vec<f64> = v.iter().map(|p| p.0).collect();
    let b: Vec<f64> = v.iter().map(|p| p.1).collect();
    let r = spearman(&pairs_of(v)).unwrap();
    let o = oracles::spearman_oracle(&a, &b);
    prop_assert!(close(r.statistic, o, 1e-12), "{} vs {}", r.statistic, o);
    Ok(())
}

// ---- suites for the acceptance runner ----

fn run<S: Strategy>(
    name: &'static str,
    cases: u32,
    seed: u64,
    strategy: S,
    test: impl Fn(S::Value) -> Check,
) -> (&'static str, Result<(), String>) {
    let mut runner = TestRunner::new(seeded(cases, seed));
    (name, runner.run(&strategy, test).map_err(|e| e.to_string()))
}

pub type SuiteResult = Vec<(&'static str, Result<(), String>)>;

pub fn suite_gating(cases: u32) -> SuiteResult {
    vec![
        run("gating/scale", cases, 0x6a01, (gen::flow_case(), -6i32..6, 1e-3..1e3f64), |(c, e, a)| {
            gating_scale(&c, e, a)
        }),
        run("gating/time-shift", cases, 0x6a02, (gen::flow_case(), 3000.0..8000.0f64, -1e5..1e5f64), |(c, p, d)| {
            gating_time_shift(&c, p, d)
        }),
        run("gating/structure", cases, 0x6a03, (gen::flow_case(), 3000.0..8000.0f64), |(c, p)| {
            gating_structure(&c, p)
        }),
        run("gating/belt-affine", cases, 0x6a04, (gen::belt_case(), -10.0..10.0f64, 0.1..10.0f64), |(c, a, b)| {
            gating_belt_affine(&c, a, b)
        }),
    ]
}

pub fn shuffled_cycles() -> impl Strategy<Value = (Vec<CanonicalCycle>, Vec<CanonicalCycle>)> {
    gen::canonical_cycles().prop_flat_map(|v| {
        let w = Just(v.clone()).prop_shuffle();
        (Just(v), w)
    })
}

pub fn suite_ensemble(cases: u32) -> SuiteResult {
    vec![
        run("ensemble/permutation", cases, 0x6b01, shuffled_cycles(), |(a, b)| {
            ensemble_permutation(&a, &b)
        }),
        run("ensemble/scaling", cases, 0x6b02, (gen::labeled_cycle(), -8i32..8, 1e-3..1e3f64), |(c, e, a)| {
            ensemble_scaling(&c, e, a)
        }),
        run("ensemble/grid-identity", cases, 0x6b03, gen::grid_cycles(), |c| ensemble_grid_identity(&c)),
    ]
}

pub fn suite_metrics(cases: u32) -> SuiteResult {
    vec![
        run("metrics/scale", cases, 0x6c01, (gen::curve32(), 300.0..2000.0f64, 1e-3..1e3f64), |(c, rr, a)| {
            metrics_scale(&c, rr, a)
        }),
        run("metrics/offset", cases, 0x6c02, (gen::curve32(), 300.0..2000.0f64, 0.0..100.0f64), |(c, rr, x)| {
            metrics_offset(&c, rr, x)
        }),
        run("metrics/reversals", cases, 0x6c03, (gen::curve32(), 300.0..2000.0f64), |(c, rr)| {
            metrics_reversals(&c, rr)
        }),
        run("metrics/refined-grid", cases, 0x6c04, (gen::band_limited(), 300.0..2000.0f64), |(w, rr)| {
            metrics_refined(&w, rr)
        }),
    ]
}

pub fn suite_stats(cases: u32) -> SuiteResult {
    vec![
        run("stats/monotone", cases, 0x6d01, gen::dyadic_pairs(4..26), |v| stats_monotone(&v)),
        run("stats/shift", cases, 0x6d02, (gen::dyadic_pairs(5..40), -8000i32..8000), |(v, c)| {
            stats_shift(&v, c as f64 / 8.0)
        }),
        run("stats/swap", cases, 0x6d03, gen::dyadic_pairs(5..40), |v| stats_swap(&v)),
        run("stats/bounds", cases, 0x6d04, gen::dyadic_pairs(5..40), |v| stats_bounds(&v)),
        run("stats/exact-vs-enumeration", cases, 0x6d05, gen::dyadic_pairs(5..13), |v| {
            stats_exact_vs_enumeration(&v)
        }),
        run("stats/rs-oracle", cases, 0x6d06, gen::dyadic_pairs(4..40), |v| stats_rs_oracle(&v)),
    ]
}
