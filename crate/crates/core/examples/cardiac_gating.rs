//! Self-gated cardiac onsets from the flow curve against the plethysmograph
//! and the simulator's true onsets.

use csfdyn::flow::extract_flow;
use csfdyn::gating::{detect_cycles_from_flow, detect_cycles_from_plethysmo, CardiacParams};
use csfdyn::phantom::{generate, PhantomSpec};
use csfdyn::velocity::phase_to_velocity;

fn nearest(t: f64, xs: &[f64]) -> f64 {
    xs.iter().map(|x| (x - t).abs()).fold(f64::INFINITY, f64::min)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = PhantomSpec::aqueduct();
    spec.cardiac.rr_jitter_sd = 0.05 * spec.cardiac.rr_mean;
    let d = generate(&spec)?;
    let flow = extract_flow(&phase_to_velocity(&d.series)?, &d.lumen_mask)?;
    let truth: Vec<f64> = d.truth.cycles.iter().map(|c| c.onset).collect();

    let from_flow = detect_cycles_from_flow(&flow, CardiacParams::default())?;
    let from_pleth = detect_cycles_from_plethysmo(&d.plethysmo, CardiacParams::default())?;
    for (name, b) in [("flow", &from_flow), ("plethysmo", &from_pleth)] {
        let within = b.onsets.iter().filter(|&&t| nearest(t, &truth) <= 88.0).count();
        println!(
            "{name:>9}: {} onsets (truth {}), {} within 88 ms, mean RR {:.1} ms, cv {:.3}",
            b.onsets.len(),
            truth.len(),
            within,
            b.mean_rr,
            b.rr_cv
        );
    }
    Ok(())
}
