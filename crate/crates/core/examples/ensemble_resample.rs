//! Resample 8-12 point cycles onto the 32-point grid (spline and linear) and
//! average them into inspiration and expiration ensembles.

use csfdyn::ensemble::{build_ensembles, resample_cycle, Interpolation};
use csfdyn::flow::extract_flow;
use csfdyn::gating::{classify_resp, detect_cycles_from_flow, label_cycles, CardiacParams, RespParams};
use csfdyn::phantom::{generate, Phantom, PhantomSpec};
use csfdyn::velocity::phase_to_velocity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = PhantomSpec::aqueduct();
    spec.acquisition.noise_sd_phase = 0.0;
    spec.resp.modulation_insp = 0.0;
    let d = generate(&spec)?;
    let ph = Phantom::new(&spec)?;
    let flow = extract_flow(&phase_to_velocity(&d.series)?, &d.lumen_mask)?;
    let phases = classify_resp(&d.belt, RespParams::default())?;
    let cycles = label_cycles(&detect_cycles_from_flow(&flow, CardiacParams::default())?, &phases, &flow)?;
    println!("{} cycles of {}-{} samples", cycles.len(),
        cycles.iter().map(|c| c.samples.len()).min().unwrap_or(0),
        cycles.iter().map(|c| c.samples.len()).max().unwrap_or(0));

    for interp in [Interpolation::CubicSpline, Interpolation::Linear] {
        let canon = cycles.iter().map(|c| resample_cycle(c, interp)).collect::<Result<Vec<_>, _>>()?;
        let e = build_ensembles(&canon)?;
        let err = (0..32)
            .map(|k| (e.global.mean[k] - ph.shape_flow(k as f64 / 32.0)).abs())
            .fold(0.0f64, f64::max);
        println!(
            "{interp:?}: peak {:.4} mL/s (true {:.4}), max deviation from true shape {:.4} mL/s",
            e.global.mean.iter().fold(0.0f64, |a, v| a.max(*v)),
            (0..4096).map(|i| ph.shape_flow(i as f64 / 4096.0)).fold(0.0f64, f64::max),
            err
        );
    }
    Ok(())
}
