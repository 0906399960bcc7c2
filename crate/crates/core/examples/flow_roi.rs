//! Flow through a hand-drawn ROI that is too small, and the same ROI after
//! correlation-based refinement.

use csfdyn::flow::{extract_flow, refine_roi, DEFAULT_REFINE_THRESHOLD};
use csfdyn::ingest::{RoiLabel, RoiMask};
use csfdyn::phantom::{generate, PhantomSpec};
use csfdyn::velocity::phase_to_velocity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = PhantomSpec::spinal();
    spec.acquisition.duration = 10_000.0;
    let d = generate(&spec)?;
    let field = phase_to_velocity(&d.series)?;

    let (cx, cy) = (spec.lumen.center_x, spec.lumen.center_y);
    let seed = RoiMask::from_fn(field.header.width, field.header.height, RoiLabel::SpinalCanal, |x, y| {
        (x as f64 - cx).abs() <= 2.0 && (y as f64 - cy).abs() <= 2.0
    })?;
    let refined = refine_roi(&field, &seed, DEFAULT_REFINE_THRESHOLD)?;

    let peak = |m: &RoiMask| -> Result<f64, Box<dyn std::error::Error>> {
        Ok(extract_flow(&field, m)?.q.iter().fold(0.0f64, |a, q| a.max(q.abs())))
    };
    println!("true lumen: {} px, peak |Q| {:.4} mL/s", d.lumen_mask.count(), peak(&d.lumen_mask)?);
    println!("seed ROI:   {} px, peak |Q| {:.4} mL/s", seed.count(), peak(&seed)?);
    println!("refined:    {} px, peak |Q| {:.4} mL/s", refined.count(), peak(&refined)?);
    Ok(())
}
