//! Split the belt trace into inspiration and expiration and label every
//! cardiac cycle; compare with the simulator's own labels.

use csfdyn::flow::extract_flow;
use csfdyn::gating::{classify_resp, detect_cycles_from_flow, label_cycles, CardiacParams, CycleLabel, RespParams};
use csfdyn::phantom::{generate, PhantomSpec};
use csfdyn::velocity::phase_to_velocity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = generate(&PhantomSpec::aqueduct())?;
    let flow = extract_flow(&phase_to_velocity(&d.series)?, &d.lumen_mask)?;
    let phases = classify_resp(&d.belt, RespParams::default())?;
    let cycles = label_cycles(&detect_cycles_from_flow(&flow, CardiacParams::default())?, &phases, &flow)?;

    let runs = phases.runs();
    println!("belt: {} runs, first transitions {:?}", runs.len(), &phases.transitions()[..4]);
    let (mut agree, mut compared) = (0, 0);
    for c in &cycles {
        let truth = d.truth.cycles.iter().min_by(|a, b| {
            (a.onset - c.start).abs().total_cmp(&(b.onset - c.start).abs())
        });
        if let Some(t) = truth {
            if t.label != CycleLabel::Mixed && c.resp_label != CycleLabel::Mixed {
                compared += 1;
                agree += usize::from(t.label == c.resp_label);
            }
        }
    }
    for l in [CycleLabel::Inspiration, CycleLabel::Expiration, CycleLabel::Mixed] {
        println!("{l:?}: {}", cycles.iter().filter(|c| c.resp_label == l).count());
    }
    println!("label agreement with truth on non-straddling cycles: {agree}/{compared}");
    Ok(())
}
