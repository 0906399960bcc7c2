//! Stroke volume of the reconstructed curves under both conventions.

use csfdyn::metrics::{reversal_check, stroke_volume, sv_modulation, SvConvention, VolumeUnit};
use csfdyn::phantom::{generate, PhantomSpec};
use csfdyn::pipeline::{process_subject, Params, Provenance, SubjectInputs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PhantomSpec::aqueduct();
    let d = generate(&spec)?;
    let inputs = SubjectInputs {
        series: d.series,
        roi: d.lumen_mask,
        static_mask: Some(d.static_mask),
        belt: Some(d.belt),
        plethysmo: None,
    };
    let r = process_subject(&inputs, &Params::default(), Provenance::new(serde_json::Value::Null, vec![]))?;
    let curves = &r.curves;
    let unit = VolumeUnit::Microliter;
    for conv in [SvConvention::LobeMean, SvConvention::FlushLobe] {
        let sv = |c: &csfdyn::ensemble::EnsembleCurve| stroke_volume(&c.mean, c.mean_rr, unit, conv);
        let ins = sv(curves.inspiration.as_ref().unwrap())?;
        let exp = sv(curves.expiration.as_ref().unwrap())?;
        println!(
            "{conv:?}: global {:.2} uL, insp {:.2}, exp {:.2}, modulation {:+.1}%",
            sv(&curves.global)?.sv,
            ins.sv,
            exp.sv,
            100.0 * sv_modulation(&ins, &exp)?
        );
    }
    let g = &r.global;
    println!(
        "net flow {:.4} mL/min, flush fraction {:.2}, reversals {}, both directions: {}",
        g.net_flow,
        g.flush_duration_fraction,
        g.direction_reversals,
        reversal_check(&curves.global.mean)
    );
    println!("truth: sv {:.2} uL, insp {:.2} uL", d.truth.sv_true * 1000.0, d.truth.sv_insp_true * 1000.0);
    Ok(())
}
