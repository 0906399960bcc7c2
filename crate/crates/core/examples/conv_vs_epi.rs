//! A gated conventional acquisition averages inspiration and expiration into
//! one curve; the continuous acquisition separates them.

use csfdyn::ingest::SeriesKind;
use csfdyn::phantom::{generate, generate_gated, Phantom, PhantomSpec};
use csfdyn::pipeline::{process_subject, Params, Provenance, SubjectInputs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PhantomSpec::aqueduct();
    let prov = || Provenance::new(serde_json::Value::Null, vec![]);
    let d = generate(&spec)?;
    let epi = process_subject(
        &SubjectInputs {
            series: d.series,
            roi: d.lumen_mask.clone(),
            static_mask: Some(d.static_mask.clone()),
            belt: Some(d.belt),
            plethysmo: None,
        },
        &Params::default(),
        prov(),
    )?;

    let mut gated = spec.clone();
    gated.acquisition.series_kind = SeriesKind::GatedConv;
    let ph = Phantom::new(&gated)?;
    let conv = process_subject(
        &SubjectInputs {
            series: generate_gated(&gated)?,
            roi: ph.lumen_mask(),
            static_mask: Some(ph.static_mask()),
            belt: None,
            plethysmo: None,
        },
        &Params::default(),
        prov(),
    )?;

    println!("EPI  inspiration SV {:.2} uL", epi.inspiration.as_ref().unwrap().sv);
    println!("EPI  expiration  SV {:.2} uL", epi.expiration.as_ref().unwrap().sv);
    println!("conv single curve SV {:.2} uL", conv.global.sv);
    println!("truth: insp {:.2}, exp {:.2} uL", 1000.0 * d.truth.sv_insp_true, 1000.0 * d.truth.sv_exp_true);
    Ok(())
}
