//! Phantom-to-report helpers.

use csfdyn::ingest::SeriesKind;
use csfdyn::phantom::{generate, generate_gated, Phantom, PhantomDataset, PhantomSpec};
use csfdyn::pipeline::{process_subject, Params, PipelineError, Provenance, SubjectInputs, SubjectReport};

pub fn prov() -> Provenance {
    Provenance::new(serde_json::Value::Null, vec![])
}

pub fn epi_inputs(d: &PhantomDataset, belt: bool) -> SubjectInputs {
    SubjectInputs {
        series: d.series.clone(),
        roi: d.lumen_mask.clone(),
        static_mask: Some(d.static_mask.clone()),
        belt: belt.then(|| d.belt.clone()),
        plethysmo: Some(d.plethysmo.clone()),
    }
}

pub fn epi(spec: &PhantomSpec, params: &Params) -> Result<(PhantomDataset, SubjectReport), PipelineError> {
    let d = generate(spec).expect("valid spec");
    let r = process_subject(&epi_inputs(&d, true), params, prov())?;
    Ok((d, r))
}

pub fn gated_spec(spec: &PhantomSpec) -> PhantomSpec {
    let mut g = spec.clone();
    g.acquisition.series_kind = SeriesKind::GatedConv;
    g
}

pub fn conv(spec: &PhantomSpec, params: &Params) -> Result<SubjectReport, PipelineError> {
    let g = gated_spec(spec);
    let ph = Phantom::new(&g).expect("valid spec");
    let inputs = SubjectInputs {
        series: generate_gated(&g).expect("valid spec"),
        roi: ph.lumen_mask(),
        static_mask: Some(ph.static_mask()),
        belt: None,
        plethysmo: None,
    };
    process_subject(&inputs, params, prov())
}
