//! Ten simulated subjects measured with gated conv-PC and continuous EPI-PC,
//! compared with Spearman, Wilcoxon and a paired t test.

use rayon::prelude::*;

use csfdyn::ingest::SeriesKind;
use csfdyn::phantom::{cohort, generate, generate_gated, CohortJitter, Phantom, PhantomSpec};
use csfdyn::pipeline::{process_subject, Params, Provenance, SubjectInputs};
use csfdyn::stats::{paired_t, spearman, wilcoxon_paired, PairedSample};

fn run(spec: &PhantomSpec, gated: bool) -> f64 {
    let ph = Phantom::new(spec).unwrap();
    let inputs = if gated {
        let mut s = spec.clone();
        s.acquisition.series_kind = SeriesKind::GatedConv;
        SubjectInputs {
            series: generate_gated(&s).unwrap(),
            roi: ph.lumen_mask(),
            static_mask: Some(ph.static_mask()),
            belt: None,
            plethysmo: None,
        }
    } else {
        let d = generate(spec).unwrap();
        SubjectInputs {
            series: d.series,
            roi: d.lumen_mask,
            static_mask: Some(d.static_mask),
            belt: Some(d.belt),
            plethysmo: None,
        }
    };
    process_subject(&inputs, &Params::default(), Provenance::new(serde_json::Value::Null, vec![]))
        .unwrap()
        .global
        .sv
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (subjects, _) = cohort(10, CohortJitter::default(), 2024)?;
    let pairs: Vec<PairedSample> = subjects
        .par_iter()
        .map(|s| PairedSample::new(s.subject_id.clone(), run(&s.aqueduct, true), run(&s.aqueduct, false)))
        .collect();
    for p in &pairs {
        println!("{}  conv {:6.2} uL  epi {:6.2} uL", p.subject_id, p.a, p.b);
    }
    let rs = spearman(&pairs)?;
    let w = wilcoxon_paired(&pairs)?;
    let t = paired_t(&pairs)?;
    println!("Spearman rs = {:.3} (p = {:.2e})", rs.statistic, rs.p_value);
    println!("Wilcoxon W = {} (p = {:.4}, {:?})", w.statistic, w.p_value, w.method);
    println!("paired t = {:.3} (p = {:.4})", t.statistic, t.p_value);
    Ok(())
}
