//! Simulate aqueduct and spinal-canal acquisitions and run the full pipeline.

use std::time::Instant;

use csfdyn::phantom::{generate, PhantomSpec};
use csfdyn::pipeline::{process_subject, Params, Provenance, SubjectInputs};

fn main() {
    for spec in [PhantomSpec::aqueduct(), PhantomSpec::spinal()] {
        let start = Instant::now();
        let d = generate(&spec).expect("valid preset");
        let inputs = SubjectInputs {
            series: d.series,
            roi: d.lumen_mask,
            static_mask: Some(d.static_mask),
            belt: Some(d.belt),
            plethysmo: None,
        };
        let params = Params::default();
        let echo = serde_json::to_value(&params).unwrap();
        let r = process_subject(&inputs, &params, Provenance::new(echo, vec![])).unwrap();
        let g = r.gating.as_ref().unwrap();
        let scale = r.unit.per_ml();
        println!("{:?}: {} cycles ({} insp, {} exp, {} mixed), truth {}", r.roi, g.n_cycles,
            g.n_inspiration, g.n_expiration, g.n_mixed, d.truth.cycles.len());
        println!("  SV global {:.4} {} (truth {:.4})", r.global.sv, r.unit.symbol(), d.truth.sv_true * scale);
        println!("  SV insp {:.4}  exp {:.4}", r.inspiration.as_ref().unwrap().sv, r.expiration.as_ref().unwrap().sv);
        println!("  modulation {:.4} (programmed {:.2})", r.sv_modulation.unwrap(), spec.resp.modulation_insp);
        println!("  reversal {:?}  [{:.2?}]", r.reversal, start.elapsed());
    }
}
