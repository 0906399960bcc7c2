mod common;

use common::{gen, props, seeded};
use proptest::prelude::*;

proptest! {
    #![proptest_config(seeded(1000, 0x1a01))]

    #[test]
    fn onsets_invariant_under_positive_scaling(c in gen::flow_case(), e in -6i32..6, a in 1e-3..1e3f64) {
        props::gating_scale(&c, e, a)?;
    }

    #[test]
    fn time_shift_moves_every_output(c in gen::flow_case(), period in 3000.0..8000.0f64, d in -1e5..1e5f64) {
        props::gating_time_shift(&c, period, d)?;
    }

    #[test]
    fn cycles_are_disjoint_and_ordered(c in gen::flow_case(), period in 3000.0..8000.0f64) {
        props::gating_structure(&c, period)?;
    }

    #[test]
    fn belt_labels_invariant_under_affine_maps(c in gen::belt_case(), a in -10.0..10.0f64, b in 0.1..10.0f64) {
        props::gating_belt_affine(&c, a, b)?;
    }
}
