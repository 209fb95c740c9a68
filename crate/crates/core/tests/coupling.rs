use cobra_core::exec::Sequential;
use cobra_core::harness::{coupled_contact_run, coupling_check_contact, ContactParams};
use cobra_core::model::GraphSpec;
use cobra_core::rng;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn brw_dominates_contact_path(
        death in 0.1f64..2.0,
        reproduction in 0.0f64..1.0,
        occupied in prop::collection::vec(0u64..3, 9),
        seed in any::<u64>(),
    ) {
        let g = GraphSpec::torus(3, 2).unwrap();
        let params = ContactParams { death, reproduction, max_events: 200_000 };
        let run = coupled_contact_run(&g, &params, &occupied, 3.0, &mut rng::stream(seed, 0));
        prop_assert!(run.holds);
        for (c, b) in run.final_contact.iter().zip(&run.final_brw) {
            prop_assert!(u64::from(*c > 0) <= *b);
        }
        if run.brw_extinct {
            prop_assert!(run.contact_extinct);
        }
        if let (Some(tc), Some(tb)) = (run.contact_extinction, run.brw_extinction) {
            prop_assert!(tc <= tb);
        }
    }
}

#[test]
fn subcritical_torus_dies_out() {
    let g = GraphSpec::torus(4, 2).unwrap();
    let params = ContactParams {
        death: 1.0,
        reproduction: 0.1,
        max_events: 1_000_000,
    };
    let s = coupling_check_contact(&g, &params, &[1; 16], 40.0, 200, 7, &Sequential);
    assert!(s.holds());
    assert_eq!(s.brw_extinct, 200);
    assert_eq!(s.contact_extinct, 200);
}
