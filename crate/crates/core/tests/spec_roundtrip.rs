use afpm_core::model::{parse_spec, prototype, serialize_spec, PROTOTYPE_SPEC_TEXT};
use afpm_core::Error;
use proptest::prelude::*;

#[test]
fn prototype_file_is_already_canonical() {
    let s = parse_spec(PROTOTYPE_SPEC_TEXT).unwrap();
    assert_eq!(serialize_spec(&s), PROTOTYPE_SPEC_TEXT);
}

#[test]
fn invariant_violations_are_reported() {
    let bad = PROTOTYPE_SPEC_TEXT.replace("inner_diameter = \"7.0 mm\"", "inner_diameter = \"20.0 mm\"");
    assert!(matches!(parse_spec(&bad), Err(Error::Invariant { .. })));
}

#[test]
fn unit_errors_name_the_field() {
    let bad = PROTOTYPE_SPEC_TEXT.replace("air_gap_axial = \"0.25 mm\"", "air_gap_axial = \"0.25\"");
    match parse_spec(&bad) {
        Err(Error::Parse { field, .. }) => assert!(field.unwrap().contains("air_gap_axial")),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn round_trip_is_byte_stable(
        gap in 0.05e-3f64..0.25e-3,
        width in 0.1e-3f64..0.45e-3,
        br in 0.8f64..1.45,
        h in 5.0f64..200.0,
        layers_per_module in prop::sample::select(vec![4u32, 6, 8, 12, 24]),
        cal in 0.1f64..10.0,
        fixed_loss in 0.0f64..1.0,
        extra in prop::collection::btree_map("[a-z]{1,8}_[a-z]{1,4}", -1e6f64..1e6, 0..4),
    ) {
        let mut s = prototype();
        s.geometry.air_gap_axial = gap;
        s.winding.trace_width = width;
        s.winding.layers_per_module = layers_per_module;
        s.materials.magnet_remanence = br;
        s.thermal.convection_coefficient = h;
        s.magnetics.emf_calibration = cal;
        s.electrical.fixed_loss = fixed_loss;
        s.reference.extend(extra);
        let text = serialize_spec(&s);
        let once = parse_spec(&text).unwrap();
        let again = serialize_spec(&once);
        prop_assert_eq!(&again, &text);
        prop_assert_eq!(parse_spec(&again).unwrap(), once);
    }
}
