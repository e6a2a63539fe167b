use ots_core::gates::{
    build_gate, build_gate_with, evaluate, input_rows, truth_table, TemplateOverrides,
};
use ots_core::{
    default_params, parse_netlist, write_netlist, ElementKind, GateKind, LogicEncoding, Netlist64,
    OtsParams64,
};

fn params() -> OtsParams64 {
    default_params()
}

#[test]
fn tables_hold_at_ten_percent_amplitude_error() {
    for v_high in [4.5, 5.5] {
        let enc = LogicEncoding {
            v_high,
            ..Default::default()
        };
        for kind in [
            GateKind::And,
            GateKind::Or,
            GateKind::Nand,
            GateKind::Nor,
            GateKind::Xor,
            GateKind::HalfAdder,
        ] {
            let t = truth_table(&build_gate(kind, params()), &enc).unwrap();
            assert!(t.all_match(), "{kind} at {v_high} V: {t:?}");
        }
    }
}

#[test]
fn single_precision_gates() {
    let p = default_params::<f32>();
    let enc = LogicEncoding::<f32>::default();
    for kind in [GateKind::And, GateKind::Xor, GateKind::Nor] {
        let t = truth_table(&build_gate(kind, p), &enc).unwrap();
        assert!(t.all_match(), "{kind}: {t:?}");
    }
}

#[test]
fn evaluate_single_row() {
    let enc = LogicEncoding::default();
    assert_eq!(
        evaluate(GateKind::HalfAdder, &[true, true], &enc, params()).unwrap(),
        vec![false, true]
    );
    assert_eq!(
        evaluate(GateKind::Or, &[false, false], &enc, params()).unwrap(),
        vec![false]
    );
    assert!(evaluate(GateKind::Xor, &[true], &enc, params()).is_err());
}

#[test]
fn half_adder_overrides_reach_the_netlist() {
    let ov = TemplateOverrides {
        half_adder_c2: 500e-12,
        half_adder_c3: 220e-12,
    };
    let tpl = build_gate_with(GateKind::HalfAdder, params(), &ov);
    for (name, farads) in [("C2", 500e-12), ("C3", 220e-12)] {
        match tpl.net.element(name).unwrap().kind {
            ElementKind::Capacitor { farads: f, .. } => assert_eq!(f, farads),
            ref k => panic!("{name} is {k:?}"),
        }
    }
}

#[test]
fn templates_validate_and_round_trip_as_text() {
    for kind in GateKind::ALL {
        let tpl = build_gate(kind, params());
        tpl.net.validate().unwrap();
        assert_eq!(tpl.inputs.len(), kind.arity());
        assert_eq!(tpl.outputs.len(), kind.output_count());
        let text = write_netlist(&tpl.net, &tpl.notes);
        let back: Netlist64 = parse_netlist(&text).unwrap();
        assert_eq!(write_netlist(&back, &tpl.notes), text, "{kind}");
        assert_eq!(back.elements.len(), tpl.net.elements.len());
    }
}

#[test]
fn parsed_xor_behaves_like_template() {
    let tpl = build_gate(GateKind::Xor, params());
    let mut reparsed = tpl.clone();
    reparsed.net = parse_netlist(&write_netlist(&tpl.net, &[])).unwrap();
    // outputs refer to element indices, which the text format preserves
    let enc = LogicEncoding::default();
    assert_eq!(
        truth_table(&tpl, &enc).unwrap(),
        truth_table(&reparsed, &enc).unwrap()
    );
}

#[test]
fn rows_cover_every_combination() {
    for arity in 1..5 {
        let rows = input_rows(arity);
        assert_eq!(rows.len(), 1 << arity);
        let mut seen: Vec<_> = rows
            .iter()
            .map(|r| r.iter().fold(0, |a, &b| a * 2 + usize::from(b)))
            .collect();
        seen.dedup();
        assert_eq!(seen, (0..1 << arity).collect::<Vec<_>>());
    }
}
