//! A template and its emitted netlist are the same circuit.

use bgamp::cards;
use bgamp::circuits::{
    design_amplifier, emit_netlist, parse_netlist, topology_to_netlist, AmplifierSpec, Circuit, Feedback, Kind,
};
use bgamp::dcsolve::solve_op;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn emitted_netlists_solve_to_the_template_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let kinds = [Kind::CcsOl, Kind::CcsBg, Kind::DiffScmfb, Kind::DiffDcmfb];
    let mut done = 0;
    while done < 100 {
        let (n, p) = cards::with_chi(cards::pair(rng.gen_range(0.15..2.0)), rng.gen_range(0.05..0.4));
        let kind = kinds[rng.gen_range(0..4)];
        let fb = if rng.gen_bool(0.5) { Feedback::BackGate } else { Feedback::OpenLoop };
        let spec = AmplifierSpec::new(kind, fb, n, p).gm_over_id(rng.gen_range(5.0..20.0));
        let Ok(d) = design_amplifier(&spec) else { continue };
        let t = &d.topology;
        let text = emit_netlist(&topology_to_netlist(t));
        let c = Circuit::from_netlist(&parse_netlist(&text).unwrap()).unwrap();
        let a = solve_op(&t.circuit, Some(&d.guess)).unwrap();
        let b = solve_op(&c, None).unwrap();
        for name in t.circuit.node_names() {
            let (va, vb) = (a.voltage(&t.circuit, name).unwrap(), b.voltage(&c, name).unwrap());
            assert!((va - vb).abs() < 1e-6, "{kind:?}/{fb:?} node {name}: {va} vs {vb}\n{text}");
        }
        done += 1;
    }
}
