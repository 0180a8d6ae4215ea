mod common;

use bgamp::circuits::{emit_netlist, parse_netlist, Circuit};
use common::corpus;

#[test]
fn corpus_has_fifty_cases() {
    assert_eq!(corpus::valid().len() + corpus::malformed().len(), 50);
}

#[test]
fn valid_decks_round_trip() {
    for case in corpus::valid() {
        let net = parse_netlist(&case.text).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        Circuit::from_netlist(&net).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        let again = parse_netlist(&emit_netlist(&net)).unwrap_or_else(|e| panic!("{}: reparse {e}", case.name));
        assert!(net.same_structure(&again), "{}", case.name);
    }
}

#[test]
fn malformed_decks_are_positioned() {
    let mut wrong = Vec::new();
    for case in corpus::malformed() {
        match parse_netlist(&case.text) {
            Ok(_) => wrong.push(format!("{}: accepted", case.name)),
            Err(e) => match e.span() {
                Some(s) if (s.line, s.column) == case.at => {}
                other => wrong.push(format!("{}: {other:?} ({e})", case.name)),
            },
        }
    }
    assert!(wrong.is_empty(), "{}", wrong.join("\n"));
}
