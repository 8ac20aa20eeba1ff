#![no_main]
use std::sync::Arc;

use libfuzzer_sys::fuzz_target;
use statelift::poly::VariableSpace;
use statelift::problem_file::{parse_terms, Term};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let space = Arc::new(VariableSpace::for_chain(&[2, 1, 3], &[2, 3, 1]));
    if let Ok(id) = space.parse_name(text) {
        assert_eq!(space.name(id), text);
    }
    if let Ok(terms) = serde_json::from_str::<Vec<Term>>(text) {
        let _ = parse_terms(&space, &terms, "F");
    }
});
