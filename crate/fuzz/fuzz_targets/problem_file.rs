#![no_main]
use libfuzzer_sys::fuzz_target;
use statelift::problem_file::{parse_problem, write_problem};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(chain) = parse_problem(text) {
        // Anything accepted must survive a write/parse cycle.
        let again = parse_problem(&write_problem(&chain)).expect("written problem parses");
        assert_eq!(again.ranks(), chain.ranks());
    }
});
