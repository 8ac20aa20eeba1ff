#![no_main]
use libfuzzer_sys::fuzz_target;
use statelift::conic::{parse_sdpa, write_sdpa};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_sdpa(text) {
        let text = write_sdpa(&p);
        let again = parse_sdpa(&text).expect("written program parses");
        assert_eq!(write_sdpa(&again), text);
    }
});
