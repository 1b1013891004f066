#![no_main]

use fracldg::harness::{parse_csv, to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(tables) = parse_csv(text) {
            // anything accepted must re-serialize and parse back identically
            let again = to_csv(&tables).expect("serialize parsed tables");
            let back = parse_csv(&again).expect("reparse serialized tables");
            assert_eq!(to_csv(&back).unwrap(), again);
        }
    }
});
