#![no_main]

use fracldg::harness::{parse_value, parse_values};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(values) = parse_values(text, 0.5) {
            assert!(values.iter().all(|v| v.is_finite()));
        }
        let _ = parse_value(text, 0.5);
    }
});
