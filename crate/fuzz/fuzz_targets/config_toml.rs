#![no_main]

use fracldg::harness::{RawSpec, RunSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(raw) = RawSpec::from_toml(text) {
            // validation only; never runs a sweep
            let _ = RunSpec::from_raw(&raw);
        }
    }
});
