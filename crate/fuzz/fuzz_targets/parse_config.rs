#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use timewise::config::{parse_entries, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let entries = parse_entries(text);
    let config = ExperimentConfig::parse(text, Path::new("/base"));
    // Anything that parses fully must have parsed as entries first.
    if config.is_ok() {
        assert!(entries.is_ok());
    }
});
