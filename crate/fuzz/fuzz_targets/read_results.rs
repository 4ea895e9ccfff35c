#![no_main]

use libfuzzer_sys::fuzz_target;
use timewise::results::{read_results, write_results};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_results(data) else {
        return;
    };
    let mut out = Vec::new();
    write_results(&records, &mut out).expect("write to memory");
    assert_eq!(read_results(&out[..]).expect("round trip"), records);
});
