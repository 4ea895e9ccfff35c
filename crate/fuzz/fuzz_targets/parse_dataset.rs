#![no_main]

use libfuzzer_sys::fuzz_target;
use timewise::dataset::{bucketize, parse_dataset, Schema};

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = parse_dataset(data, &Schema::default()) else {
        return;
    };
    for months in [1, 6, 12] {
        if let Ok(ts) = bucketize(parsed.releases.clone(), months) {
            let n: usize = ts.buckets.iter().map(|b| b.releases.len()).sum();
            assert_eq!(n, parsed.releases.len());
        }
    }
});
