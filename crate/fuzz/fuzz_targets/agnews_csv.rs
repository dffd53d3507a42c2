#![no_main]

use dpsynth::corpus::{parse_agnews_csv, to_agnews_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(corpus) = parse_agnews_csv(data) {
        let again = parse_agnews_csv(&to_agnews_csv(&corpus)).expect("written CSV parses");
        assert_eq!(again.records, corpus.records);
    }
});
