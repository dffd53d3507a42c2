#![no_main]

use dpsynth::corpus::{parse_jsonl, to_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(corpus) = parse_jsonl(data) {
        let again = parse_jsonl(&to_jsonl(&corpus)).expect("written JSONL parses");
        assert_eq!(again.records, corpus.records);
    }
});
