#![no_main]

use dpsynth::eval::parse_icl_label;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_icl_label(data);
});
