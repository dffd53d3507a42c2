#![no_main]

use dpsynth::synth::parse_generation_response;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_generation_response(data);
});
