#![no_main]

use dpsynth::dp::NoisyHistogram;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(h) = serde_json::from_str::<NoisyHistogram>(data) {
        let text = serde_json::to_string(&h).expect("histogram serializes");
        let _ = serde_json::from_str::<NoisyHistogram>(&text);
    }
});
