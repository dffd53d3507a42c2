#![no_main]

use dpsynth::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = ExperimentConfig::from_json(data) {
        let _ = cfg.validate();
        let _ = cfg.fingerprint();
    }
});
