#![no_main]

use chirplike::montecarlo::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_json(s) {
            cfg.validate().unwrap();
        }
    }
});
