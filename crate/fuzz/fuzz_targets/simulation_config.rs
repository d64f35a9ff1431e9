#![no_main]

use libfuzzer_sys::fuzz_target;
use recordsel::SimulationConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = SimulationConfig::from_json(text) {
        let again = SimulationConfig::from_json(&cfg.to_json()).expect("round trip");
        assert_eq!(again.to_json(), cfg.to_json());
    }
});
