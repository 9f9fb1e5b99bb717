#![no_main]
use libfuzzer_sys::fuzz_target;
use pricelearn::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = ExperimentConfig::from_json(data) {
        let json = serde_json::to_vec(&cfg).expect("config serializes");
        assert_eq!(
            ExperimentConfig::from_json(&json).expect("own output parses"),
            cfg
        );
    }
});
