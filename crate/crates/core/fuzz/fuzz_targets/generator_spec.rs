#![no_main]
use libfuzzer_sys::fuzz_target;
use pricelearn::valuations::{generate_instance, GeneratorSpec};

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = GeneratorSpec::from_json(data) {
        // keep each run cheap; generation cost grows with n and 2^m
        if spec.n <= 4 && spec.m <= 6 {
            let _ = generate_instance(&spec, 0);
        }
    }
});
