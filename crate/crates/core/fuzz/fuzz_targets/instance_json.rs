#![no_main]
use libfuzzer_sys::fuzz_target;
use pricelearn::valuations::Instance;

fuzz_target!(|data: &[u8]| {
    if let Ok(inst) = Instance::from_json(data) {
        let again = Instance::from_json(inst.to_json().as_bytes()).expect("own output parses");
        assert_eq!(again, inst);
    }
});
