#![no_main]
use libfuzzer_sys::fuzz_target;
use pricelearn::hexfloat;

// Anything that parses must format back to a string naming the same bits.
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(x) = hexfloat::parse(s) {
            let back = hexfloat::parse(&hexfloat::format(x)).expect("formatted value parses");
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
});
