//! Bit unframing on arbitrary bytes; accepted framings must round-trip
//! back to the identical bytes (the framing is canonical).

#![no_main]

use libfuzzer_sys::fuzz_target;

use evlab::compress::{frame_bits, unframe_bytes};

fuzz_target!(|data: &[u8]| {
    if let Ok(bits) = unframe_bytes(data) {
        let reframed = frame_bits(&bits).expect("unframed bits are binary");
        assert_eq!(reframed, data);
    }
});
