//! The model/constructor/calibrator spec parsers on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;

use evlab_cli::config::{CalibratorSpec, ConstructorSpec, ModelSpec};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ModelSpec::parse(text);
        if let Ok(spec) = ConstructorSpec::parse(text) {
            // anything that parses must also build
            let _ = spec.build();
        }
        let _ = CalibratorSpec::parse(text);
    }
});
