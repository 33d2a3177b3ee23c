//! JSON config parsing and default resolution on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;

use evlab_cli::config::{PartialConfig, RunConfig};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(partial) = PartialConfig::from_json(text) {
            let _ = RunConfig::from_partial(partial);
        }
    }
});
