//! CSV ingestion must reject or accept, never panic, on arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = evlab_cli::ingest::parse_csv(text);
    }
});
