#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = survscore::io::parse_dataset_csv(text, None);
        let _ = survscore::io::parse_dataset_csv(text, Some("group"));
    }
});
