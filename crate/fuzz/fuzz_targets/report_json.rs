#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(report) = survscore::report::RunReport::parse(text) {
            // Accepted reports must survive a serialize/parse round trip.
            let again = survscore::report::RunReport::parse(&report.to_json()).unwrap();
            assert_eq!(again, report);
        }
    }
});
