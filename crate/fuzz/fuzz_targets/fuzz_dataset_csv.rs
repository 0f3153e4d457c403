#![no_main]

use libfuzzer_sys::fuzz_target;
use maglev_gp::io::dataset_csv::{dataset_to_csv, parse_dataset_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(dataset) = parse_dataset_csv(text) {
            // Whatever parses must survive a lossless round trip.
            let again = parse_dataset_csv(&dataset_to_csv(&dataset)).unwrap();
            assert_eq!(again, dataset);
        }
    }
});
