#![no_main]

use libfuzzer_sys::fuzz_target;
use maglev_gp::io::hp_record::{hp_record_to_string, parse_hp_record};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((spec, hp)) = parse_hp_record(text) {
            let (spec2, hp2) = parse_hp_record(&hp_record_to_string(spec, &hp)).unwrap();
            assert_eq!(spec2, spec);
            assert_eq!(hp2.named_values(spec), hp.named_values(spec));
        }
    }
});
