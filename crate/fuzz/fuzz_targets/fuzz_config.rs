#![no_main]

use libfuzzer_sys::fuzz_target;
use maglev_gp::io::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(doc) = parse_config(text) {
            // Typed extraction may reject values but must never panic.
            let _ = doc.seed();
            let _ = doc.scenario(0);
            let _ = doc.campaign(0);
            let _ = doc.trajectory();
        }
    }
});
