#![no_main]

use libfuzzer_sys::fuzz_target;
use maglev_gp::io::model::parse_model_json;
use maglev_gp::InputVector;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = parse_model_json(text) {
            // A loaded model must evaluate without panicking.
            let w = InputVector::new([0.02, 0.05, 1e-5, -1e-5, 0.0, 1e-4, 0.0, -1e-4]);
            let _ = model.predict(&w);
        }
    }
});
