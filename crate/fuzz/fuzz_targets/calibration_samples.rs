#![no_main]

use libfuzzer_sys::fuzz_target;
use plate_ranging::camera::{calibrate_focal, parse_calibration_samples};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(samples) = parse_calibration_samples(text) {
        let f = calibrate_focal(&samples).unwrap();
        assert!(f > 0.0);
    }
});
