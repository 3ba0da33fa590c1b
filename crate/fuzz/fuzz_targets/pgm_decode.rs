#![no_main]

use libfuzzer_sys::fuzz_target;
use plate_ranging::raster::pgm;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = pgm::decode(data) {
        assert_eq!(pgm::decode(&pgm::encode(&img)).unwrap(), img);
    }
});
