#![no_main]

use libfuzzer_sys::fuzz_target;
use plate_ranging::raster::pgm;
use plate_ranging::segment::segment_characters;

fuzz_target!(|data: &[u8]| {
    let Ok(img) = pgm::decode(data) else { return };
    // keep iterations fast
    if img.width() * img.height() > 96 * 96 {
        return;
    }
    if let Ok(cs) = segment_characters(&img) {
        assert_eq!(cs.heights.len(), cs.n);
        assert!(cs.heights.iter().all(|h| h.is_finite() && *h > 0.0));
    }
});
