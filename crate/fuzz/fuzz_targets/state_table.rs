#![no_main]

use libfuzzer_sys::fuzz_target;
use plate_ranging::typography::{StateTable, TypographyFractions};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = StateTable::parse(text, TypographyFractions::default());
    }
});
