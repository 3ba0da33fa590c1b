#![no_main]

use libfuzzer_sys::fuzz_target;
use plate_ranging::sim::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sc) = Scenario::parse(text) {
        assert_eq!(Scenario::parse(&sc.to_toml()).unwrap(), sc);
    }
});
