#![no_main]

use kuradyn::formats::{parse_trajectory, write_trajectory};
use kuradyn::jump::{EdgeConfiguration, WalkerState};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = parse_trajectory::<WalkerState>(text) {
        let again = parse_trajectory::<WalkerState>(&write_trajectory(&t)).expect("written dump parses");
        assert_eq!(again, t);
    }
    if let Ok(t) = parse_trajectory::<EdgeConfiguration>(text) {
        let again = parse_trajectory::<EdgeConfiguration>(&write_trajectory(&t)).expect("written dump parses");
        assert_eq!(again, t);
    }
});
