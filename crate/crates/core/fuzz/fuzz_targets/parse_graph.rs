#![no_main]

use kuradyn::formats::{parse_graph, write_graph};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = parse_graph(text) {
        // Anything accepted must survive a write/parse cycle unchanged.
        let again = parse_graph(&write_graph(&g)).expect("written graph parses");
        assert_eq!(again, g);
    }
});
