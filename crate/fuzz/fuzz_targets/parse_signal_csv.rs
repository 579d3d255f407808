#![no_main]

use chirplike::io::{parse_signal_csv, write_signal_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // anything that parses must survive a write/read round trip unchanged
    if let Ok(y) = parse_signal_csv(data) {
        let mut buf = Vec::new();
        write_signal_csv(&mut buf, &y).unwrap();
        assert_eq!(parse_signal_csv(buf.as_slice()).unwrap(), y);
    }
});
