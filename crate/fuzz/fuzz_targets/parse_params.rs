#![no_main]

use chirplike::io::{format_params, parse_params};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&counts, rest)) = data.split_first() else {
        return;
    };
    let (p, q) = ((counts & 0x0f) as usize, (counts >> 4) as usize);
    if let Ok(s) = std::str::from_utf8(rest) {
        if let Ok(m) = parse_params(s, p, q) {
            assert_eq!((m.p(), m.q()), (p, q));
            assert_eq!(parse_params(&format_params(&m), p, q).unwrap(), m);
        }
    }
});
