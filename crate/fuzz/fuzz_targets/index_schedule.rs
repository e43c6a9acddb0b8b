#![no_main]

use libfuzzer_sys::fuzz_target;
use sphlab::config::parse_indices;

fuzz_target!(|data: &[u8]| {
    if data.len() > 256 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(idx) = parse_indices(text) else {
        return;
    };
    assert!(!idx.is_empty());
    assert!(idx.len() <= 4097, "span guard breached: {} entries", idx.len());
    assert!(
        idx.windows(2).all(|w| w[0] < w[1]),
        "schedule not strictly increasing: {idx:?}"
    );
});
