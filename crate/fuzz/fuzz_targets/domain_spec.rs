#![no_main]

use libfuzzer_sys::fuzz_target;
use sphlab::config::{domain_to_text, parse_domain};

fuzz_target!(|data: &[u8]| {
    if data.len() > 512 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(d) = parse_domain(text) else {
        return;
    };
    // Accepted domains are valid and re-emit to a parse fixed point.
    d.validate().expect("accepted domain must validate");
    let canon = domain_to_text(&d);
    let again = parse_domain(&canon).expect("canonical text must reparse");
    assert_eq!(canon, domain_to_text(&again));
});
