#![no_main]

use libfuzzer_sys::fuzz_target;
use sphlab::funcmodel::RationalFunc;

fuzz_target!(|data: &[u8]| {
    if data.len() > 4096 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(f) = RationalFunc::from_json_str(text) else {
        return;
    };
    // Canonical form is a fixed point of serialize -> parse.
    let canon = f.to_json_string();
    let again = RationalFunc::from_json_str(&canon).expect("canonical JSON must reparse");
    assert_eq!(canon, again.to_json_string());

    // Evaluation never panics and the derivative is never negative.
    for z in [
        num_complex::Complex64::new(0.0, 0.0),
        num_complex::Complex64::new(0.5, -0.25),
        num_complex::Complex64::new(-3.0, 40.0),
    ] {
        let j = f.jet(z);
        assert!(!(j.sph_deriv < 0.0));
    }
});
