#![no_main]

use libfuzzer_sys::fuzz_target;
use sphlab::config::{parse_config_text, RunConfig};

fuzz_target!(|data: &[u8]| {
    if data.len() > 8192 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(pairs) = parse_config_text(text) else {
        return;
    };
    for command in ["area", "bubbles", "bounds", "liouville", "covering"] {
        let Ok(cfg) = RunConfig::resolve(command, &pairs, &[]) else {
            continue;
        };
        // A resolved config re-emits to a resolve fixed point.
        let emitted = cfg.emit();
        let reparsed = parse_config_text(&emitted).expect("emitted config must parse");
        let cfg2 = RunConfig::resolve(command, &reparsed, &[])
            .expect("emitted config must resolve");
        assert_eq!(emitted, cfg2.emit());
    }
});
