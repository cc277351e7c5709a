#![no_main]

use libfuzzer_sys::fuzz_target;
use schauder_cli::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        let echo = serde_json::to_string(&cfg).expect("valid configs serialize");
        parse_config(&echo).expect("serialized config parses");
    }
});
