#![no_main]

use libfuzzer_sys::fuzz_target;

use triplink::config::KeyValues;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(kv) = KeyValues::parse(text, "fuzz") {
            for k in kv.keys() {
                let _ = kv.get::<f64>(k);
                assert!(kv.get_str(k).is_some());
            }
        }
    }
});
