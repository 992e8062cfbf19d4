#![no_main]

use libfuzzer_sys::fuzz_target;

use triplink::ingest::parse_plt;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    for clock in [chrono_tz::UTC, chrono_tz::Asia::Shanghai] {
        let parsed = parse_plt(&text, clock);
        assert!(parsed.points.windows(2).all(|w| w[0].time <= w[1].time));
    }
});
