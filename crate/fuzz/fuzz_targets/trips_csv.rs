#![no_main]

use libfuzzer_sys::fuzz_target;

use triplink::ingest::{read_trips_csv_from, write_trips_csv};

fuzz_target!(|data: &[u8]| {
    let Ok((ds, _)) = read_trips_csv_from(data, "fuzz") else {
        return;
    };
    // Whatever parses must survive a write/read round trip unchanged.
    let mut buf = Vec::new();
    write_trips_csv(&ds, &mut buf).unwrap();
    let (again, report) = read_trips_csv_from(buf.as_slice(), "round trip").unwrap();
    assert_eq!(report.rejected_trips, 0);
    assert_eq!(again, ds);
});
