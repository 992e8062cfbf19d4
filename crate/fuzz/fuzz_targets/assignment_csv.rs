#![no_main]

use libfuzzer_sys::fuzz_target;

use triplink::ingest::{read_assignment_csv_from, write_assignment_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(a) = read_assignment_csv_from(data, "fuzz") else {
        return;
    };
    let mut buf = Vec::new();
    write_assignment_csv(&a, &mut buf).unwrap();
    assert_eq!(read_assignment_csv_from(buf.as_slice(), "round trip").unwrap(), a);
});
