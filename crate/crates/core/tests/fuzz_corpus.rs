//! Replays the fuzz seed corpus, plus deterministic byte mutations of it,
//! through the same properties the fuzz targets check. Runs on stable.

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triplink::config::KeyValues;
use triplink::ingest::{parse_plt, read_assignment_csv_from, read_trips_csv_from, write_assignment_csv, write_trips_csv};

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds for {target}");
    files.into_iter().map(|f| fs::read(f).unwrap()).collect()
}

/// Seeds followed by mutants: byte flips, insertions of separator
/// characters, deletions and truncations.
fn inputs(target: &str, per_seed: usize) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let specials = b",\n\r\"#=-.:+ 0123456789eE";
    let mut out = Vec::new();
    for seed in corpus(target) {
        out.push(seed.clone());
        for _ in 0..per_seed {
            let mut m = seed.clone();
            for _ in 0..rng.gen_range(1..4) {
                let at = if m.is_empty() { 0 } else { rng.gen_range(0..m.len()) };
                match rng.gen_range(0..4) {
                    0 if !m.is_empty() => m[at] = rng.gen(),
                    1 => m.insert(at, specials[rng.gen_range(0..specials.len())]),
                    2 if !m.is_empty() => {
                        m.remove(at);
                    }
                    _ => m.truncate(at),
                }
            }
            out.push(m);
        }
    }
    out
}

#[test]
fn plt_seeds_and_mutants() {
    for data in inputs("plt", 300) {
        let text = String::from_utf8_lossy(&data);
        for clock in [chrono_tz::UTC, chrono_tz::Asia::Shanghai] {
            let parsed = parse_plt(&text, clock);
            assert!(parsed.points.windows(2).all(|w| w[0].time <= w[1].time));
        }
    }
}

#[test]
fn trips_csv_seeds_and_mutants() {
    let mut parsed = 0;
    for data in inputs("trips_csv", 300) {
        let Ok((ds, _)) = read_trips_csv_from(data.as_slice(), "fuzz") else {
            continue;
        };
        parsed += 1;
        let mut buf = Vec::new();
        write_trips_csv(&ds, &mut buf).unwrap();
        let (again, report) = read_trips_csv_from(buf.as_slice(), "round trip").unwrap();
        assert_eq!(report.rejected_trips, 0);
        assert_eq!(again, ds);
    }
    assert!(parsed > 0);
}

#[test]
fn config_seeds_and_mutants() {
    for data in inputs("config", 300) {
        if let Ok(text) = std::str::from_utf8(&data) {
            if let Ok(kv) = KeyValues::parse(text, "fuzz") {
                for k in kv.keys() {
                    let _ = kv.get::<f64>(k);
                    assert!(kv.get_str(k).is_some());
                }
            }
        }
    }
}

#[test]
fn assignment_csv_seeds_and_mutants() {
    let mut parsed = 0;
    for data in inputs("assignment_csv", 300) {
        let Ok(a) = read_assignment_csv_from(data.as_slice(), "fuzz") else {
            continue;
        };
        parsed += 1;
        let mut buf = Vec::new();
        write_assignment_csv(&a, &mut buf).unwrap();
        assert_eq!(read_assignment_csv_from(buf.as_slice(), "round trip").unwrap(), a);
    }
    assert!(parsed > 0);
}
