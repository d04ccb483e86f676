#![no_main]

use adapthash::bench::{emit_tsv, parse_tsv};
use libfuzzer_sys::fuzz_target;

// The TSV reader over arbitrary bytes: never panics, and anything it accepts
// survives an emit/parse round trip (NaN-free inputs compare exactly).
fuzz_target!(|data: &[u8]| {
    let Ok(records) = parse_tsv(data) else { return };
    let mut buf = Vec::new();
    emit_tsv(&records, None, &mut buf).unwrap();
    let again = parse_tsv(buf.as_slice()).unwrap();
    assert_eq!(again.len(), records.len());
    let finite = records.iter().all(|r| {
        [r.putns, r.getns, r.missns, r.delns, r.regret, r.rndregret]
            .iter()
            .all(|v| !v.is_nan())
    });
    if finite {
        assert_eq!(again, records);
    }
});
