#![no_main]

use adapthash::keygen::parse_corpus;
use libfuzzer_sys::fuzz_target;

// The corpus loader over arbitrary file contents: never panics, never emits
// empty keys, never emits keys containing the delimiter.
fuzz_target!(|data: &[u8]| {
    let lines = parse_corpus(data);
    for line in &lines {
        assert!(!line.is_empty());
        assert!(!line.contains(&b'\n'));
    }
    // Parsing is a fixpoint: re-serializing and re-parsing changes nothing.
    let mut rejoined = Vec::new();
    for line in &lines {
        rejoined.extend_from_slice(line);
        rejoined.push(b'\n');
    }
    assert_eq!(parse_corpus(&rejoined), lines);
});
