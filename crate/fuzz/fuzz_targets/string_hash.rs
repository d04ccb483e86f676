#![no_main]

use adapthash::hashers::{hash_string_limited, TRUNCATION_FLAG};
use libfuzzer_sys::fuzz_target;

// The limited string hash over arbitrary bytes and limits: total, flag
// correct, limit saturation, and bucketing blind to the flag bit.
fuzz_target!(|data: &[u8]| {
    if data.is_empty() {
        return;
    }
    let limit = usize::from(data[0]);
    let s = &data[1..];

    let h = hash_string_limited(s, limit);
    assert_eq!(h.truncated(), limit < s.len());
    assert_eq!(h, hash_string_limited(s, limit));

    let full = hash_string_limited(s, s.len());
    assert!(!full.truncated());
    assert_eq!(full, hash_string_limited(s, s.len() + 1000));

    for m_bits in [3u32, 8, 16] {
        let m = 1u64 << m_bits;
        let b = h.bucket(m);
        assert!(b < m);
        assert_eq!(b, (h.raw() & !TRUNCATION_FLAG) % m);
    }
});
