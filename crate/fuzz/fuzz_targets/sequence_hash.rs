#![no_main]

use adapthash::hashers::hash_sequence_limited;
use libfuzzer_sys::fuzz_target;

// Prefix-limited sequence hashing: the flag tracks truncation, and items
// past the limit can never influence the value.
fuzz_target!(|data: &[u8]| {
    if data.is_empty() {
        return;
    }
    let limit = usize::from(data[0] % 16);
    let items: Vec<u64> = data[1..]
        .chunks(4)
        .map(|c| {
            let mut w = [0u8; 4];
            w[..c.len()].copy_from_slice(c);
            u64::from(u32::from_le_bytes(w))
        })
        .collect();

    let h = hash_sequence_limited(&items, limit);
    assert_eq!(h.truncated(), limit < items.len());

    if items.len() > limit {
        let mut tampered = items.clone();
        for x in tampered[limit..].iter_mut() {
            *x ^= 0xdead_beef;
        }
        assert_eq!(h, hash_sequence_limited(&tampered, limit));
    }
});
