#![no_main]

use std::collections::HashMap;

use adapthash::{AdaptiveTable, StringTable};
use libfuzzer_sys::fuzz_target;

// Differential fuzzing of the string table, with key shapes that exercise
// the truncation-limit policy: arbitrary short keys plus keys wrapped in a
// long shared affix so their distinguishing bytes start out un-hashed.
fuzz_target!(|data: &[u8]| {
    let mut table: StringTable<u64> = AdaptiveTable::new();
    let mut model: HashMap<Vec<u8>, u64> = HashMap::new();
    let mut rest = data;
    let mut step = 0usize;
    while rest.len() >= 2 {
        let (op, len) = (rest[0], usize::from(rest[1] % 24));
        rest = &rest[2..];
        let take = len.min(rest.len());
        let body = &rest[..take];
        rest = &rest[take..];
        let key: Vec<u8> = if op & 0x80 == 0 {
            body.to_vec()
        } else {
            let mut k = Vec::with_capacity(64 + body.len());
            k.extend_from_slice(&[b'p'; 32]);
            k.extend_from_slice(body);
            k.extend_from_slice(&[b's'; 32]);
            k
        };
        match op & 0x03 {
            0 | 1 => {
                let v = u64::from(op) + step as u64;
                assert_eq!(table.put(key.clone(), v), model.insert(key, v));
            }
            2 => assert_eq!(table.get(&key), model.get(&key)),
            _ => assert_eq!(table.del(&key), model.remove(&key)),
        }
        if step % 256 == 0 {
            if let Err(e) = table.validate() {
                panic!("structural invariant broken at step {step}: {e}");
            }
        }
        step += 1;
    }
    table.validate().unwrap();
    assert_eq!(table.iter().count(), model.len());
});
