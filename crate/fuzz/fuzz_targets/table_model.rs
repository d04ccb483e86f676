#![no_main]

use std::collections::HashMap;

use adapthash::{AdaptiveTable, IdentityTable};
use libfuzzer_sys::fuzz_target;

// Differential fuzzing of the identity table against std's HashMap. Each
// 3-byte record is one operation; the key families are chosen to push the
// table through the whole hash-function ladder.
fuzz_target!(|data: &[u8]| {
    let mut table: IdentityTable<u64> = AdaptiveTable::new();
    let mut model: HashMap<u64, u64> = HashMap::new();
    for (step, rec) in data.chunks_exact(3).enumerate() {
        let op = rec[0];
        let raw = u64::from(u16::from_le_bytes([rec[1], rec[2]]));
        let key = if op & 0x80 == 0 {
            // near-sequential progression
            1_000_000 + raw
        } else {
            // entropy above bit 27 plus a parity bit: defeats the shift and
            // mid hashes, forcing fallback
            (raw << 28) | (raw & 1)
        };
        match op & 0x03 {
            0 | 1 => {
                let v = u64::from(op) << 8 | raw;
                assert_eq!(table.put(key, v), model.insert(key, v));
            }
            2 => assert_eq!(table.get(&key), model.get(&key)),
            _ => assert_eq!(table.del(&key), model.remove(&key)),
        }
        assert_eq!(table.len(), model.len());
        if step % 512 == 0 {
            if let Err(e) = table.validate() {
                panic!("structural invariant broken at step {step}: {e}");
            }
        }
    }
    table.validate().unwrap();
});
