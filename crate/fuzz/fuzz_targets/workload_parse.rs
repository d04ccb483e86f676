#![no_main]

use adapthash::keygen::{parse_workload, WorkloadKind};
use libfuzzer_sys::fuzz_target;

// The workload grammar over arbitrary text: never panics, and accepted specs
// carry validated parameters.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(kind) = parse_workload(text) else {
        return;
    };
    match kind {
        WorkloadKind::Prog { .. }
        | WorkloadKind::RndProg { .. }
        | WorkloadKind::FloatBits
        | WorkloadKind::Paged { .. } => {}
        WorkloadKind::Strings { .. } => {}
    }
});
