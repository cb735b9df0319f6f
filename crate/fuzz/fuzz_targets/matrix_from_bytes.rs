#![no_main]

use libfuzzer_sys::fuzz_target;
use sfv::io::{matrix_from_bytes, matrix_to_bytes};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = matrix_from_bytes(data) {
        // anything accepted must re-encode to the same bytes
        assert_eq!(matrix_to_bytes(m.as_ref()), data);
    }
});
