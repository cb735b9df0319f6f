#![no_main]

use libfuzzer_sys::fuzz_target;
use sfv::io::Manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Manifest::parse(text) {
        let again = Manifest::parse(&m.to_text()).expect("written manifest must parse");
        assert_eq!(again.to_text(), m.to_text());
        for (k, _) in m.entries() {
            let _ = m.get_f64_list(k);
            let _ = m.get_usize(k);
        }
    }
});
