#![no_main]

use libfuzzer_sys::fuzz_target;
use ssnmf::data::table::{read_endmembers, write_endmembers};

fuzz_target!(|data: &[u8]| {
    if let Ok((m, bands)) = read_endmembers(data) {
        assert_eq!(bands.len(), m.bands());
        let mut out = Vec::new();
        write_endmembers(&m, Some(&bands), &mut out).expect("write to memory");
        let (again, bands_again) = read_endmembers(out.as_slice()).expect("written table parses");
        assert_eq!(bands_again, bands);
        assert_eq!(again.data(), m.data());
    }
});
