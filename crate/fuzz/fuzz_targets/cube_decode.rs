#![no_main]

use libfuzzer_sys::fuzz_target;
use ssnmf::data::{decode_cube, encode_cube};

fuzz_target!(|data: &[u8]| {
    if let Ok(image) = decode_cube(data) {
        // Anything accepted re-encodes to a cube that decodes to the same values.
        let bytes = encode_cube(&image).expect("decoded cube encodes");
        let again = decode_cube(&bytes).expect("encoded cube decodes");
        assert_eq!(
            (again.height(), again.width(), again.bands()),
            (image.height(), image.width(), image.bands())
        );
        for (a, b) in again.data().iter().zip(image.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
});
