#![no_main]

use affmin::convexity::{classify_regions, Homography};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = Homography::from_json_str(text) {
        let _ = h.apply([0.25, -0.75]);
        let _ = h.inverse();
        let _ = classify_regions(&h);
    }
});
