#![no_main]

use affmin::geometry::Simplex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Simplex::from_json_str(text) {
        let c = s.centroid();
        let _ = s.barycentric(&c);
        let _ = s.lattice(2);
    }
});
