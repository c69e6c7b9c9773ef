#![no_main]

use affmin::warp::Image;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = Image::decode_ppm(data) {
        assert_eq!(img.data().len(), img.width() * img.height() * img.channels());
        let again = Image::decode_ppm(&img.encode_ppm()).expect("encoded image decodes");
        assert_eq!(again, img);
    }
});
