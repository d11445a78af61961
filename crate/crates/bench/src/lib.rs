//! Fixtures shared by the criterion benchmarks in `benches/`.

use hierent::RasterImage;

/// Banded pseudo-random texture, so segmentation has real work to do.
pub fn texture(size: usize) -> RasterImage {
    let mut state = 0x2545_F491_4F6C_DD1Du64;
    let mut noise = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 64) as f64
    };
    RasterImage::from_fn(size, size, |x, y| {
        let band = ((x / 37 + y / 23) % 4) as f64 * 48.0;
        [
            band + noise(),
            255.0 - band - noise(),
            (x ^ y) as f64 % 128.0 + noise(),
        ]
    })
    .expect("texture channels stay within [0, 255]")
}
