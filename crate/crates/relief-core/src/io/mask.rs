//! Binary mask images: any 8-bit grayscale or paletted image, foreground
//! where the luma sample exceeds 127.

use std::path::Path;

use crate::error::Result;
use crate::field::MaskField;

pub fn read_mask(path: &Path) -> Result<MaskField> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut data = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            data.push(img.get_pixel(u as u32, v as u32).0[0] > 127);
        }
    }
    MaskField::new(w, h, data)
}
