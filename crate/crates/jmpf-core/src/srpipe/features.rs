use super::image::ImageGray;
use crate::{Error, Result};

/// First- and second-order derivative stencils applied horizontally and
/// vertically: [-1, 0, 1], its transpose, [1, 0, -2, 0, 1], its transpose.
const FIRST_ORDER: [f64; 3] = [-1.0, 0.0, 1.0];
const SECOND_ORDER: [f64; 5] = [1.0, 0.0, -2.0, 0.0, 1.0];

fn correlate(img: &ImageGray, taps: &[f64], horizontal: bool) -> ImageGray {
    let half = (taps.len() / 2) as i64;
    let (w, h) = (img.width as i64, img.height as i64);
    let mut out = vec![0.0; img.samples.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                let off = k as i64 - half;
                let (sx, sy) = if horizontal { (x + off, y) } else { (x, y + off) };
                let sx = sx.clamp(0, w - 1) as usize;
                let sy = sy.clamp(0, h - 1) as usize;
                acc += t * img.get(sx, sy);
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    ImageGray {
        width: img.width,
        height: img.height,
        samples: out,
    }
}

/// The four gradient maps, same size as the input, clamped borders,
/// correlation orientation (stencils applied as written, not flipped).
pub fn extract_features(img: &ImageGray) -> Result<[ImageGray; 4]> {
    if img.width < SECOND_ORDER.len() || img.height < SECOND_ORDER.len() {
        return Err(Error::OutOfRange(format!(
            "image {}x{} smaller than the filter support",
            img.width, img.height
        )));
    }
    Ok([
        correlate(img, &FIRST_ORDER, true),
        correlate(img, &FIRST_ORDER, false),
        correlate(img, &SECOND_ORDER, true),
        correlate(img, &SECOND_ORDER, false),
    ])
}
