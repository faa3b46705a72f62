use super::image::ImageGray;
use crate::{Error, Result};

/// Catmull-Rom cubic convolution kernel (a = -0.5).
fn kernel(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        (1.5 * x - 2.5) * x * x + 1.0
    } else if x < 2.0 {
        ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0
    } else {
        0.0
    }
}

/// Resample one scanline with half-pixel-centered mapping and edge clamp.
fn resample_line(src: &[f64], dst: &mut [f64]) {
    let n_in = src.len();
    let n_out = dst.len();
    let ratio = n_in as f64 / n_out as f64;
    let clamp = |i: i64| src[i.clamp(0, n_in as i64 - 1) as usize];
    for (o, out) in dst.iter_mut().enumerate() {
        let pos = (o as f64 + 0.5) * ratio - 0.5;
        let base = pos.floor();
        let frac = pos - base;
        let base = base as i64;
        let mut acc = 0.0;
        for tap in -1..=2i64 {
            acc += clamp(base + tap) * kernel(frac - tap as f64);
        }
        *out = acc;
    }
}

/// Separable bicubic resize: Catmull-Rom kernel, half-pixel-centered
/// coordinates, clamped borders.
pub fn bicubic_resize(img: &ImageGray, out_w: usize, out_h: usize) -> Result<ImageGray> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::OutOfRange("zero-size bicubic output".into()));
    }

    // horizontal pass
    let mut horiz = vec![0.0; out_w * img.height];
    let mut line = vec![0.0; out_w];
    for y in 0..img.height {
        let row = &img.samples[y * img.width..(y + 1) * img.width];
        resample_line(row, &mut line);
        horiz[y * out_w..(y + 1) * out_w].copy_from_slice(&line);
    }

    // vertical pass
    let mut out = vec![0.0; out_w * out_h];
    let mut col_in = vec![0.0; img.height];
    let mut col_out = vec![0.0; out_h];
    for x in 0..out_w {
        for y in 0..img.height {
            col_in[y] = horiz[y * out_w + x];
        }
        resample_line(&col_in, &mut col_out);
        for y in 0..out_h {
            out[y * out_w + x] = col_out[y];
        }
    }
    ImageGray::new(out_w, out_h, out)
}

/// Downscale by an integer factor followed by upscale back to the original
/// size; the canonical degradation model for training-pair construction.
pub fn bicubic_round_trip(img: &ImageGray, scale: usize) -> Result<ImageGray> {
    let lr = bicubic_resize(img, img.width / scale, img.height / scale)?;
    bicubic_resize(&lr, img.width, img.height)
}
