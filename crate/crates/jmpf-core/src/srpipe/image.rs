use std::path::Path;

use crate::{Error, Result};

/// Grayscale image with real-valued luminance samples in working range
/// [0, 255], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput("image dimensions must be >= 1"));
        }
        if samples.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for {}x{}",
                samples.len(),
                width,
                height
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Image("non-finite sample".into()));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.samples[y * self.width + x] = v;
    }

    /// Center crop to the largest size with both dimensions divisible by
    /// `factor`.
    pub fn center_crop_to_multiple(&self, factor: usize) -> Result<ImageGray> {
        let w = (self.width / factor) * factor;
        let h = (self.height / factor) * factor;
        if w == 0 || h == 0 {
            return Err(Error::OutOfRange(format!(
                "image {}x{} too small for scale {}",
                self.width, self.height, factor
            )));
        }
        let x0 = (self.width - w) / 2;
        let y0 = (self.height - h) / 2;
        let mut samples = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                samples.push(self.get(x0 + x, y0 + y));
            }
        }
        ImageGray::new(w, h, samples)
    }

    pub fn clamp_to_u8(&self) -> Vec<u8> {
        self.samples
            .iter()
            .map(|&v| v.clamp(0.0, 255.0).round() as u8)
            .collect()
    }
}

/// BT.601 studio-swing luma: `Y = 16 + (65.481 R + 128.553 G + 24.966 B)/255`.
pub fn to_luminance(rgb: &[u8], width: usize, height: usize) -> Result<ImageGray> {
    if rgb.len() != width * height * 3 {
        return Err(Error::ShapeMismatch(format!(
            "{} rgb bytes for {}x{}",
            rgb.len(),
            width,
            height
        )));
    }
    let samples = rgb
        .chunks_exact(3)
        .map(|px| {
            let (r, g, b) = (px[0] as f64, px[1] as f64, px[2] as f64);
            16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0
        })
        .collect();
    ImageGray::new(width, height, samples)
}

/// BT.601 studio-swing chroma planes.
pub fn to_chroma(rgb: &[u8], width: usize, height: usize) -> Result<(ImageGray, ImageGray)> {
    if rgb.len() != width * height * 3 {
        return Err(Error::ShapeMismatch("rgb buffer size".into()));
    }
    let mut cb = Vec::with_capacity(width * height);
    let mut cr = Vec::with_capacity(width * height);
    for px in rgb.chunks_exact(3) {
        let (r, g, b) = (px[0] as f64, px[1] as f64, px[2] as f64);
        cb.push(128.0 + (-37.797 * r - 74.203 * g + 112.0 * b) / 255.0);
        cr.push(128.0 + (112.0 * r - 93.786 * g - 18.214 * b) / 255.0);
    }
    Ok((
        ImageGray::new(width, height, cb)?,
        ImageGray::new(width, height, cr)?,
    ))
}

/// Inverse of the BT.601 studio-swing transform, clamped to 8-bit.
pub fn ycbcr_to_rgb(y: &ImageGray, cb: &ImageGray, cr: &ImageGray) -> Result<Vec<u8>> {
    if y.width != cb.width || y.height != cb.height || y.width != cr.width || y.height != cr.height
    {
        return Err(Error::ShapeMismatch("ycbcr plane sizes differ".into()));
    }
    let mut rgb = Vec::with_capacity(y.samples.len() * 3);
    for i in 0..y.samples.len() {
        let yy = 1.164383 * (y.samples[i] - 16.0);
        let pb = cb.samples[i] - 128.0;
        let pr = cr.samples[i] - 128.0;
        let r = yy + 1.596027 * pr;
        let g = yy - 0.391762 * pb - 0.812968 * pr;
        let b = yy + 2.017232 * pb;
        for v in [r, g, b] {
            rgb.push(v.clamp(0.0, 255.0).round() as u8);
        }
    }
    Ok(rgb)
}

/// PSNR in dB over the region with `border_crop` pixels removed on every
/// side; identical regions report positive infinity.
pub fn psnr(a: &ImageGray, b: &ImageGray, border_crop: usize) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch(format!(
            "psnr: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let min_dim = a.width.min(a.height);
    if border_crop * 2 >= min_dim {
        return Err(Error::OutOfRange(format!(
            "border_crop {} too large for {}x{}",
            border_crop, a.width, a.height
        )));
    }
    let mut acc = 0.0;
    let mut count = 0usize;
    for y in border_crop..a.height - border_crop {
        for x in border_crop..a.width - border_crop {
            let d = a.get(x, y) - b.get(x, y);
            acc += d * d;
            count += 1;
        }
    }
    let mse = acc / count as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Binary PGM (P5, maxval 255) writer.
pub fn save_pgm(path: &Path, img: &ImageGray) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    bytes.extend(img.clamp_to_u8());
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Binary PGM (P5, maxval 255) reader.
pub fn load_pgm(path: &Path) -> Result<ImageGray> {
    let bytes = std::fs::read(path)?;
    let mut pos = 0usize;
    let mut fields = Vec::new();
    // header: magic, width, height, maxval, separated by whitespace/comments
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Image(format!("{}: truncated pgm header", path.display())));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::Image(format!("{}: not a P5 pgm", path.display())));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Image(format!("{}: bad pgm header", path.display())))
    };
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Image(format!(
            "{}: unsupported pgm maxval {maxval}",
            path.display()
        )));
    }
    pos += 1; // single whitespace after maxval
    let data = &bytes[pos..];
    if data.len() < w * h {
        return Err(Error::Image(format!("{}: truncated pgm data", path.display())));
    }
    ImageGray::new(w, h, data[..w * h].iter().map(|&b| b as f64).collect())
}

/// Load an 8-bit PNG or PGM as luminance: grayscale samples are taken as-is,
/// RGB is converted with the BT.601 studio-swing transform.
pub fn load_luma(path: &Path) -> Result<ImageGray> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        return load_pgm(path);
    }
    let img = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    match img {
        image::DynamicImage::ImageLuma8(g) => ImageGray::new(
            g.width() as usize,
            g.height() as usize,
            g.pixels().map(|p| p.0[0] as f64).collect(),
        ),
        other => {
            let rgb = other.to_rgb8();
            to_luminance(rgb.as_raw(), rgb.width() as usize, rgb.height() as usize)
        }
    }
}

/// Load an image as 8-bit RGB, if it has color channels.
pub fn load_rgb(path: &Path) -> Result<Option<(usize, usize, Vec<u8>)>> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        return Ok(None);
    }
    let img = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
    match img {
        image::DynamicImage::ImageLuma8(_) | image::DynamicImage::ImageLuma16(_) => Ok(None),
        other => {
            let rgb = other.to_rgb8();
            Ok(Some((
                rgb.width() as usize,
                rgb.height() as usize,
                rgb.into_raw(),
            )))
        }
    }
}

/// Save as PGM or grayscale PNG depending on the extension.
pub fn save_gray(path: &Path, img: &ImageGray) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        return save_pgm(path, img);
    }
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.clamp_to_u8())
        .expect("buffer size matches");
    buf.save(path)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// Save an RGB buffer as PNG.
pub fn save_rgb(path: &Path, width: usize, height: usize, rgb: Vec<u8>) -> Result<()> {
    let buf = image::RgbImage::from_raw(width as u32, height as u32, rgb)
        .ok_or_else(|| Error::Image("rgb buffer size mismatch".into()))?;
    buf.save(path)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}
