//! Raster images at floating precision, file I/O and Gaussian pre-smoothing.

use std::fs::File;
use std::io::{BufWriter, ErrorKind};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ImageEncoder, ImageError, RgbImage};

use crate::error::{Error, Result};

/// A `width × height` grid of RGB triples stored row-major.
///
/// Channel values live in `[0, 255]` but are kept as `f64` so that smoothed
/// images are not re-quantized before segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} pixels for a {width}x{height} image, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels
            .iter()
            .flatten()
            .find(|v| !(0.0..=255.0).contains(*v))
        {
            return Err(Error::invalid(format!(
                "channel value {bad} outside [0, 255]"
            )));
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn from_rgb8(img: &RgbImage) -> Self {
        let pixels = img
            .pixels()
            .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
            .collect();
        RasterImage {
            width: img.width() as usize,
            height: img.height() as usize,
            pixels,
        }
    }

    /// Rounds every channel to the nearest 8-bit value.
    pub fn to_rgb8(&self) -> RgbImage {
        let mut out = RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in out.pixels_mut().zip(&self.pixels) {
            for c in 0..3 {
                dst[c] = src[c].round().clamp(0.0, 255.0) as u8;
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    /// Saves as PNG or binary PPM depending on the file extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("png") => write_png(&self.to_rgb8(), path),
            Some("ppm") => write_ppm(&self.to_rgb8(), path),
            _ => Err(Error::invalid(format!(
                "{}: unsupported output format (expected .png or .ppm)",
                path.display()
            ))),
        }
    }
}

/// Decodes a JPEG, PNG or PPM file.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let decoded = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| match e {
            ImageError::IoError(source) if source.kind() != ErrorKind::UnexpectedEof => {
                Error::io(path, source)
            }
            other => Error::Decode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })?;
    Ok(RasterImage::from_rgb8(&decoded.to_rgb8()))
}

pub fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    image::codecs::png::PngEncoder::new(BufWriter::new(file))
        .write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::Encode(e.to_string()))
}

pub fn write_ppm(img: &RgbImage, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::Encode(e.to_string()))
}

/// Normalized 1-D Gaussian weights for offsets `-r..=r`, `r = ⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut weights: Vec<f64> = (-radius..=radius)
        .map(|d| (-((d * d) as f64) / denom).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

/// Separable Gaussian blur with clamp-to-edge borders.
///
/// `sigma == 0` returns an exact copy.
pub fn gaussian_smooth(img: &RasterImage, sigma: f64) -> Result<RasterImage> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid(format!(
            "sigma must be a finite nonnegative number, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (img.width, img.height);

    let mut rows = vec![[0.0; 3]; w * h];
    for y in 0..h {
        let line = &img.pixels[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (i, k) in kernel.iter().enumerate() {
                let sx = (x as isize + i as isize - radius).clamp(0, w as isize - 1) as usize;
                let p = line[sx];
                acc[0] += k * p[0];
                acc[1] += k * p[1];
                acc[2] += k * p[2];
            }
            rows[y * w + x] = acc;
        }
    }

    let mut out = vec![[0.0; 3]; w * h];
    for y in 0..h {
        for (i, k) in kernel.iter().enumerate() {
            let sy = (y as isize + i as isize - radius).clamp(0, h as isize - 1) as usize;
            let src = &rows[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                d[0] += k * s[0];
                d[1] += k * s[1];
                d[2] += k * s[2];
            }
        }
    }
    // Rounding can push a convex combination a hair outside [0, 255].
    for p in out.iter_mut().flatten() {
        *p = p.clamp(0.0, 255.0);
    }
    Ok(RasterImage {
        width: w,
        height: h,
        pixels: out,
    })
}
