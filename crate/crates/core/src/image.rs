use crate::error::{GolError, Result};

/// A row-major, channel-interleaved image with pixel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(GolError::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(GolError::InvalidImage(format!(
                "unsupported channel count {channels} (expected 1 or 3)"
            )));
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(GolError::DimensionMismatch {
                context: "image pixel buffer",
                expected,
                found: pixels.len(),
            });
        }
        if let Some(pos) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(GolError::InvalidImage(format!(
                "pixel {pos} has value {} outside [0, 1]",
                pixels[pos]
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from `f(x, y, channel)`; values are clamped into `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    pixels.push(f(x, y, c).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(width, height, channels, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Mutable access for in-crate transforms. Callers must keep values in `[0, 1]`.
    pub(crate) fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.pixels[self.index(x, y, c)]
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers at
    /// integers). Coordinates outside the image read the nearest edge pixel.
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0, c) * (1.0 - fx) + self.get(x1, y0, c) * fx;
        let bottom = self.get(x0, y1, c) * (1.0 - fx) + self.get(x1, y1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Bilinear resize to `width x height`, aligning pixel centers.
    pub fn resize(&self, width: usize, height: usize) -> Result<Image> {
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        Image::from_fn(width, height, self.channels, |x, y, c| {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            let src_y = (y as f64 + 0.5) * sy - 0.5;
            self.sample_bilinear(src_x, src_y, c)
        })
    }

    /// Crops the inclusive rectangle `(x1, y1)..=(x2, y2)`.
    pub fn crop(&self, x1: usize, y1: usize, x2: usize, y2: usize) -> Result<Image> {
        if x1 > x2 || y1 > y2 || x2 >= self.width || y2 >= self.height {
            return Err(GolError::InvalidImage(format!(
                "crop ({x1},{y1})-({x2},{y2}) outside {}x{} image",
                self.width, self.height
            )));
        }
        Image::from_fn(x2 - x1 + 1, y2 - y1 + 1, self.channels, |x, y, c| {
            self.get(x1 + x, y1 + y, c)
        })
    }

    /// Converts to the requested channel count (luma average or replication).
    pub fn with_channels(&self, channels: usize) -> Result<Image> {
        match (self.channels, channels) {
            (a, b) if a == b => Ok(self.clone()),
            (3, 1) => Image::from_fn(self.width, self.height, 1, |x, y, _| {
                (self.get(x, y, 0) + self.get(x, y, 1) + self.get(x, y, 2)) / 3.0
            }),
            (1, 3) => Image::from_fn(self.width, self.height, 3, |x, y, _| self.get(x, y, 0)),
            (_, b) => Err(GolError::InvalidImage(format!("cannot convert to {b} channels"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(Image::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, 1, vec![-0.1]).is_err());
        assert!(Image::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(Image::new(2, 1, 1, vec![0.5]).is_err());
        assert!(Image::new(1, 1, 2, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn bilinear_hits_pixel_centers_exactly() {
        let img = Image::from_fn(3, 2, 1, |x, y, _| (x + 3 * y) as f64 / 10.0).unwrap();
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(img.sample_bilinear(x as f64, y as f64, 0), img.get(x, y, 0));
            }
        }
        assert!((img.sample_bilinear(0.5, 0.0, 0) - 0.05).abs() < 1e-12);
        // edge padding
        assert_eq!(img.sample_bilinear(-4.0, 0.0, 0), img.get(0, 0, 0));
    }

    #[test]
    fn crop_is_inclusive() {
        let img = Image::from_fn(5, 5, 1, |x, y, _| (x * 5 + y) as f64 / 25.0).unwrap();
        let c = img.crop(1, 2, 3, 4).unwrap();
        assert_eq!((c.width(), c.height()), (3, 3));
        assert_eq!(c.get(0, 0, 0), img.get(1, 2, 0));
        assert!(img.crop(1, 1, 5, 2).is_err());
    }

    #[test]
    fn resize_of_constant_image_is_constant() {
        let img = Image::filled(7, 5, 3, 0.25).unwrap();
        let r = img.resize(16, 16).unwrap();
        assert!(r.pixels().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }
}
