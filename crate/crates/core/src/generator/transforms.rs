//! The twelve parameterized image transformations, in pipeline order.
//!
//! Every transform is the identity at intensity 0. Geometric transforms
//! resample with bilinear interpolation and edge-pixel padding.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Rotation,
    Scale,
    TranslateX,
    TranslateY,
    Shear,
    Blur,
    Noise,
    SaltPepper,
    Brightness,
    Contrast,
    Occlusion,
    BackgroundBlend,
}

pub const TRANSFORM_COUNT: usize = 12;

impl TransformKind {
    pub const ALL: [TransformKind; TRANSFORM_COUNT] = [
        TransformKind::Rotation,
        TransformKind::Scale,
        TransformKind::TranslateX,
        TransformKind::TranslateY,
        TransformKind::Shear,
        TransformKind::Blur,
        TransformKind::Noise,
        TransformKind::SaltPepper,
        TransformKind::Brightness,
        TransformKind::Contrast,
        TransformKind::Occlusion,
        TransformKind::BackgroundBlend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Rotation => "rotation",
            TransformKind::Scale => "scale",
            TransformKind::TranslateX => "translate_x",
            TransformKind::TranslateY => "translate_y",
            TransformKind::Shear => "shear",
            TransformKind::Blur => "blur",
            TransformKind::Noise => "noise",
            TransformKind::SaltPepper => "salt_pepper",
            TransformKind::Brightness => "brightness",
            TransformKind::Contrast => "contrast",
            TransformKind::Occlusion => "occlusion",
            TransformKind::BackgroundBlend => "background",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Default `(lower, upper)` bounds on the magnitude.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            TransformKind::Rotation => (0.0, 45.0),
            TransformKind::Scale => (0.0, 0.4),
            TransformKind::TranslateX | TransformKind::TranslateY => (0.0, 0.25),
            TransformKind::Shear => (0.0, 0.3),
            TransformKind::Blur => (0.0, 2.5),
            TransformKind::Noise => (0.0, 0.15),
            TransformKind::SaltPepper => (0.0, 0.05),
            TransformKind::Brightness => (0.0, 0.4),
            TransformKind::Contrast => (0.0, 0.5),
            TransformKind::Occlusion => (0.0, 0.2),
            TransformKind::BackgroundBlend => (0.0, 0.5),
        }
    }

    /// Symmetric transforms draw their intensity from `[-theta, theta]`,
    /// one-sided ones from `[0, theta]`.
    pub fn symmetric(self) -> bool {
        matches!(
            self,
            TransformKind::Rotation
                | TransformKind::Scale
                | TransformKind::TranslateX
                | TransformKind::TranslateY
                | TransformKind::Shear
                | TransformKind::Brightness
                | TransformKind::Contrast
        )
    }

    /// Maps a uniform draw `u in [0, 1)` to a per-sample intensity under magnitude `theta`.
    pub fn intensity(self, theta: f64, u: f64) -> f64 {
        if self.symmetric() {
            theta * (2.0 * u - 1.0)
        } else {
            theta * u
        }
    }

    /// Applies this transform at a concrete intensity. Intensity 0 returns the input unchanged.
    pub fn apply<R: Rng + ?Sized>(self, image: &Image, intensity: f64, rng: &mut R) -> Image {
        if intensity == 0.0 {
            return image.clone();
        }
        let cx = (image.width() as f64 - 1.0) / 2.0;
        let cy = (image.height() as f64 - 1.0) / 2.0;
        match self {
            TransformKind::Rotation => {
                let (sin, cos) = intensity.to_radians().sin_cos();
                // inverse map: rotate output coordinates by -angle
                warp(image, |x, y| {
                    let (dx, dy) = (x - cx, y - cy);
                    (cos * dx + sin * dy + cx, -sin * dx + cos * dy + cy)
                })
            }
            TransformKind::Scale => {
                let factor = 1.0 + intensity;
                warp(image, |x, y| ((x - cx) / factor + cx, (y - cy) / factor + cy))
            }
            TransformKind::TranslateX => {
                let shift = intensity * image.width() as f64;
                warp(image, |x, y| (x - shift, y))
            }
            TransformKind::TranslateY => {
                let shift = intensity * image.height() as f64;
                warp(image, |x, y| (x, y - shift))
            }
            TransformKind::Shear => warp(image, |x, y| (x + intensity * (y - cy), y)),
            TransformKind::Blur => gaussian_blur(image, intensity),
            TransformKind::Noise => {
                let mut out = image.clone();
                for v in out.pixels_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = (*v + intensity * z).clamp(0.0, 1.0);
                }
                out
            }
            TransformKind::SaltPepper => {
                let mut out = image.clone();
                let channels = out.channels();
                for px in out.pixels_mut().chunks_exact_mut(channels) {
                    if rng.random::<f64>() < intensity {
                        let value = if rng.random::<bool>() { 1.0 } else { 0.0 };
                        px.fill(value);
                    }
                }
                out
            }
            TransformKind::Brightness => {
                let mut out = image.clone();
                for v in out.pixels_mut() {
                    *v = (*v + intensity).clamp(0.0, 1.0);
                }
                out
            }
            TransformKind::Contrast => {
                let mut out = image.clone();
                let channels = out.channels();
                let n = (out.width() * out.height()) as f64;
                let means: Vec<f64> = (0..channels)
                    .map(|c| out.pixels().iter().skip(c).step_by(channels).sum::<f64>() / n)
                    .collect();
                let factor = 1.0 + intensity;
                for px in out.pixels_mut().chunks_exact_mut(channels) {
                    for (v, mean) in px.iter_mut().zip(&means) {
                        *v = ((*v - mean) * factor + mean).clamp(0.0, 1.0);
                    }
                }
                out
            }
            TransformKind::Occlusion => occlude(image, intensity, rng),
            TransformKind::BackgroundBlend => blend_background(image, intensity, rng),
        }
    }
}

/// Resamples `image` through an inverse coordinate map `(x, y) -> (src_x, src_y)`.
fn warp(image: &Image, map: impl Fn(f64, f64) -> (f64, f64)) -> Image {
    Image::from_fn(image.width(), image.height(), image.channels(), |x, y, c| {
        let (sx, sy) = map(x as f64, y as f64);
        image.sample_bilinear(sx, sy, c)
    })
    .expect("warp preserves shape")
}

fn gaussian_blur(image: &Image, sigma: f64) -> Image {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);

    let (w, h, ch) = (image.width() as isize, image.height() as isize, image.channels());
    let pass = |src: &Image, horizontal: bool| {
        Image::from_fn(src.width(), src.height(), ch, |x, y, c| {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let off = k as isize - radius;
                let (sx, sy) = if horizontal {
                    ((x as isize + off).clamp(0, w - 1), y as isize)
                } else {
                    (x as isize, (y as isize + off).clamp(0, h - 1))
                };
                acc += weight * src.get(sx as usize, sy as usize, c);
            }
            acc
        })
        .expect("blur preserves shape")
    };
    let horizontal = pass(image, true);
    pass(&horizontal, false)
}

fn occlude<R: Rng + ?Sized>(image: &Image, area_fraction: f64, rng: &mut R) -> Image {
    let (w, h) = (image.width(), image.height());
    let area = area_fraction * (w * h) as f64;
    let side_w = (area.sqrt().round() as usize).clamp(1, w);
    let side_h = ((area / side_w as f64).round() as usize).clamp(1, h);
    let x0 = rng.random_range(0..=w - side_w);
    let y0 = rng.random_range(0..=h - side_h);
    let fill: Vec<f64> = (0..image.channels()).map(|_| rng.random::<f64>()).collect();
    let mut out = image.clone();
    let channels = out.channels();
    for y in y0..y0 + side_h {
        for x in x0..x0 + side_w {
            let i = out.index(x, y, 0);
            out.pixels_mut()[i..i + channels].copy_from_slice(&fill);
        }
    }
    out
}

/// Blends the region outside a centered ellipse toward a random uniform
/// color, ramping from radius 0.7 (no change) to 1.0 (full `weight`).
fn blend_background<R: Rng + ?Sized>(image: &Image, weight: f64, rng: &mut R) -> Image {
    let color: Vec<f64> = (0..image.channels()).map(|_| rng.random::<f64>()).collect();
    let cx = (image.width() as f64 - 1.0) / 2.0;
    let cy = (image.height() as f64 - 1.0) / 2.0;
    let rx = image.width() as f64 / 2.0;
    let ry = image.height() as f64 / 2.0;
    Image::from_fn(image.width(), image.height(), image.channels(), |x, y, c| {
        let r = (((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2)).sqrt();
        let alpha = weight * ((r - 0.7) / 0.3).clamp(0.0, 1.0);
        (1.0 - alpha) * image.get(x, y, c) + alpha * color[c]
    })
    .expect("blend preserves shape")
}
