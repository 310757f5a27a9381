use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::error::{GolError, Result};
use crate::image::Image;

/// Decodes a PNG, PGM or PPM file. Grayscale files give one channel, colour
/// files three (alpha is dropped); 8-bit values map to `v / 255`.
pub fn load_image(path: &Path) -> Result<Image> {
    let decoded = image::open(path).map_err(|source| GolError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    from_dynamic(&decoded)
}

pub fn from_dynamic(decoded: &DynamicImage) -> Result<Image> {
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, bytes) = if decoded.color().has_color() {
        (3, decoded.to_rgb8().into_raw())
    } else {
        (1, decoded.to_luma8().into_raw())
    };
    Image::new(width, height, channels, bytes.into_iter().map(|b| f64::from(b) / 255.0).collect())
}

/// 8-bit quantization `round(v * 255)`.
pub fn to_bytes(image: &Image) -> Vec<u8> {
    image.pixels().iter().map(|&v| (v * 255.0).round() as u8).collect()
}

/// Writes `image` as 8-bit PNG, PGM or PPM depending on the file extension.
/// PGM requires one channel and PPM three.
pub fn save_image(image: &Image, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let color = match image.channels() {
        1 => ExtendedColorType::L8,
        _ => ExtendedColorType::Rgb8,
    };
    let subtype = match (ext.as_str(), image.channels()) {
        ("png", _) => None,
        ("pgm", 1) => Some(PnmSubtype::Graymap(SampleEncoding::Binary)),
        ("ppm", 3) => Some(PnmSubtype::Pixmap(SampleEncoding::Binary)),
        _ => {
            return Err(GolError::config(format!(
                "cannot save a {}-channel image as '{}' (use .png, .pgm for 1 channel, .ppm for 3)",
                image.channels(),
                path.display()
            )))
        }
    };
    let file = File::create(path).map_err(|e| GolError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let bytes = to_bytes(image);
    let (w, h) = (image.width() as u32, image.height() as u32);
    let written = match subtype {
        None => PngEncoder::new(&mut writer).write_image(&bytes, w, h, color),
        Some(subtype) => PnmEncoder::new(&mut writer)
            .with_subtype(subtype)
            .write_image(&bytes, w, h, color),
    };
    written.map_err(|source| GolError::Image {
        path: path.to_path_buf(),
        source,
    })?;
    std::io::Write::flush(&mut writer).map_err(|e| GolError::io(path, e))
}
