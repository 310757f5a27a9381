use crate::error::{GolError, Result};
use crate::image::Image;

/// Default histogram resolution per channel for energy features.
pub const DEFAULT_BINS: usize = 64;

/// A non-negative feature vector compared by the generalization energies.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(GolError::config(format!(
                "feature value {v} is not a finite non-negative number"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().sum::<f64>() / self.0.len() as f64
        }
    }
}

/// Per-channel intensity histogram, channels concatenated (`bins * channels` values).
///
/// A pixel value `v` falls into bin `min(floor(v * bins), bins - 1)`.
pub fn featurize(image: &Image, bins: usize) -> Result<FeatureVector> {
    if bins < 2 {
        return Err(GolError::config(format!("histogram needs at least 2 bins, got {bins}")));
    }
    let channels = image.channels();
    let mut hist = vec![0.0; bins * channels];
    for px in image.pixels().chunks_exact(channels) {
        for (c, &v) in px.iter().enumerate() {
            let bin = ((v * bins as f64) as usize).min(bins - 1);
            hist[c * bins + bin] += 1.0;
        }
    }
    Ok(FeatureVector(hist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn black_and_white_single_bin() {
        let black = Image::filled(2, 2, 1, 0.0).unwrap();
        let white = Image::filled(2, 2, 1, 1.0).unwrap();
        assert_eq!(featurize(&black, 4).unwrap().values(), &[4.0, 0.0, 0.0, 0.0]);
        assert_eq!(featurize(&white, 4).unwrap().values(), &[0.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn rejects_degenerate_bins() {
        let img = Image::filled(2, 2, 1, 0.0).unwrap();
        assert!(matches!(featurize(&img, 1), Err(GolError::Config(_))));
        assert!(featurize(&img, 0).is_err());
    }

    #[test]
    fn matches_counting_oracle_on_random_image() {
        let mut rng = crate::rng::stream_rng(42, 0);
        let pixels: Vec<f64> = (0..8 * 8).map(|_| rng.random::<f64>()).collect();
        let img = Image::new(8, 8, 1, pixels.clone()).unwrap();
        let bins = 16;
        // oracle: for each bin, count pixels whose value lies in [b/bins, (b+1)/bins)
        let oracle: Vec<f64> = (0..bins)
            .map(|b| {
                let lo = b as f64 / bins as f64;
                let hi = (b + 1) as f64 / bins as f64;
                pixels
                    .iter()
                    .filter(|&&v| v >= lo && (v < hi || (b == bins - 1 && v <= 1.0)))
                    .count() as f64
            })
            .collect();
        assert_eq!(featurize(&img, bins).unwrap().values(), oracle.as_slice());
    }

    #[test]
    fn mass_per_channel_equals_pixel_count() {
        let img = Image::from_fn(5, 3, 3, |x, y, c| ((x + y + c) % 7) as f64 / 6.0).unwrap();
        let f = featurize(&img, 8).unwrap();
        assert_eq!(f.len(), 24);
        for c in 0..3 {
            let mass: f64 = f.values()[c * 8..(c + 1) * 8].iter().sum();
            assert_eq!(mass, 15.0);
        }
    }
}
