//! Generalization energies: per-class measures relating synthetic samples
//! to the regularization samples of the same class.

use serde::{Deserialize, Serialize};

use crate::classifier::BaseClassifier;
use crate::dataset::{RegularizationSet, SyntheticDataset};
use crate::error::{GolError, Result};
use crate::features::{featurize, FeatureVector, DEFAULT_BINS};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyKind {
    Bhattacharyya,
    /// `||e - x||_q` with norm order `q >= 1`.
    QNorm(f64),
    LogLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
}

impl Aggregation {
    fn reduce(self, total: f64, pairs: usize) -> f64 {
        match self {
            Aggregation::Mean => total / pairs as f64,
            Aggregation::Sum => total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMode {
    pub kind: EnergyKind,
    pub aggregation: Aggregation,
    /// Histogram bins per channel for the feature vectors.
    pub bins: usize,
}

impl Default for EnergyMode {
    fn default() -> Self {
        Self {
            kind: EnergyKind::Bhattacharyya,
            aggregation: Aggregation::Mean,
            bins: DEFAULT_BINS,
        }
    }
}

impl EnergyMode {
    pub fn validate(&self) -> Result<()> {
        if let EnergyKind::QNorm(q) = self.kind {
            check_q(q)?;
        }
        if self.bins < 2 {
            return Err(GolError::config(format!("histogram needs at least 2 bins, got {}", self.bins)));
        }
        Ok(())
    }
}

/// Objective vector `z = (J_1, ..., J_K, a)`; length `K + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    values: Vec<f64>,
}

impl ObjectiveVector {
    pub fn new(energies: Vec<f64>, accuracy: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(GolError::config(format!("accuracy {accuracy} outside [0, 1]")));
        }
        let mut values = energies;
        values.push(accuracy);
        Ok(Self { values })
    }

    pub fn energies(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }

    pub fn accuracy(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    /// All components, energies first.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

fn check_pair(a: &FeatureVector, b: &FeatureVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(GolError::DimensionMismatch {
            context: "feature vector length",
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 && !q.is_nan() {
        Ok(())
    } else {
        Err(GolError::config(format!("norm order q = {q} must be >= 1")))
    }
}

/// Bhattacharyya distance between two histograms:
/// `sqrt(1 - sum_v sqrt(s_v x_v) / sqrt(mean(s) mean(x) N^2))`, radicand clamped to `[0, 1]`.
pub fn bhattacharyya_term(s: &FeatureVector, x: &FeatureVector) -> Result<f64> {
    check_pair(s, x)?;
    let n = s.len() as f64;
    let overlap: f64 = s.values().iter().zip(x.values()).map(|(a, b)| (a * b).sqrt()).sum();
    let radicand = 1.0 - overlap / (s.mean() * x.mean() * n * n).sqrt();
    Ok(radicand.clamp(0.0, 1.0).sqrt())
}

fn pairwise(
    synthetic: &[FeatureVector],
    regularization: &[FeatureVector],
    aggregation: Aggregation,
    mut term: impl FnMut(&FeatureVector, &FeatureVector) -> Result<f64>,
) -> Result<f64> {
    if synthetic.is_empty() {
        return Err(GolError::Empty("synthetic feature vectors"));
    }
    if regularization.is_empty() {
        return Err(GolError::Empty("regularization feature vectors"));
    }
    let mut total = 0.0;
    for e in regularization {
        for x in synthetic {
            total += term(e, x)?;
        }
    }
    Ok(aggregation.reduce(total, synthetic.len() * regularization.len()))
}

/// Bhattacharyya energy over all (regularization, synthetic) pairs of one class.
pub fn bhattacharyya_energy(
    synthetic: &[FeatureVector],
    regularization: &[FeatureVector],
    aggregation: Aggregation,
) -> Result<f64> {
    for (what, set) in [("synthetic vector", synthetic), ("regularization vector", regularization)] {
        if let Some(index) = set.iter().position(|v| v.mean() <= 0.0) {
            return Err(GolError::ZeroVector { what, index });
        }
    }
    pairwise(synthetic, regularization, aggregation, bhattacharyya_term)
}

/// `q`-norm energy over all pairs of one class; the additive constant is 0.
pub fn qnorm_energy(
    synthetic: &[FeatureVector],
    regularization: &[FeatureVector],
    q: f64,
    aggregation: Aggregation,
) -> Result<f64> {
    check_q(q)?;
    pairwise(synthetic, regularization, aggregation, |e, x| {
        check_pair(e, x)?;
        let diffs = e.values().iter().zip(x.values()).map(|(a, b)| (a - b).abs());
        Ok(if q.is_infinite() {
            diffs.fold(0.0, f64::max)
        } else {
            diffs.map(|d| d.powf(q)).sum::<f64>().powf(1.0 / q)
        })
    })
}

/// Mean log-probability the classifier assigns to class `class` over its
/// regularization samples; always `<= 0`.
pub fn loglik_energy<'a>(
    classifier: &BaseClassifier,
    regularization: impl IntoIterator<Item = &'a Image>,
    class: usize,
) -> Result<f64> {
    if !classifier.is_trained() {
        return Err(GolError::Untrained);
    }
    if class >= classifier.classes() {
        return Err(GolError::config(format!(
            "class {class} out of range for a {}-class classifier",
            classifier.classes()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for image in regularization {
        let p = classifier.predict_proba(image)?;
        total += p[class].max(f64::MIN_POSITIVE).ln();
        count += 1;
    }
    if count == 0 {
        return Err(GolError::Empty("regularization samples for class"));
    }
    Ok(total / count as f64)
}

fn class_features<'a>(images: impl Iterator<Item = &'a Image>, bins: usize) -> Result<Vec<FeatureVector>> {
    images.map(|img| featurize(img, bins)).collect()
}

/// Computes `(J_1, ..., J_K, a)`: one energy per class under `mode`, and the
/// classifier's accuracy on `accuracy_set`.
pub fn evaluate_objectives(
    synthetic: &SyntheticDataset,
    regularization: &RegularizationSet,
    classifier: &BaseClassifier,
    accuracy_set: &SyntheticDataset,
    mode: &EnergyMode,
) -> Result<ObjectiveVector> {
    mode.validate()?;
    synthetic.ensure_coverage()?;
    let k = synthetic.class_count();
    if regularization.class_count() != k {
        return Err(GolError::DimensionMismatch {
            context: "regularization classes",
            expected: k,
            found: regularization.class_count(),
        });
    }
    let mut energies = Vec::with_capacity(k);
    for class in 0..k {
        let energy = match mode.kind {
            EnergyKind::LogLikelihood => loglik_energy(classifier, regularization.class(class), class),
            kind => {
                let syn = class_features(synthetic.class(class), mode.bins)?;
                let reg = class_features(regularization.class(class), mode.bins)?;
                if reg.is_empty() {
                    return Err(GolError::config(format!("no regularization samples for class {class}")));
                }
                match kind {
                    EnergyKind::Bhattacharyya => bhattacharyya_energy(&syn, &reg, mode.aggregation),
                    EnergyKind::QNorm(q) => qnorm_energy(&syn, &reg, q, mode.aggregation),
                    EnergyKind::LogLikelihood => unreachable!(),
                }
            }
        }?;
        energies.push(energy);
    }
    ObjectiveVector::new(energies, classifier.accuracy(accuracy_set)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{Architecture, Network};
    use crate::dataset::LabeledSample;
    use proptest::prelude::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_vectors_have_zero_distance() {
        let s = fv(&[3.0, 1.0, 0.0, 4.0]);
        assert!(bhattacharyya_term(&s, &s).unwrap() < 1e-9);
        assert!(bhattacharyya_energy(&[s.clone()], &[s], Aggregation::Mean).unwrap() < 1e-9);
    }

    #[test]
    fn disjoint_support_has_unit_distance() {
        let t = bhattacharyya_term(&fv(&[1.0, 0.0]), &fv(&[0.0, 1.0])).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_case() {
        // s = [4, 0], x = [1, 1]: sqrt(1 - 2 / sqrt(8))
        let t = bhattacharyya_term(&fv(&[4.0, 0.0]), &fv(&[1.0, 1.0])).unwrap();
        assert!((t - 0.5412).abs() < 1e-4);
        assert!((t - (1.0 - 2.0 / 8f64.sqrt()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bhattacharyya_errors() {
        let err = bhattacharyya_energy(&[fv(&[1.0, 1.0])], &[fv(&[0.0, 0.0])], Aggregation::Mean);
        assert!(matches!(err, Err(GolError::ZeroVector { what: "regularization vector", index: 0 })));
        assert!(bhattacharyya_term(&fv(&[1.0]), &fv(&[1.0, 2.0])).is_err());
        assert!(bhattacharyya_energy(&[], &[fv(&[1.0])], Aggregation::Mean).is_err());
    }

    #[test]
    fn aggregation_sum_scales_with_pairs() {
        let syn = [fv(&[1.0, 0.0]), fv(&[1.0, 0.0])];
        let reg = [fv(&[0.0, 1.0]), fv(&[0.0, 2.0]), fv(&[0.0, 5.0])];
        let mean = bhattacharyya_energy(&syn, &reg, Aggregation::Mean).unwrap();
        let sum = bhattacharyya_energy(&syn, &reg, Aggregation::Sum).unwrap();
        assert!((mean - 1.0).abs() < 1e-12);
        assert!((sum - 6.0).abs() < 1e-12);
    }

    #[test]
    fn qnorm_closed_forms() {
        let zero = fv(&[0.0, 0.0]);
        assert_eq!(qnorm_energy(&[fv(&[3.0, 4.0])], &[zero.clone()], 2.0, Aggregation::Mean).unwrap(), 5.0);
        assert_eq!(qnorm_energy(&[fv(&[2.0, 4.0])], &[fv(&[1.0, 2.0])], 1.0, Aggregation::Mean).unwrap(), 3.0);
        assert_eq!(qnorm_energy(&[zero.clone()], &[zero.clone()], 3.0, Aggregation::Mean).unwrap(), 0.0);
        assert!(matches!(
            qnorm_energy(&[zero.clone()], &[zero], 0.5, Aggregation::Mean),
            Err(GolError::Config(_))
        ));
    }

    fn uniform_classifier(k: usize) -> BaseClassifier {
        BaseClassifier::from_network(Network::zeros(&Architecture::parse("2x2x1", k).unwrap()).unwrap())
    }

    #[test]
    fn loglik_of_uniform_classifier() {
        let c = uniform_classifier(4);
        let img = Image::filled(2, 2, 1, 0.3).unwrap();
        let j = loglik_energy(&c, [&img, &img], 2).unwrap();
        assert!((j - 0.25f64.ln()).abs() < 1e-12);
        assert!((j + 1.3863).abs() < 1e-4);
    }

    #[test]
    fn loglik_of_confident_classifier_is_zero() {
        // softmax-only 1x1 net with an overwhelming bias toward class 1
        let arch = Architecture::parse("1x1x1", 2).unwrap();
        let net = Network::from_params(&arch, vec![0.0, 0.0, -1e3, 1e3]).unwrap();
        let c = BaseClassifier::from_network(net);
        let img = Image::filled(1, 1, 1, 0.5).unwrap();
        assert_eq!(loglik_energy(&c, [&img], 1).unwrap(), 0.0);
    }

    #[test]
    fn loglik_matches_direct_recomputation() {
        let arch = Architecture::parse("3x3x1:fc4", 3).unwrap();
        let net = Network::initialized(&arch, 99).unwrap();
        let c = BaseClassifier::from_network(net.clone());
        let imgs: Vec<Image> = (0..3)
            .map(|i| Image::from_fn(3, 3, 1, |x, y, _| ((x + 2 * y + i) % 5) as f64 / 4.0).unwrap())
            .collect();
        // oracle: explicit forward pass, log-sum-exp by hand
        let oracle: f64 = imgs
            .iter()
            .map(|img| {
                let z = net.logits(&net.input_tensor(img).unwrap());
                let lse = z.iter().map(|v| v.exp()).sum::<f64>().ln();
                z[1] - lse
            })
            .sum::<f64>()
            / 3.0;
        let j = loglik_energy(&c, imgs.iter(), 1).unwrap();
        assert!((j - oracle).abs() < 1e-12);
        assert!(j <= 0.0);
        let untrained = BaseClassifier::untrained(&arch, 0).unwrap();
        assert!(matches!(loglik_energy(&untrained, imgs.iter(), 1), Err(GolError::Untrained)));
    }

    fn dataset_of(images: &[(Image, usize)], k: usize) -> SyntheticDataset {
        SyntheticDataset::new(
            images.iter().map(|(i, l)| LabeledSample::new(i.clone(), *l)).collect(),
            k,
            None,
        )
        .unwrap()
    }

    #[test]
    fn objectives_for_identical_data_and_perfect_classifier() {
        let dark = Image::filled(1, 1, 1, 0.1).unwrap();
        let light = Image::filled(1, 1, 1, 0.9).unwrap();
        let data = dataset_of(&[(dark.clone(), 0), (light.clone(), 1)], 2);
        let reg = RegularizationSet::new(data.samples().to_vec(), 2).unwrap();
        let arch = Architecture::parse("1x1x1", 2).unwrap();
        let c = BaseClassifier::from_network(Network::from_params(&arch, vec![-1.0, 1.0, 0.5, -0.5]).unwrap());
        let z = evaluate_objectives(&data, &reg, &c, &data, &EnergyMode::default()).unwrap();
        assert_eq!(z.len(), 3);
        assert!(z.energies().iter().all(|e| e.abs() < 1e-9));
        assert_eq!(z.accuracy(), 1.0);
    }

    #[test]
    fn objectives_match_per_class_recomputation() {
        let mut rng = crate::rng::stream_rng(5, 0);
        use rand::Rng;
        let mut rand_img = || Image::from_fn(4, 4, 1, |_, _, _| rng.random::<f64>()).unwrap();
        let syn: Vec<(Image, usize)> = (0..9).map(|i| (rand_img(), i % 3)).collect();
        let reg: Vec<(Image, usize)> = (0..6).map(|i| (rand_img(), i % 3)).collect();
        let synthetic = dataset_of(&syn, 3);
        let regularization = RegularizationSet::new(dataset_of(&reg, 3).into_samples(), 3).unwrap();
        let c = BaseClassifier::from_network(
            Network::zeros(&Architecture::parse("4x4x1", 3).unwrap()).unwrap(),
        );
        let mode = EnergyMode {
            bins: 8,
            ..EnergyMode::default()
        };
        let z = evaluate_objectives(&synthetic, &regularization, &c, &synthetic, &mode).unwrap();
        for k in 0..3 {
            // oracle: explicit double loop of the distance formula per class
            let feats = |set: &[(Image, usize)]| -> Vec<Vec<f64>> {
                set.iter()
                    .filter(|(_, l)| *l == k)
                    .map(|(i, _)| featurize(i, 8).unwrap().values().to_vec())
                    .collect()
            };
            let (s_all, x_all) = (feats(&reg), feats(&syn));
            let mut total = 0.0;
            for s in &s_all {
                for x in &x_all {
                    let n = s.len() as f64;
                    let sm = s.iter().sum::<f64>() / n;
                    let xm = x.iter().sum::<f64>() / n;
                    let bc: f64 = s.iter().zip(x).map(|(a, b)| (a * b).sqrt()).sum();
                    total += (1.0 - bc / (sm * xm * n * n).sqrt()).max(0.0).sqrt();
                }
            }
            let expected = total / (s_all.len() * x_all.len()) as f64;
            assert!((z.energies()[k] - expected).abs() < 1e-12);
        }
        // uniform classifier predicts class 0 everywhere
        assert!((z.accuracy() - 3.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn objectives_require_class_coverage() {
        let img = Image::filled(1, 1, 1, 0.5).unwrap();
        let data = dataset_of(&[(img.clone(), 0), (img.clone(), 0)], 2);
        let reg = RegularizationSet::new(vec![LabeledSample::new(img, 1)], 2).unwrap();
        let c = uniform_classifier(2);
        assert!(matches!(
            evaluate_objectives(&data, &reg, &c, &data, &EnergyMode::default()),
            Err(GolError::MissingClass(1))
        ));
    }

    proptest! {
        #[test]
        fn bhattacharyya_term_is_bounded_and_symmetric(
            a in prop::collection::vec(0.0f64..10.0, 6),
            b in prop::collection::vec(0.0f64..10.0, 6),
        ) {
            prop_assume!(a.iter().sum::<f64>() > 0.0 && b.iter().sum::<f64>() > 0.0);
            let (a, b) = (fv(&a), fv(&b));
            let ab = bhattacharyya_term(&a, &b).unwrap();
            let ba = bhattacharyya_term(&b, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - ba).abs() < 1e-12);
        }

        #[test]
        fn qnorm_energy_is_nonnegative(
            a in prop::collection::vec(0.0f64..10.0, 4),
            b in prop::collection::vec(0.0f64..10.0, 4),
            q in 1.0f64..4.0,
        ) {
            let j = qnorm_energy(&[fv(&a)], &[fv(&b)], q, Aggregation::Mean).unwrap();
            prop_assert!(j >= 0.0);
            prop_assert_eq!(j == 0.0, a == b);
        }
    }
}
