//! Gaussian blob datasets with controllable class sizes and overlap.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    /// Rows per class; class `i` is named `class{i}`.
    pub class_sizes: Vec<usize>,
    pub n_features: usize,
    /// Centers are drawn uniformly from `[-center_box, center_box]` per axis.
    pub center_box: f64,
    /// Standard deviation of every class around its center.
    pub std: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(class_sizes: &[usize], n_features: usize, center_box: f64, std: f64, seed: u64) -> Self {
        BlobSpec {
            class_sizes: class_sizes.to_vec(),
            n_features,
            center_box,
            std,
            seed,
        }
    }

    /// Class centers, deterministic in the seed.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.class_sizes.len())
            .map(|_| {
                (0..self.n_features)
                    .map(|_| rng.random_range(-self.center_box..=self.center_box))
                    .collect()
            })
            .collect()
    }
}

/// Draws `spec.class_sizes[c]` rows around each center, shuffled. `draw`
/// selects an independent sample from the same centers.
pub fn make_blobs(spec: &BlobSpec, draw: u64) -> Result<Dataset> {
    if spec.n_features == 0 || spec.class_sizes.is_empty() {
        return Err(Error::InvalidParams("blobs need classes and features".to_string()));
    }
    if !(spec.std > 0.0 && spec.std.is_finite() && spec.center_box.is_finite()) {
        return Err(Error::InvalidParams("blob spread must be positive and finite".to_string()));
    }
    let centers = spec.centers();
    let noise = Normal::new(0.0, spec.std).expect("std is positive");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ draw.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
    for (c, (&size, center)) in spec.class_sizes.iter().zip(&centers).enumerate() {
        for _ in 0..size {
            rows.push((center.iter().map(|m| m + noise.sample(&mut rng)).collect(), c));
        }
    }
    rows.shuffle(&mut rng);
    let labels = rows.iter().map(|r| r.1).collect();
    let features = Matrix::from_rows(&rows.iter().map(|r| r.0.as_slice()).collect::<Vec<_>>())?;
    Dataset::new(
        features,
        labels,
        (0..spec.class_sizes.len()).map(|c| format!("class{c}")).collect(),
        (0..spec.n_features).map(|f| format!("x{f}")).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::class_frequencies;

    #[test]
    fn sizes_and_determinism() {
        let spec = BlobSpec::new(&[30, 10, 5], 3, 10.0, 1.0, 7);
        let a = make_blobs(&spec, 0).unwrap();
        assert_eq!(a.n_rows(), 45);
        assert_eq!(class_frequencies(&a).into_values().collect::<Vec<_>>(), [30, 10, 5]);
        assert_eq!(a, make_blobs(&spec, 0).unwrap());
        assert_ne!(a, make_blobs(&spec, 1).unwrap());
    }
}
