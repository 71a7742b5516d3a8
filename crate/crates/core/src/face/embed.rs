//! Face embeddings and the seeded random-projection reference embedder.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::image::{FaceImage, FACE_PIXELS};
use crate::error::FaceError;
use crate::synth::rng;

pub const EMBEDDING_DIM: usize = 128;
/// Tolerance on the unit norm of an embedding.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A unit-length 128-d vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FaceEmbedding(Vec<f64>);

impl FaceEmbedding {
    /// Scales `v` to unit length.
    pub fn normalize(v: Vec<f64>) -> Result<Self, FaceError> {
        if v.len() != EMBEDDING_DIM {
            return Err(FaceError::WrongDimension(v.len()));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(FaceError::NotNormalized(norm));
        }
        Ok(Self(v.into_iter().map(|x| x / norm).collect()))
    }

    /// Accepts `v` only if it is already unit length.
    pub fn from_unit(v: Vec<f64>) -> Result<Self, FaceError> {
        if v.len() != EMBEDDING_DIM {
            return Err(FaceError::WrongDimension(v.len()));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(FaceError::NotNormalized(norm));
        }
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &FaceEmbedding) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for FaceEmbedding {
    type Error = FaceError;
    fn try_from(v: Vec<f64>) -> Result<Self, FaceError> {
        Self::from_unit(v)
    }
}

impl From<FaceEmbedding> for Vec<f64> {
    fn from(e: FaceEmbedding) -> Self {
        e.0
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Anything that turns a face crop into an embedding.
pub trait FaceEmbedder {
    fn embed(&self, image: &FaceImage) -> Result<FaceEmbedding, FaceError>;
}

/// `normalize(P (x - mean(x)))` with `P` a 128x4096 standard Gaussian matrix
/// drawn from `seed`. Removing the image mean first keeps unrelated images
/// near-orthogonal; without it every non-negative image shares a large common
/// component and all embeddings crowd together.
#[derive(Debug, Clone)]
pub struct ProjectionEmbedder {
    seed: u64,
    projection: Vec<f64>,
}

impl ProjectionEmbedder {
    pub fn new(seed: u64) -> Self {
        let mut r = rng(seed, 600);
        let projection = (0..EMBEDDING_DIM * FACE_PIXELS)
            .map(|_| StandardNormal.sample(&mut r))
            .collect();
        Self { seed, projection }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl FaceEmbedder for ProjectionEmbedder {
    fn embed(&self, image: &FaceImage) -> Result<FaceEmbedding, FaceError> {
        let px = image.pixels();
        let mean = px.iter().sum::<f64>() / px.len() as f64;
        let centered: Vec<f64> = px.iter().map(|p| p - mean).collect();
        if centered.iter().all(|c| c.abs() < 1e-12) {
            return Err(FaceError::DegenerateImage);
        }
        let v = self
            .projection
            .chunks_exact(FACE_PIXELS)
            .map(|row| row.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect();
        FaceEmbedding::normalize(v)
    }
}

/// Convenience wrapper: embed with a freshly built projection for `seed`.
pub fn embed_image(image: &FaceImage, embedder_seed: u64) -> Result<FaceEmbedding, FaceError> {
    ProjectionEmbedder::new(embedder_seed).embed(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face::image::{random_image, synthetic_face, FACE_SIDE};

    #[test]
    fn deterministic_and_unit_norm() {
        let e = ProjectionEmbedder::new(7);
        let img = synthetic_face(3, 1);
        let a = e.embed(&img).unwrap();
        assert_eq!(a, e.embed(&img).unwrap());
        assert_eq!(a, embed_image(&img, 7).unwrap());
        let n = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() <= NORM_TOLERANCE);
        assert_ne!(a, embed_image(&img, 8).unwrap());
    }

    #[test]
    fn independent_random_images_are_far_apart() {
        let e = ProjectionEmbedder::new(1);
        let mut sq = 0.0;
        for i in 0..100 {
            let d = e
                .embed(&random_image(2 * i))
                .unwrap()
                .distance(&e.embed(&random_image(2 * i + 1)).unwrap());
            assert!(d > 1.0, "pair {i}: {d}");
            sq += d * d / 100.0;
        }
        assert!((sq - 2.0).abs() < 0.1, "mean squared distance {sq}");
    }

    #[test]
    fn takes_cluster_by_identity() {
        let e = ProjectionEmbedder::new(1);
        for id in 0..10 {
            let a = e.embed(&synthetic_face(id, 0)).unwrap();
            assert!(a.distance(&e.embed(&synthetic_face(id, 1)).unwrap()) < 0.4);
            assert!(a.distance(&e.embed(&synthetic_face(id + 100, 0)).unwrap()) > 0.8);
        }
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = FaceImage::new(FACE_SIDE, FACE_SIDE, vec![0.4; FACE_PIXELS], "flat").unwrap();
        assert!(matches!(
            ProjectionEmbedder::new(1).embed(&img),
            Err(FaceError::DegenerateImage)
        ));
    }

    #[test]
    fn unit_checks() {
        assert!(matches!(
            FaceEmbedding::normalize(vec![1.0; 3]),
            Err(FaceError::WrongDimension(3))
        ));
        assert!(matches!(
            FaceEmbedding::normalize(vec![0.0; 128]),
            Err(FaceError::NotNormalized(_))
        ));
        assert!(matches!(
            FaceEmbedding::from_unit(vec![1.0; 128]),
            Err(FaceError::NotNormalized(_))
        ));
    }
}
