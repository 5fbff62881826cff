//! Full-covariance Gaussian mixtures over RGB colors.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 5;
pub const DEFAULT_REGULARIZATION: f64 = 1e-5;

const HALF_LOG_TWO_PI_CUBED: f64 = 2.756_815_599_614_018; // 1.5 ln(2π)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub weight: f64,
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    #[serde(skip)]
    inverse: Matrix3<f64>,
    /// `-ln(weight) + 0.5 ln det(2π Σ)`, the sample-independent part of the cost.
    #[serde(skip)]
    offset: f64,
}

impl Gaussian {
    pub fn new(weight: f64, mean: Vector3<f64>, covariance: Matrix3<f64>) -> Result<Self> {
        let chol = covariance.cholesky().ok_or(Error::SingularGmm)?;
        let log_det = chol.ln_determinant();
        let inverse = chol.inverse();
        let offset = -weight.ln() + 0.5 * log_det + HALF_LOG_TWO_PI_CUBED;
        if !offset.is_finite() || !inverse.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularGmm);
        }
        Ok(Self { weight, mean, covariance, inverse, offset })
    }

    /// `-ln(weight · N(z; mean, covariance))`.
    pub fn cost(&self, z: &Vector3<f64>) -> f64 {
        let d = z - self.mean;
        self.offset + 0.5 * d.dot(&(self.inverse * d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Gaussian>", into = "Vec<Gaussian>")]
pub struct Gmm {
    components: Vec<Gaussian>,
}

impl TryFrom<Vec<Gaussian>> for Gmm {
    type Error = Error;

    // Deserialized components carry no cached terms; rebuild them.
    fn try_from(raw: Vec<Gaussian>) -> Result<Self> {
        let components = raw
            .into_iter()
            .map(|g| Gaussian::new(g.weight, g.mean, g.covariance))
            .collect::<Result<Vec<_>>>()?;
        if components.is_empty() {
            return Err(Error::SingularGmm);
        }
        Ok(Self { components })
    }
}

impl From<Gmm> for Vec<Gaussian> {
    fn from(g: Gmm) -> Self {
        g.components
    }
}

impl Gmm {
    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    /// Cheapest component for `z` and its cost `-ln π_k - ln N_k(z)`.
    pub fn best_component(&self, z: &Vector3<f64>) -> (usize, f64) {
        self.components
            .iter()
            .enumerate()
            .map(|(k, g)| (k, g.cost(z)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("a mixture has at least one component")
    }

    pub fn cost(&self, z: &Vector3<f64>) -> f64 {
        self.best_component(z).1
    }

    /// Maximum-likelihood fit of one Gaussian per assignment label, with
    /// `regularization · I` added to every covariance. Empty labels are dropped.
    pub fn fit(samples: &[Vector3<f64>], assignment: &[usize], k: usize, regularization: f64) -> Result<Self> {
        debug_assert_eq!(samples.len(), assignment.len());
        let mut count = vec![0usize; k];
        let mut sum = vec![Vector3::zeros(); k];
        for (z, &a) in samples.iter().zip(assignment) {
            count[a] += 1;
            sum[a] += z;
        }
        let means: Vec<Vector3<f64>> =
            sum.iter().zip(&count).map(|(s, &n)| if n > 0 { s / n as f64 } else { *s }).collect();
        let mut scatter = vec![Matrix3::zeros(); k];
        for (z, &a) in samples.iter().zip(assignment) {
            let d = z - means[a];
            scatter[a] += d * d.transpose();
        }
        let total = samples.len() as f64;
        let components = (0..k)
            .filter(|&i| count[i] > 0)
            .map(|i| {
                let cov = scatter[i] / count[i] as f64 + Matrix3::identity() * regularization;
                Gaussian::new(count[i] as f64 / total, means[i], cov)
            })
            .collect::<Result<Vec<_>>>()?;
        if components.is_empty() {
            return Err(Error::SingularGmm);
        }
        Ok(Self { components })
    }

    /// Deterministic k-means initialization followed by a fit.
    pub fn initialize(samples: &[Vector3<f64>], k: usize, regularization: f64) -> Result<Self> {
        let assignment = kmeans(samples, k, 10);
        Self::fit(samples, &assignment, k, regularization)
    }
}

/// Lloyd's k-means with farthest-point seeding from the sample mean.
pub fn kmeans(samples: &[Vector3<f64>], k: usize, iterations: usize) -> Vec<usize> {
    if samples.is_empty() || k == 0 {
        return vec![0; samples.len()];
    }
    let mean = samples.iter().sum::<Vector3<f64>>() / samples.len() as f64;
    let mut centers: Vec<Vector3<f64>> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; samples.len()];
    let mut anchor = mean;
    for _ in 0..k {
        let mut far = (0, -1.0);
        for (i, z) in samples.iter().enumerate() {
            nearest[i] = nearest[i].min((z - anchor).norm_squared());
            if nearest[i] > far.1 {
                far = (i, nearest[i]);
            }
        }
        if !centers.is_empty() && far.1 <= 0.0 {
            break;
        }
        anchor = samples[far.0];
        centers.push(anchor);
    }
    let mut assignment = vec![0usize; samples.len()];
    for _ in 0..iterations {
        let mut changed = false;
        for (i, z) in samples.iter().enumerate() {
            let best = (0..centers.len())
                .min_by(|&a, &b| (z - centers[a]).norm_squared().total_cmp(&(z - centers[b]).norm_squared()))
                .unwrap_or(0);
            changed |= best != assignment[i];
            assignment[i] = best;
        }
        let mut sum = vec![Vector3::zeros(); centers.len()];
        let mut n = vec![0usize; centers.len()];
        for (z, &a) in samples.iter().zip(&assignment) {
            sum[a] += z;
            n[a] += 1;
        }
        for c in 0..centers.len() {
            if n[c] > 0 {
                centers[c] = sum[c] / n[c] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    assignment
}

/// Foreground and background color models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPair {
    pub foreground: Gmm,
    pub background: Gmm,
}
