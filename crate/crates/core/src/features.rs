//! Sparse linear features: tile coding, aggregation one-hots, raw vector plus bias.

use thiserror::Error;

use crate::env::Observation;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    FeatureDimMismatch { expected: usize, got: usize },
    #[error("observation kind does not match the feature map")]
    ObservationKind,
    #[error("invalid feature map: {0}")]
    Invalid(String),
}

/// Sparse vector with explicit dimension. Indices are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Features<T> {
    dim: usize,
    idx: Vec<usize>,
    val: Vec<T>,
}

impl<T: Scalar> Features<T> {
    pub fn new(dim: usize, idx: Vec<usize>, val: Vec<T>) -> Self {
        debug_assert_eq!(idx.len(), val.len());
        debug_assert!(idx.iter().all(|i| *i < dim));
        Self { dim, idx, val }
    }

    pub fn binary(dim: usize, idx: Vec<usize>) -> Self {
        let val = vec![T::one(); idx.len()];
        Self::new(dim, idx, val)
    }

    pub fn dense(values: Vec<T>) -> Self {
        Self { dim: values.len(), idx: (0..values.len()).collect(), val: values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn values(&self) -> &[T] {
        &self.val
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }

    pub fn dot(&self, w: &[T]) -> T {
        self.iter().map(|(i, v)| w[i] * v).sum()
    }

    /// `w += c · self`
    pub fn add_scaled_to(&self, w: &mut [T], c: T) {
        for (i, v) in self.iter() {
            w[i] += c * v;
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.add_scaled_to(&mut out, T::one());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// Uniformly offset grid tilings over a box, with an optional bias unit.
    TileCoder { n_tilings: usize, tiles: usize, low: Vec<f64>, high: Vec<f64>, bias: bool },
    /// One active index per bin of a discrete state.
    OneHot { rep_of: Vec<usize>, n_bins: usize, bias: bool },
    /// The observation vector followed by a constant 1.
    IdentityBias { dim: usize },
}

impl FeatureMap {
    pub fn tile_coder(
        n_tilings: usize,
        tiles: usize,
        low: Vec<f64>,
        high: Vec<f64>,
        bias: bool,
    ) -> Result<Self, FeatureError> {
        if n_tilings == 0 || tiles == 0 {
            return Err(FeatureError::Invalid("tilings and tiles must be positive".into()));
        }
        if low.len() != high.len() {
            return Err(FeatureError::FeatureDimMismatch { expected: low.len(), got: high.len() });
        }
        if low.iter().zip(&high).any(|(l, h)| !(h > l)) {
            return Err(FeatureError::Invalid("empty bounds".into()));
        }
        Ok(FeatureMap::TileCoder { n_tilings, tiles, low, high, bias })
    }

    pub fn one_hot(rep_of: Vec<usize>, bias: bool) -> Self {
        let n_bins = rep_of.iter().max().map_or(0, |m| m + 1);
        FeatureMap::OneHot { rep_of, n_bins, bias }
    }

    pub fn n_features(&self) -> usize {
        match self {
            FeatureMap::TileCoder { n_tilings, tiles, low, bias, .. } => {
                n_tilings * (tiles + 1).pow(low.len() as u32) + usize::from(*bias)
            }
            FeatureMap::OneHot { n_bins, bias, .. } => n_bins + usize::from(*bias),
            FeatureMap::IdentityBias { dim } => dim + 1,
        }
    }

    pub fn featurize<T: Scalar>(&self, obs: &Observation) -> Result<Features<T>, FeatureError> {
        let n = self.n_features();
        match (self, obs) {
            (FeatureMap::TileCoder { n_tilings, tiles, low, high, bias }, Observation::Vector(x)) => {
                if x.len() != low.len() {
                    return Err(FeatureError::FeatureDimMismatch { expected: low.len(), got: x.len() });
                }
                let side = tiles + 1;
                let per_tiling = side.pow(low.len() as u32);
                let mut idx = Vec::with_capacity(n_tilings + 1);
                for k in 0..*n_tilings {
                    let offset = k as f64 / *n_tilings as f64;
                    let mut flat = 0;
                    let mut stride = 1;
                    for j in 0..x.len() {
                        let u = ((x[j] - low[j]) / (high[j] - low[j])).clamp(0.0, 1.0);
                        let coord = ((u * *tiles as f64 + offset).floor() as usize).min(*tiles);
                        flat += coord * stride;
                        stride *= side;
                    }
                    idx.push(k * per_tiling + flat);
                }
                if *bias {
                    idx.push(n - 1);
                }
                Ok(Features::binary(n, idx))
            }
            (FeatureMap::OneHot { rep_of, bias, .. }, Observation::Discrete(s)) => {
                let bin = *rep_of
                    .get(*s)
                    .ok_or(FeatureError::FeatureDimMismatch { expected: rep_of.len(), got: s + 1 })?;
                let mut idx = vec![bin];
                if *bias {
                    idx.push(n - 1);
                }
                Ok(Features::binary(n, idx))
            }
            (FeatureMap::IdentityBias { dim }, Observation::Vector(x)) => {
                if x.len() != *dim {
                    return Err(FeatureError::FeatureDimMismatch { expected: *dim, got: x.len() });
                }
                let mut v: Vec<T> = x.iter().map(|a| T::lit(*a)).collect();
                v.push(T::one());
                Ok(Features::dense(v))
            }
            _ => Err(FeatureError::ObservationKind),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tile_indices_stay_in_range_at_bounds() {
        let map = FeatureMap::tile_coder(4, 2, vec![0.0, 0.0], vec![1.0, 1.0], true).unwrap();
        for x in [[0.0, 0.0], [1.0, 1.0], [2.0, -1.0]] {
            let f: Features<f64> = map.featurize(&Observation::Vector(x.to_vec())).unwrap();
            assert_eq!(f.indices().len(), 5);
            assert!(f.indices().iter().all(|i| *i < map.n_features()));
        }
    }

    #[test]
    fn one_hot_with_bias() {
        let map = FeatureMap::one_hot(vec![0, 1, 1], true);
        let f: Features<f64> = map.featurize(&Observation::Discrete(2)).unwrap();
        assert_eq!(f.to_dense(), vec![0.0, 1.0, 1.0]);
    }
}
