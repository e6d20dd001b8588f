//! Orthonormal DCT-II and its inverse.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

/// Cosine basis for a fixed length; row `k` holds `s_k cos(pi k (2n+1) / 2N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dct {
    basis: Vec<Vec<f64>>,
}

impl Dct {
    pub fn new(len: usize) -> Self {
        let n = len as f64;
        let basis = (0..len)
            .map(|k| {
                let scale = if k == 0 { math::sqrt(1.0 / n) } else { math::sqrt(2.0 / n) };
                (0..len)
                    .map(|i| scale * math::cos(PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)))
                    .collect()
            })
            .collect();
        Self { basis }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// First `keep` DCT-II coefficients of `x`.
    pub fn forward(&self, x: &[f64], keep: usize) -> Vec<f64> {
        self.basis[..keep]
            .iter()
            .map(|row| row.iter().zip(x).map(|(b, v)| b * v).sum())
            .collect()
    }

    /// DCT-III; inverts [`Dct::forward`] given all coefficients (missing
    /// trailing coefficients are treated as zero).
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| coeffs.iter().zip(&self.basis).map(|(c, row)| c * row[i]).sum())
            .collect()
    }
}

pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    Dct::new(x.len()).forward(x, x.len())
}

pub fn idct_ii(coeffs: &[f64]) -> Vec<f64> {
    Dct::new(coeffs.len()).inverse(coeffs)
}
