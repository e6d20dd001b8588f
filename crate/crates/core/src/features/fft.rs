//! Iterative radix-2 FFT, enough for power spectra of short frames.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, im: self.im - o.im }
    }
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Precomputed twiddles and bit-reversal table for one transform size.
#[derive(Debug, Clone)]
pub(crate) struct FftPlan {
    size: usize,
    twiddles: Vec<Complex>,
    reversed: Vec<usize>,
}

impl FftPlan {
    /// `size` must be a power of two.
    pub fn new(size: usize) -> Self {
        assert!(size.is_power_of_two(), "FFT size must be a power of two");
        let bits = size.trailing_zeros();
        let reversed = (0..size)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..size / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / size as f64;
                Complex { re: math::cos(a), im: math::sin(a) }
            })
            .collect();
        Self { size, twiddles, reversed }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Forward DFT of a real signal zero-padded to the plan size.
    pub fn forward_real(&self, input: &[f64]) -> Vec<Complex> {
        assert!(input.len() <= self.size);
        let mut buf = vec![Complex::default(); self.size];
        for (i, &x) in input.iter().enumerate() {
            buf[self.reversed[i]].re = x;
        }
        let mut len = 2;
        while len <= self.size {
            let half = len / 2;
            let stride = self.size / len;
            for start in (0..self.size).step_by(len) {
                for j in 0..half {
                    let w = self.twiddles[j * stride];
                    let a = buf[start + j];
                    let b = buf[start + j + half].mul(w);
                    buf[start + j] = a.add(b);
                    buf[start + j + half] = a.sub(b);
                }
            }
            len <<= 1;
        }
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[f64], n: usize) -> Vec<Complex> {
        (0..n)
            .map(|k| {
                let mut acc = Complex::default();
                for (t, &v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * t) as f64 / n as f64;
                    acc.re += v * libm::cos(a);
                    acc.im += v * libm::sin(a);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<f64> = (0..27).map(|i| libm::sin(i as f64 * 0.37) + 0.1 * i as f64).collect();
        let plan = FftPlan::new(32);
        let fast = plan.forward_real(&x);
        let slow = naive_dft(&x, 32);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a.re - b.re).abs() < 1e-9 && (a.im - b.im).abs() < 1e-9);
        }
    }

    #[test]
    fn size_one() {
        let plan = FftPlan::new(1);
        assert_eq!(plan.forward_real(&[3.0])[0].re, 3.0);
    }
}
