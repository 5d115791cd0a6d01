//! Iterative radix-2 FFT over power-of-two lengths.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::C64;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<C64>,
    rev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "fft length must be a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                C64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Fft { n, twiddles, rev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized `X_k = sum_j x_j e^{-2 pi i jk/n}` (or `+` when `inverse`).
    pub fn run(&self, buf: &mut [C64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// FFT over a d-dimensional row-major array with `n` points per axis.
#[derive(Debug, Clone)]
pub struct FftNd {
    dim: usize,
    line: Fft,
    scratch: Vec<C64>,
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        FftNd { dim, line: Fft::new(n), scratch: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn run(&mut self, data: &mut [C64], inverse: bool) {
        let n = self.line.len();
        match self.dim {
            1 => self.line.run(data, inverse),
            2 => {
                for row in data.chunks_exact_mut(n) {
                    self.line.run(row, inverse);
                }
                for col in 0..n {
                    for r in 0..n {
                        self.scratch[r] = data[r * n + col];
                    }
                    self.line.run(&mut self.scratch, inverse);
                    for r in 0..n {
                        data[r * n + col] = self.scratch[r];
                    }
                }
            }
            _ => unreachable!("dimension is validated by Grid"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[C64], inverse: bool) -> Vec<C64> {
        let n = x.len();
        let sign = if inverse { 1.0 } else { -1.0 };
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(C64::new(0.0, 0.0), |acc, (j, v)| {
                    let a = sign * 2.0 * PI * (j * k) as f64 / n as f64;
                    acc + v * C64::new(a.cos(), a.sin())
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[1usize, 2, 8, 64] {
            let x: Vec<C64> =
                (0..n).map(|j| C64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos())).collect();
            for inv in [false, true] {
                let mut y = x.clone();
                Fft::new(n).run(&mut y, inv);
                let z = naive(&x, inv);
                for (a, b) in y.iter().zip(&z) {
                    assert!((a - b).norm() < 1e-11 * n as f64);
                }
            }
        }
    }

    #[test]
    fn two_dim_round_trip() {
        let n = 16;
        let x: Vec<C64> =
            (0..n * n).map(|j| C64::new((j as f64).sin(), (j as f64 * 0.5).cos())).collect();
        let mut y = x.clone();
        let mut f = FftNd::new(2, n);
        f.run(&mut y, false);
        f.run(&mut y, true);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-13);
        }
    }
}
