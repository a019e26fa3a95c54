//! Complex FFT for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z reduction onto a power-of-two
//! convolution. Transforms are unnormalized: `inverse(forward(x)) = len·x`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
// libm-backed float math; redundant whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Kernel `exp(−2πi jk/len)`.
    Forward,
    /// Kernel `exp(+2πi jk/len)`.
    Inverse,
}

#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    algorithm: Algorithm,
}

#[derive(Debug, Clone)]
enum Algorithm {
    Trivial,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let algorithm = if len == 1 {
            Algorithm::Trivial
        } else if len.is_power_of_two() {
            Algorithm::Radix2(Radix2::new(len))
        } else {
            Algorithm::Bluestein(Bluestein::new(len))
        };
        FftPlan { len, algorithm }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place transform of `data`, which must hold exactly `len` values.
    pub fn process(&self, data: &mut [Complex64], direction: Direction) {
        assert_eq!(data.len(), self.len, "FFT buffer length");
        match &self.algorithm {
            Algorithm::Trivial => {}
            Algorithm::Radix2(plan) => plan.process(data, direction),
            Algorithm::Bluestein(plan) => plan.process(data, direction),
        }
    }
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    // exp(−2πi k/len) for k < len/2
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        let twiddles = (0..len / 2)
            .map(|k| unit_phase(-2.0 * PI * k as f64 / len as f64))
            .collect();
        Radix2 { len, twiddles }
    }

    fn process(&self, data: &mut [Complex64], direction: Direction) {
        let n = self.len;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if direction == Direction::Inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    inner: Radix2,
    // exp(−πi k²/len)
    chirp: Vec<Complex64>,
    // forward FFT of the conjugate chirp, wrapped onto the padded length
    kernel: Vec<Complex64>,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let padded = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(padded);
        let two_len = 2 * len as u128;
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                // reduce k² mod 2·len before scaling so large k keep full precision
                let k2 = ((k as u128 * k as u128) % two_len) as f64;
                unit_phase(-PI * k2 / len as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); padded];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[padded - k] = chirp[k].conj();
        }
        inner.process(&mut kernel, Direction::Forward);
        Bluestein {
            len,
            inner,
            chirp,
            kernel,
        }
    }

    fn process(&self, data: &mut [Complex64], direction: Direction) {
        let padded = self.kernel.len();
        let inverse = direction == Direction::Inverse;
        let mut work = vec![Complex64::new(0.0, 0.0); padded];
        for k in 0..self.len {
            let x = if inverse { data[k].conj() } else { data[k] };
            work[k] = x * self.chirp[k];
        }
        self.inner.process(&mut work, Direction::Forward);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            *w *= k;
        }
        self.inner.process(&mut work, Direction::Inverse);
        let scale = 1.0 / padded as f64;
        for k in 0..self.len {
            let y = work[k] * self.chirp[k] * scale;
            data[k] = if inverse { y.conj() } else { y };
        }
    }
}

fn unit_phase(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64], direction: Direction) -> Vec<Complex64> {
        let n = x.len();
        let sign = match direction {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        };
        (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, xj) in x.iter().enumerate() {
                    let phase = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    acc += xj * unit_phase(phase);
                }
                acc
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let t = j as f64;
                Complex64::new(
                    (0.3 * t).sin() + 0.1 * t,
                    (1.7 * t).cos() - 0.05 * t * t / n as f64,
                )
            })
            .collect()
    }

    #[test]
    fn agrees_with_direct_sum() {
        for n in [1usize, 2, 4, 6, 10, 12, 16, 18, 30, 64, 100] {
            let x = signal(n);
            for dir in [Direction::Forward, Direction::Inverse] {
                let mut y = x.clone();
                FftPlan::new(n).process(&mut y, dir);
                let want = naive_dft(&x, dir);
                let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
                for (a, b) in y.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-12 * scale, "n={n} dir={dir:?}");
                }
            }
        }
    }

    #[test]
    fn roundtrip_scales_by_length() {
        for n in [8usize, 24] {
            let x = signal(n);
            let plan = FftPlan::new(n);
            let mut y = x.clone();
            plan.process(&mut y, Direction::Forward);
            plan.process(&mut y, Direction::Inverse);
            for (a, b) in y.iter().zip(&x) {
                assert!((a / n as f64 - b).norm() < 1e-13 * (1.0 + b.norm()));
            }
        }
    }
}
