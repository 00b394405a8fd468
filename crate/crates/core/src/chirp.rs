//! Length-`L` discrete Fourier transform with a positive exponent,
//! `X[a] = sum_u x[u] exp(2 pi i a u / L)`, reduced to a power-of-two
//! circular convolution with the chirp `exp(pi i k^2 / L)`.
//!
//! Works for any `L`, but the interesting case is prime `L`, where no
//! mixed-radix factorization exists. The power-of-two FFTs come from
//! `rustfft`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub struct ChirpDft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
}

/// `exp(pi i k^2 / len)`, with `k^2` reduced mod `2 len` first so the angle
/// stays small and accurate.
fn chirp_at(k: u64, len: u64) -> Complex64 {
    let r = ((k as u128 * k as u128) % (2 * len as u128)) as f64;
    Complex64::from_polar(1.0, PI * r / len as f64)
}

impl ChirpDft {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1);
        let n = (2 * len - 1).next_power_of_two();
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        let chirp: Vec<Complex64> = (0..len as u64).map(|k| chirp_at(k, len as u64)).collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); n];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[n - k] = chirp[k].conj();
        }
        forward.process(&mut kernel);
        Self {
            len,
            forward,
            inverse,
            chirp,
            kernel_spectrum: kernel,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn process(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len);
        let n = self.kernel_spectrum.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (b, (x, c)) in buf.iter_mut().zip(input.iter().zip(&self.chirp)) {
            *b = x * c;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.truncate(self.len);
        for (b, c) in buf.iter_mut().zip(&self.chirp) {
            *b = *b * c * scale;
        }
        buf
    }
}
