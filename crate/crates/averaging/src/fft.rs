//! FFT-backed discrete convolution of real sequences.
//!
//! Single-threaded and plan-cached per call site; the output is a fixed
//! function of the inputs regardless of how many worker threads the caller
//! uses elsewhere.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Full linear convolution `out[k] = sum_j a[j] b[k - j]`, length
/// `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    // Below this size the direct sum is both faster and exact.
    if out_len <= 256 {
        return convolve_direct(a, b);
    }
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut fa: Vec<Complex64> = a
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    fft.process(&mut fa);

    if std::ptr::eq(a.as_ptr(), b.as_ptr()) && a.len() == b.len() {
        for v in fa.iter_mut() {
            *v = *v * *v;
        }
    } else {
        let mut fb: Vec<Complex64> = b
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(size)
            .collect();
        fft.process(&mut fb);
        for (va, vb) in fa.iter_mut().zip(&fb) {
            *va *= *vb;
        }
    }

    ifft.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..out_len].iter().map(|v| v.re * scale).collect()
}

/// Quadratic-time reference convolution; the oracle the FFT path is checked
/// against.
pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (j, &aj) in a.iter().enumerate() {
        if aj == 0.0 {
            continue;
        }
        for (l, &bl) in b.iter().enumerate() {
            out[j + l] += aj * bl;
        }
    }
    out
}

/// Convolution of a sequence with itself.
pub fn self_convolve(a: &[f64]) -> Vec<f64> {
    convolve(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_case() {
        let out = convolve(&[1.0, 2.0], &[3.0, 4.0, 5.0]);
        assert_eq!(out, vec![3.0, 10.0, 13.0, 10.0]);
    }

    #[test]
    fn fft_matches_direct() {
        // Large enough to take the FFT path.
        let a: Vec<f64> = (0..700).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let b: Vec<f64> = (0..450).map(|i| ((i * 53) % 97) as f64 / 97.0).collect();
        let fast = convolve(&a, &b);
        let slow = convolve_direct(&a, &b);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-9, "{f} vs {s}");
        }
    }

    #[test]
    fn self_convolution_symmetry() {
        // Palindromic input gives a palindromic self-convolution.
        let a: Vec<f64> = (0..=600)
            .map(|i| (-((i as f64 - 300.0) / 80.0).powi(2)).exp())
            .collect();
        let out = self_convolve(&a);
        let m = out.len();
        for k in 0..m / 2 {
            assert!((out[k] - out[m - 1 - k]).abs() < 1e-10);
        }
    }
}
