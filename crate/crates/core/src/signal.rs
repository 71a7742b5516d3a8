//! Small numeric helpers shared across modules.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Linear convolution via FFT. Output length is `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        let mut out = vec![0.0; out_len];
        for (i, x) in a.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fa.resize(n, Complex64::new(0.0, 0.0));
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fb.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.iter().take(out_len).map(|c| c.re / n as f64).collect()
}

/// Pearson correlation of two equally long slices; 0 when either is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (x, y) = (a[i] - ma, b[i] - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Splits `y` into a scaled copy of `reference` plus a residual by least
/// squares and returns `10 log10(|g r|^2 / |y - g r|^2)`.
pub fn projection_snr_db(y: &[f64], reference: &[f64]) -> f64 {
    let n = y.len().min(reference.len());
    let rr: f64 = reference[..n].iter().map(|v| v * v).sum();
    if rr == 0.0 {
        return f64::NEG_INFINITY;
    }
    let g = y[..n]
        .iter()
        .zip(&reference[..n])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / rr;
    let signal = g * g * rr;
    let residual: f64 = y[..n]
        .iter()
        .zip(&reference[..n])
        .map(|(a, b)| (a - g * b).powi(2))
        .sum();
    if residual == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (signal / residual).log10()
}

pub fn wrap_degrees(az: f64) -> f64 {
    let w = az.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Smallest absolute angular difference in degrees.
pub fn angle_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_convolution_matches_direct() {
        let a: Vec<f64> = (0..100).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let b: Vec<f64> = (0..50).map(|i| ((i * 5) % 11) as f64 - 5.0).collect();
        let fast = convolve(&a, &b);
        let mut slow = vec![0.0; 149];
        for i in 0..100 {
            for j in 0..50 {
                slow[i + j] += a[i] * b[j];
            }
        }
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn angles() {
        assert_eq!(angle_diff_deg(355.0, 5.0), 10.0);
        assert_eq!(wrap_degrees(-30.0), 330.0);
    }
}
