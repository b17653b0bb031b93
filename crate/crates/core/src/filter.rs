//! Four-pole low-pass Bessel filter, as found on patch-clamp amplifiers.
//!
//! The analog prototype is the fourth-order Bessel polynomial rescaled so
//! its magnitude is −3 dB at 1 rad/s. It is split into two conjugate-pole
//! sections and discretized with a bilinear transform prewarped at the
//! cutoff, so the digital −3 dB point lands exactly on the requested
//! bandwidth and the DC gain is exactly one.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reverse Bessel polynomial of order 4, lowest power first.
const BESSEL4: [f64; 5] = [105.0, 105.0, 45.0, 10.0, 1.0];

fn poly_eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Roots of a monic polynomial by Durand–Kerner iteration.
fn monic_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * 3.0).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = poly_eval(coeffs, roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Frequency (rad/s) where the unnormalized prototype drops to −3 dB.
fn prototype_cutoff() -> f64 {
    let gain2 = |w: f64| {
        let h = BESSEL4[0] / poly_eval(&BESSEL4, Complex64::new(0.0, w));
        h.norm_sqr()
    };
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gain2(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Bilinear image of `c / (s² + b s + c)` with `s = k (1 − z⁻¹)/(1 + z⁻¹)`.
    fn from_analog(b_lin: f64, c: f64, k: f64) -> Self {
        let a0 = k * k + b_lin * k + c;
        Biquad {
            b: [c / a0, 2.0 * c / a0, c / a0],
            a: [(2.0 * c - 2.0 * k * k) / a0, (k * k - b_lin * k + c) / a0],
        }
    }

    /// Transposed direct form II, started in steady state at `x0`.
    fn run(&self, input: &mut [f64]) {
        let Some(&x0) = input.first() else { return };
        let mut s2 = (self.b[2] - self.a[1]) * x0;
        let mut s1 = (self.b[1] - self.a[0]) * x0 + s2;
        for x in input.iter_mut() {
            let y = self.b[0] * *x + s1;
            s1 = self.b[1] * *x - self.a[0] * y + s2;
            s2 = self.b[2] * *x - self.a[1] * y;
            *x = y;
        }
    }

    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (1.0 + self.a[0] * z1 + self.a[1] * z2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesselLowpass {
    cutoff_hz: f64,
    sample_rate_hz: f64,
    sections: [Biquad; 2],
}

impl BesselLowpass {
    pub fn design(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        let nyquist = sample_rate_hz / 2.0;
        if !(cutoff_hz > 0.0) || !(cutoff_hz < nyquist) {
            return Err(Error::Config(format!(
                "filter bandwidth {cutoff_hz} Hz must lie in (0, {nyquist}) Hz"
            )));
        }
        let w3 = prototype_cutoff();
        let mut upper: Vec<Complex64> =
            monic_roots(&BESSEL4).into_iter().filter(|p| p.im > 0.0).collect();
        upper.sort_by(|p, q| p.im.total_cmp(&q.im));
        debug_assert_eq!(upper.len(), 2);
        let k = 1.0 / (std::f64::consts::PI * cutoff_hz / sample_rate_hz).tan();
        let section = |p: Complex64| {
            let p = p / w3;
            Biquad::from_analog(-2.0 * p.re, p.norm_sqr(), k)
        };
        Ok(BesselLowpass { cutoff_hz, sample_rate_hz, sections: [section(upper[0]), section(upper[1])] })
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn apply(&self, samples: &[f64]) -> Vec<f64> {
        let mut out = samples.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, samples: &mut [f64]) {
        for s in &self.sections {
            s.run(samples);
        }
    }

    /// Magnitude of the digital transfer function at `freq_hz`.
    pub fn gain(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / self.sample_rate_hz;
        self.sections.iter().map(|s| s.response(w)).product::<Complex64>().norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prototype_poles_match_tables() {
        let mut roots = monic_roots(&BESSEL4);
        roots.sort_by(|a, b| a.im.total_cmp(&b.im));
        // Standard Bessel order-4 poles (unit-delay normalization).
        let upper: Vec<_> = roots.iter().filter(|r| r.im > 0.0).collect();
        assert!((upper[0].re + 2.896_210_602_8).abs() < 1e-8);
        assert!((upper[0].im - 0.867_234_128_9).abs() < 1e-8);
        assert!((upper[1].re + 2.103_789_397_2).abs() < 1e-8);
        assert!((upper[1].im - 2.657_418_041_9).abs() < 1e-8);
        assert!((prototype_cutoff() - 2.113_917_674).abs() < 1e-6);
    }

    #[test]
    fn dc_gain_and_cutoff() {
        for (fc, fs) in [(5e3, 2e5), (20e3, 2e5), (100e3, 1e6)] {
            let f = BesselLowpass::design(fc, fs).unwrap();
            assert!((f.gain(0.0) - 1.0).abs() < 1e-12);
            assert!((f.gain(fc) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_input_unchanged() {
        let f = BesselLowpass::design(5e3, 2e5).unwrap();
        let out = f.apply(&[120.0; 500]);
        assert!(out.iter().all(|y| (y - 120.0).abs() < 1e-9));
    }

    #[test]
    fn rejects_bandwidth_at_nyquist() {
        assert!(BesselLowpass::design(100e3, 2e5).is_err());
        assert!(BesselLowpass::design(0.0, 2e5).is_err());
    }

    #[test]
    fn empty_input() {
        let f = BesselLowpass::design(5e3, 2e5).unwrap();
        assert!(f.apply(&[]).is_empty());
    }
}
