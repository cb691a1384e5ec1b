//! Kaiser-windowed sinc kernels shared by the lowpass generator and the
//! fractional-delay interpolator.

use std::f64::consts::PI;

/// Normalised sinc, `sin(pi t) / (pi t)`.
///
/// Integer arguments return exactly 1 or 0 so that integer shifts stay exact.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else if t.fract() == 0.0 {
        0.0
    } else {
        let x = PI * t;
        x.sin() / x
    }
}

/// Derivative of [`sinc`] with respect to its argument.
pub fn sinc_derivative(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        let x = PI * t;
        (x.cos() - x.sin() / x) / t
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let half_sq = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= half_sq / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaiserWindow {
    half_width: usize,
    beta: f64,
    inv_i0_beta: f64,
}

impl KaiserWindow {
    pub fn new(half_width: usize, beta: f64) -> Self {
        assert!(half_width >= 1, "kaiser half-width must be positive");
        Self {
            half_width,
            beta,
            inv_i0_beta: 1.0 / bessel_i0(beta),
        }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Window value at continuous offset `t`; zero outside `[-half_width, half_width]`.
    pub fn at(&self, t: f64) -> f64 {
        let u = t / self.half_width as f64;
        if u.abs() > 1.0 {
            return 0.0;
        }
        bessel_i0(self.beta * (1.0 - u * u).sqrt()) * self.inv_i0_beta
    }

    /// Windowed sinc fractional-delay tap at offset `t`.
    pub fn interpolation_tap(&self, t: f64) -> f64 {
        let s = sinc(t);
        if s == 0.0 {
            0.0
        } else {
            s * self.at(t)
        }
    }

    /// Linear-phase lowpass taps for `k = -half_width..=half_width` with
    /// cutoff `cutoff` in radians per sample.
    pub fn lowpass_taps(&self, cutoff: f64) -> Vec<f64> {
        let hw = self.half_width as i64;
        let scale = cutoff / PI;
        (-hw..=hw)
            .map(|k| {
                let t = k as f64;
                scale * sinc(scale * t) * self.at(t)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_exact_on_integers() {
        assert_eq!(sinc(0.0), 1.0);
        for k in 1..50 {
            assert_eq!(sinc(k as f64), 0.0);
            assert_eq!(sinc(-(k as f64)), 0.0);
        }
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn sinc_derivative_matches_central_difference() {
        for &t in &[-3.3, -0.7, 0.25, 1.5, 4.85] {
            let h = 1e-6;
            let fd = (sinc(t + h) - sinc(t - h)) / (2.0 * h);
            assert!((fd - sinc_derivative(t)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun table 9.8
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(10.0) - 2_815.716_628_466_254).abs() < 1e-9);
    }

    #[test]
    fn window_edges() {
        let w = KaiserWindow::new(32, 10.0);
        assert_eq!(w.at(0.0), 1.0);
        assert_eq!(w.at(32.5), 0.0);
        assert!((w.at(32.0) - 1.0 / bessel_i0(10.0)).abs() < 1e-18);
    }
}
