use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Bandpass,
    Bandstop,
}

/// Digital Butterworth band filter with edges `low_hz < high_hz < fs/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub fs_hz: f64,
}

impl FilterSpec {
    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64, fs_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Bandpass,
            order,
            low_hz,
            high_hz,
            fs_hz,
        }
    }

    pub fn bandstop(order: usize, low_hz: f64, high_hz: f64, fs_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Bandstop,
            order,
            low_hz,
            high_hz,
            fs_hz,
        }
    }

    pub fn validate(&self) -> Result<(), DspError> {
        let nyq = self.fs_hz / 2.0;
        if !(self.fs_hz.is_finite() && self.fs_hz > 0.0) {
            return Err(DspError::Spec(format!(
                "sampling rate {} Hz must be positive",
                self.fs_hz
            )));
        }
        if self.order == 0 {
            return Err(DspError::Spec("order must be at least 1".into()));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < nyq) {
            return Err(DspError::Spec(format!(
                "edges must satisfy 0 < {} < {} < {nyq} (Nyquist)",
                self.low_hz, self.high_hz
            )));
        }
        Ok(())
    }

    fn prewarped(&self) -> (f64, f64) {
        let fs2 = 2.0 * self.fs_hz;
        (
            fs2 * (PI * self.low_hz / self.fs_hz).tan(),
            fs2 * (PI * self.high_hz / self.fs_hz).tan(),
        )
    }

    /// Ideal magnitude response of the designed filter at `f_hz`.
    pub fn ideal_magnitude(&self, f_hz: f64) -> f64 {
        let (w1, w2) = self.prewarped();
        let (w0sq, bw) = (w1 * w2, w2 - w1);
        let w = 2.0 * self.fs_hz * (PI * f_hz / self.fs_hz).tan();
        let lp = match self.kind {
            FilterKind::Bandpass => (w * w - w0sq) / (w * bw),
            FilterKind::Bandstop => (w * bw) / (w0sq - w * w),
        };
        1.0 / (1.0 + lp.abs().powi(2 * self.order as i32)).sqrt()
    }
}

/// One biquad, `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Sos {
    pub fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2])
            / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let (a1, a2) = (self.a[1] / self.a[0], self.a[2] / self.a[0]);
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosFilter {
    pub sections: Vec<Sos>,
}

impl SosFilter {
    pub fn response(&self, f_hz: f64, fs_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f_hz / fs_hz);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn magnitude(&self, f_hz: f64, fs_hz: f64) -> f64 {
        self.response(f_hz, fs_hz).norm()
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    }

    pub fn check_stable(&self) -> Result<(), DspError> {
        let r = self.max_pole_radius();
        if r.is_finite() && r < 1.0 {
            Ok(())
        } else {
            Err(DspError::Unstable(format!(
                "pole radius {r} is not inside the unit circle"
            )))
        }
    }

    /// Filter order as the number of poles.
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }
}

/// Designs the filter by analog prototype, band transform and bilinear map.
pub fn design_butterworth(spec: &FilterSpec) -> Result<SosFilter, DspError> {
    spec.validate()?;
    let n = spec.order;
    let fs2 = 2.0 * spec.fs_hz;
    let (w1, w2) = spec.prewarped();
    let bw = w2 - w1;
    let w0sq = Complex64::new(w1 * w2, 0.0);

    let mut analog = Vec::with_capacity(2 * n);
    for k in 0..n {
        let p = Complex64::from_polar(1.0, PI * (2 * k + n + 1) as f64 / (2 * n) as f64);
        let a = match spec.kind {
            FilterKind::Bandpass => p * (bw / 2.0),
            FilterKind::Bandstop => Complex64::new(bw / 2.0, 0.0) / p,
        };
        let d = (a * a - w0sq).sqrt();
        analog.push(a + d);
        analog.push(a - d);
    }

    let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);
    let denom: Complex64 = analog.iter().map(|&s| fs2 - s).product();
    let (gain, b) = match spec.kind {
        FilterKind::Bandpass => (
            (Complex64::new(bw * fs2, 0.0).powi(n as i32) / denom).re,
            [1.0, 0.0, -1.0],
        ),
        FilterKind::Bandstop => {
            let num = Complex64::new(fs2 * fs2 + w0sq.re, 0.0).powi(n as i32);
            let z0 = bilinear(Complex64::new(0.0, w0sq.re.sqrt()));
            ((num / denom).re, [1.0, -2.0 * z0.re, 1.0])
        }
    };
    if !gain.is_finite() || gain == 0.0 {
        return Err(DspError::Spec(format!("degenerate gain {gain}")));
    }

    let digital: Vec<Complex64> = analog.into_iter().map(bilinear).collect();
    let tol = 1e-10;
    let mut sections = Vec::with_capacity(n);
    let mut reals = Vec::new();
    for p in &digital {
        if p.im > tol {
            sections.push(Sos {
                b,
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            });
        } else if p.im.abs() <= tol {
            reals.push(p.re);
        }
    }
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    for pair in reals.chunks(2) {
        let a = if pair.len() == 2 {
            [1.0, -(pair[0] + pair[1]), pair[0] * pair[1]]
        } else {
            [1.0, -pair[0], 0.0]
        };
        sections.push(Sos { b, a });
    }
    if sections.len() != n {
        return Err(DspError::Spec(format!(
            "pole pairing produced {} sections for order {n}",
            sections.len()
        )));
    }
    for x in sections[0].b.iter_mut() {
        *x *= gain;
    }
    let filter = SosFilter { sections };
    filter.check_stable()?;
    Ok(filter)
}
