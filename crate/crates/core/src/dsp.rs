//! Butterworth filtering as cascaded second-order sections, plus block-mean
//! decimation.

use std::f64::consts::PI;

use nalgebra::Complex;
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::MultichannelRecording;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Highpass,
    Lowpass,
    /// Highpass at the lower corner cascaded with lowpass at the upper one.
    Bandpass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Forward-backward pass: squared magnitude, no phase shift. Offline only.
    ZeroPhase,
    /// Single forward pass, usable sample by sample.
    Causal,
}

/// One second-order section, normalized so `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Bilinear-transformed `1 / (s² + s/Q + 1)` prewarped to `w0` (rad/sample).
    fn lowpass(w0: f64, q: f64) -> Self {
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 - cos) / 2.0 / a0;
        Self {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: -2.0 * cos / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    /// Bilinear-transformed `s² / (s² + s/Q + 1)`. The numerator sums to
    /// exactly zero, so DC is nulled in floating point too.
    fn highpass(w0: f64, q: f64) -> Self {
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 + cos) / 2.0 / a0;
        Self {
            b0,
            b1: -2.0 * b0,
            b2: b0,
            a1: -2.0 * cos / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    /// Both poles strictly inside the unit circle (stability triangle).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    pub fn response(&self, z_inv: Complex<f64>) -> Complex<f64> {
        let z2 = z_inv * z_inv;
        let num = Complex::new(self.b0, 0.0) + z_inv * self.b1 + z2 * self.b2;
        let den = Complex::new(1.0, 0.0) + z_inv * self.a1 + z2 * self.a2;
        num / den
    }
}

/// Designed filter: kind, corners, order and the resulting sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub corners_hz: Vec<f64>,
    pub order: usize,
    pub sample_rate_hz: f64,
    pub sections: Vec<Biquad>,
}

impl FilterSpec {
    /// Complex single-pass response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex<f64> {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex::new(w.cos(), -w.sin());
        self.sections
            .iter()
            .fold(Complex::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }
}

/// Butterworth design of the given even order via prewarped bilinear
/// transform, one biquad per conjugate pole pair.
pub fn design_butterworth(
    kind: FilterKind,
    corners_hz: &[f64],
    order: usize,
    sample_rate_hz: f64,
) -> Result<FilterSpec> {
    if !matches!(order, 2 | 4 | 6 | 8) {
        return Err(Error::InvalidOrder(order));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidSampleRate(sample_rate_hz));
    }
    let expected_corners = if kind == FilterKind::Bandpass { 2 } else { 1 };
    if corners_hz.len() != expected_corners {
        return Err(Error::InvalidConfig(format!(
            "{kind:?} filter needs {expected_corners} corner frequencies, got {}",
            corners_hz.len()
        )));
    }
    let nyquist_hz = sample_rate_hz / 2.0;
    for &corner_hz in corners_hz {
        if !(corner_hz > 0.0 && corner_hz < nyquist_hz) {
            return Err(Error::InvalidCorner {
                corner_hz,
                nyquist_hz,
            });
        }
    }
    if kind == FilterKind::Bandpass && corners_hz[0] >= corners_hz[1] {
        return Err(Error::InvalidConfig(format!(
            "band-pass corners must be increasing, got {corners_hz:?}"
        )));
    }

    let sections_for = |corner_hz: f64, high: bool| -> Vec<Biquad> {
        let w0 = 2.0 * PI * corner_hz / sample_rate_hz;
        (0..order / 2)
            .map(|k| {
                let theta = (2 * k + 1) as f64 * PI / (2 * order) as f64;
                let q = 1.0 / (2.0 * theta.sin());
                if high {
                    Biquad::highpass(w0, q)
                } else {
                    Biquad::lowpass(w0, q)
                }
            })
            .collect()
    };
    let sections = match kind {
        FilterKind::Highpass => sections_for(corners_hz[0], true),
        FilterKind::Lowpass => sections_for(corners_hz[0], false),
        FilterKind::Bandpass => {
            let mut s = sections_for(corners_hz[0], true);
            s.extend(sections_for(corners_hz[1], false));
            s
        }
    };
    let spec = FilterSpec {
        kind,
        corners_hz: corners_hz.to_vec(),
        order,
        sample_rate_hz,
        sections,
    };
    debug_assert!(spec.is_stable());
    Ok(spec)
}

/// Runs the cascade in place. Each section starts in the steady state it
/// would reach for a constant input equal to `x[0]`.
fn run_cascade(sections: &[Biquad], x: &mut [f64]) {
    let Some(&first) = x.first() else { return };
    let mut state: Vec<(f64, f64)> = Vec::with_capacity(sections.len());
    let mut level = first;
    for s in sections {
        let y = s.dc_gain() * level;
        let z2 = s.b2 * level - s.a2 * y;
        let z1 = (s.b1 + s.b2) * level - (s.a1 + s.a2) * y;
        state.push((z1, z2));
        level = y;
    }
    for v in x.iter_mut() {
        let mut u = *v;
        for (s, (z1, z2)) in sections.iter().zip(state.iter_mut()) {
            let y = s.b0 * u + *z1;
            *z1 = s.b1 * u - s.a1 * y + *z2;
            *z2 = s.b2 * u - s.a2 * y;
            u = y;
        }
        *v = u;
    }
}

/// Filters one channel.
pub fn filter_channel(spec: &FilterSpec, signal: &[f64], mode: FilterMode) -> Vec<f64> {
    match mode {
        FilterMode::Causal => {
            let mut out = signal.to_vec();
            run_cascade(&spec.sections, &mut out);
            out
        }
        FilterMode::ZeroPhase => {
            let n = signal.len();
            if n == 0 {
                return Vec::new();
            }
            // odd extension at both ends, as in the usual forward-backward
            // implementations
            let pad = (3 * (2 * spec.sections.len() + 1)).min(n - 1);
            let mut ext = Vec::with_capacity(n + 2 * pad);
            let (head, tail) = (signal[0], signal[n - 1]);
            ext.extend((1..=pad).rev().map(|i| 2.0 * head - signal[i]));
            ext.extend_from_slice(signal);
            ext.extend((1..=pad).map(|i| 2.0 * tail - signal[n - 1 - i]));
            run_cascade(&spec.sections, &mut ext);
            ext.reverse();
            run_cascade(&spec.sections, &mut ext);
            ext.reverse();
            ext[pad..pad + n].to_vec()
        }
    }
}

/// Filters every channel of `recording`.
pub fn apply_filter(
    recording: &MultichannelRecording,
    spec: &FilterSpec,
    mode: FilterMode,
) -> Result<MultichannelRecording> {
    if (spec.sample_rate_hz - recording.sample_rate_hz()).abs() > 1e-9 {
        return Err(Error::RateMismatch {
            expected: spec.sample_rate_hz,
            actual: recording.sample_rate_hz(),
        });
    }
    let mut out = recording.data().clone();
    filter_rows_in_place(&mut out, spec, mode);
    recording.with_data(out)
}

pub(crate) fn filter_rows_in_place(data: &mut Array2<f64>, spec: &FilterSpec, mode: FilterMode) {
    for mut row in data.axis_iter_mut(Axis(0)) {
        match (mode, row.as_slice_mut()) {
            (FilterMode::Causal, Some(slice)) => run_cascade(&spec.sections, slice),
            _ => {
                let filtered = filter_channel(spec, &row.to_vec(), mode);
                row.iter_mut().zip(filtered).for_each(|(d, v)| *d = v);
            }
        }
    }
}

/// Averages non-overlapping blocks of `factor` samples along each row.
pub fn decimate_block_mean(window: ArrayView2<f64>, factor: usize) -> Result<Array2<f64>> {
    let (n_ch, n_s) = window.dim();
    if factor == 0 || n_s % factor != 0 {
        return Err(Error::NotDivisible { len: n_s, factor });
    }
    let n_out = n_s / factor;
    let mut out = Array2::zeros((n_ch, n_out));
    for (ch, row) in window.outer_iter().enumerate() {
        for k in 0..n_out {
            let block = row.slice(ndarray::s![k * factor..(k + 1) * factor]);
            out[[ch, k]] = block.sum() / factor as f64;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    const FS: f64 = 512.0;

    fn lowpass25() -> FilterSpec {
        design_butterworth(FilterKind::Lowpass, &[25.0], 4, FS).unwrap()
    }

    fn highpass05() -> FilterSpec {
        design_butterworth(FilterKind::Highpass, &[0.5], 4, FS).unwrap()
    }

    /// Transfer function evaluated straight from the analog Butterworth
    /// magnitude with bilinear frequency warping, independent of the
    /// section coefficients.
    fn warped_butterworth_mag(f: f64, fc: f64, order: i32, high: bool) -> f64 {
        let r = (PI * f / FS).tan() / (PI * fc / FS).tan();
        let r = if high { 1.0 / r } else { r };
        1.0 / (1.0 + r.powi(2 * order)).sqrt()
    }

    #[test]
    fn highpass_dc_gain_is_exactly_zero() {
        let hp = highpass05();
        assert_eq!(hp.magnitude(0.0), 0.0);
        for s in &hp.sections {
            assert_eq!(s.b0 + s.b1 + s.b2, 0.0);
        }
    }

    #[test]
    fn lowpass_corner_is_minus_3db() {
        let g = lowpass25().magnitude(25.0);
        let target = 1.0 / 2f64.sqrt();
        assert!((g - target).abs() / target < 0.05, "gain {g}");
    }

    #[test]
    fn lowpass_attenuates_50hz_by_20db() {
        let db = 20.0 * lowpass25().magnitude(50.0).log10();
        assert!(db <= -20.0, "{db} dB");
    }

    #[test]
    fn sections_match_analog_prototype() {
        for order in [2usize, 4, 6, 8] {
            let lp = design_butterworth(FilterKind::Lowpass, &[25.0], order, FS).unwrap();
            let hp = design_butterworth(FilterKind::Highpass, &[0.5], order, FS).unwrap();
            assert!(lp.is_stable() && hp.is_stable());
            for f in [0.1, 0.5, 3.0, 10.0, 25.0, 40.0, 100.0, 200.0] {
                let a = lp.magnitude(f);
                let b = warped_butterworth_mag(f, 25.0, order as i32, false);
                assert!((a - b).abs() < 1e-9, "lp order {order} f {f}: {a} vs {b}");
                let a = hp.magnitude(f);
                let b = warped_butterworth_mag(f, 0.5, order as i32, true);
                assert!((a - b).abs() < 1e-9, "hp order {order} f {f}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn stopband_is_monotone() {
        let lp = lowpass25();
        let mags: Vec<f64> = (25..256).map(|f| lp.magnitude(f as f64)).collect();
        assert!(mags.windows(2).all(|w| w[1] <= w[0]));
        let hp = highpass05();
        let mags: Vec<f64> = (0..=50).map(|k| hp.magnitude(k as f64 * 0.01)).collect();
        assert!(mags.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn design_errors() {
        assert!(matches!(
            design_butterworth(FilterKind::Lowpass, &[256.0], 4, FS),
            Err(Error::InvalidCorner { .. })
        ));
        assert!(matches!(
            design_butterworth(FilterKind::Lowpass, &[300.0], 4, FS),
            Err(Error::InvalidCorner { .. })
        ));
        assert!(matches!(
            design_butterworth(FilterKind::Lowpass, &[25.0], 3, FS),
            Err(Error::InvalidOrder(3))
        ));
    }

    #[test]
    fn constant_through_highpass_is_zero() {
        let hp = highpass05();
        let x = vec![37.5; 4096];
        for mode in [FilterMode::Causal, FilterMode::ZeroPhase] {
            let y = filter_channel(&hp, &x, mode);
            assert!(y.iter().all(|v| v.abs() <= 1e-6 * 37.5), "{mode:?}");
        }
    }

    #[test]
    fn rate_mismatch_is_rejected() {
        let rec = MultichannelRecording::new(256.0, vec!["Cz".into()], Array2::zeros((1, 100))).unwrap();
        assert!(matches!(
            apply_filter(&rec, &lowpass25(), FilterMode::Causal),
            Err(Error::RateMismatch { .. })
        ));
    }

    #[test]
    fn block_mean_shapes_and_values() {
        let x = Array2::from_elem((5, 512), 3.25);
        let d = decimate_block_mean(x.view(), 16).unwrap();
        assert_eq!(d.dim(), (5, 32));
        assert_eq!(d.len(), 160);
        assert!(d.iter().all(|&v| v == 3.25));

        let ramp = Array2::from_shape_fn((1, 16), |(_, j)| j as f64);
        assert_eq!(decimate_block_mean(ramp.view(), 16).unwrap()[[0, 0]], 7.5);

        assert!(matches!(
            decimate_block_mean(Array2::<f64>::zeros((2, 30)).view(), 16),
            Err(Error::NotDivisible { len: 30, factor: 16 })
        ));
    }

    proptest! {
        #[test]
        fn decimation_commutes_with_channel_permutation(
            seed in any::<u64>(), n_ch in 1usize..6, blocks in 1usize..8
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = Array2::from_shape_fn((n_ch, blocks * 4), |_| rng.random_range(-10.0..10.0));
            let perm: Vec<usize> = (0..n_ch).rev().collect();
            let xp = x.select(Axis(0), &perm);
            let a = decimate_block_mean(x.view(), 4).unwrap().select(Axis(0), &perm);
            let b = decimate_block_mean(xp.view(), 4).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn filtering_is_linear(seed in any::<u64>(), a in -5.0f64..5.0, b in -5.0f64..5.0, zero_phase in any::<bool>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let spec = design_butterworth(FilterKind::Bandpass, &[0.5, 25.0], 4, FS).unwrap();
            let mode = if zero_phase { FilterMode::ZeroPhase } else { FilterMode::Causal };
            let x: Vec<f64> = (0..600).map(|_| rng.random_range(-50.0..50.0)).collect();
            let y: Vec<f64> = (0..600).map(|_| rng.random_range(-50.0..50.0)).collect();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let fx = filter_channel(&spec, &x, mode);
            let fy = filter_channel(&spec, &y, mode);
            let fm = filter_channel(&spec, &mix, mode);
            let scale = fm.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for i in 0..600 {
                let lin = a * fx[i] + b * fy[i];
                prop_assert!((fm[i] - lin).abs() <= 1e-9 * scale);
            }
        }
    }
}
