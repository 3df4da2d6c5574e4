//! SNR/SQNR arithmetic for quantized dot products: peak-to-average ratios,
//! quantization noise variances and the harmonic combination of noise sources.
//!
//! All SQNR expressions use the exact constant `10·log10(3·4^B)`; the familiar
//! `6B + 4.78` is its rounded form.

use crate::{cnt, lit, Error, Result, Scalar};
use serde::{Deserialize, Serialize};

#[inline]
pub(crate) fn to_db<T: Scalar>(lin: T) -> T {
    lit::<T>(10.0) * lin.log10()
}

#[inline]
pub(crate) fn from_db<T: Scalar>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}

/// `10·log10(3·4^B)`, the SQNR of a B-bit quantizer on a unit-PAR signal.
#[inline]
pub(crate) fn bits_db<T: Scalar>(bits: u32) -> T {
    to_db(lit::<T>(3.0)) + lit::<T>(20.0) * lit::<T>(2.0).log10() * T::from_u32(bits).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    UniformUnsigned,
    UniformSigned,
    Gaussian,
    Empirical,
}

/// First- and second-order description of a signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct SignalModel<T> {
    pub kind: SignalKind,
    /// Peak value (`x_m`, `w_m` or `y_m`).
    pub range_max: T,
    pub mean: T,
    pub variance: T,
    pub second_moment: T,
    /// Backing samples for [`SignalKind::Empirical`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<T>,
}

impl<T: Scalar> SignalModel<T> {
    /// Uniform on `[0, x_m]`.
    pub fn uniform_unsigned(x_m: T) -> Self {
        Self {
            kind: SignalKind::UniformUnsigned,
            range_max: x_m,
            mean: x_m / lit(2.0),
            variance: x_m * x_m / lit(12.0),
            second_moment: x_m * x_m / lit(3.0),
            samples: Vec::new(),
        }
    }

    /// Uniform on `[-w_m, w_m]`.
    pub fn uniform_signed(w_m: T) -> Self {
        Self {
            kind: SignalKind::UniformSigned,
            range_max: w_m,
            mean: T::zero(),
            variance: w_m * w_m / lit(3.0),
            second_moment: w_m * w_m / lit(3.0),
            samples: Vec::new(),
        }
    }

    /// Gaussian with the given mean and standard deviation; `range_max` is the
    /// reference peak used for PAR (e.g. a clipping level).
    pub fn gaussian(mean: T, sigma: T, range_max: T) -> Self {
        Self {
            kind: SignalKind::Gaussian,
            range_max,
            mean,
            variance: sigma * sigma,
            second_moment: mean * mean + sigma * sigma,
            samples: Vec::new(),
        }
    }

    /// Sample-backed model; moments and peak are computed from the samples.
    pub fn empirical(samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("empirical signal samples"));
        }
        let n = cnt::<T>(samples.len());
        let mean = samples.iter().fold(T::zero(), |a, &s| a + s) / n;
        let second_moment = samples.iter().fold(T::zero(), |a, &s| a + s * s) / n;
        let variance = samples.iter().fold(T::zero(), |a, &s| a + (s - mean) * (s - mean)) / n;
        let range_max = samples.iter().fold(T::zero(), |a, &s| a.max(s.abs()));
        Ok(Self {
            kind: SignalKind::Empirical,
            range_max,
            mean,
            variance,
            second_moment,
            samples,
        })
    }

    pub fn std_dev(&self) -> T {
        self.variance.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= T::zero()) {
            return Err(Error::DegenerateSignal("negative variance".into()));
        }
        let implied = self.mean * self.mean + self.variance;
        let eps = lit::<T>(1e-9) * implied.max(T::one());
        if self.second_moment < implied - eps {
            return Err(Error::DegenerateSignal(
                "second moment smaller than mean² + variance".into(),
            ));
        }
        if !(self.range_max > T::zero()) {
            return Err(Error::DegenerateSignal("non-positive range".into()));
        }
        Ok(())
    }
}

/// Uniform quantizer description. The step is derived from the clip level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec<T> {
    pub bits: u32,
    pub clip_level: T,
    pub signed: bool,
}

impl<T: Scalar> QuantizerSpec<T> {
    pub fn new(bits: u32, clip_level: T, signed: bool) -> Result<Self> {
        let q = Self { bits, clip_level, signed };
        q.validate()?;
        Ok(q)
    }

    pub fn signed(bits: u32, clip_level: T) -> Result<Self> {
        Self::new(bits, clip_level, true)
    }

    pub fn unsigned(bits: u32, clip_level: T) -> Result<Self> {
        Self::new(bits, clip_level, false)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits < 1 || self.bits > 62 {
            return Err(Error::InvalidQuantizer(format!("bits = {}", self.bits)));
        }
        if !(self.clip_level > T::zero()) || !self.clip_level.is_finite() {
            return Err(Error::InvalidQuantizer("clip level must be positive".into()));
        }
        Ok(())
    }

    /// Step size: `clip·2^(1−B)` signed, `clip·2^(−B)` unsigned.
    pub fn step(&self) -> T {
        let e = if self.signed { 1 - self.bits as i32 } else { -(self.bits as i32) };
        self.clip_level * lit::<T>(2.0).powi(e)
    }

    /// Smallest and largest mid-rise code.
    pub fn code_range(&self) -> (i64, i64) {
        if self.signed {
            let h = 1i64 << (self.bits - 1);
            (-h, h - 1)
        } else {
            (0, (1i64 << self.bits) - 1)
        }
    }

    /// Mid-rise code `k` whose reconstruction level is `(k + 1/2)·Δ`.
    /// Values on a decision boundary go away from zero.
    pub fn code(&self, value: T) -> i64 {
        let (lo, hi) = self.code_range();
        let r = value / self.step();
        let k = if r >= T::zero() { r.floor() } else { r.ceil() - T::one() };
        let k = k.max(T::from_i64(lo).unwrap()).min(T::from_i64(hi).unwrap());
        k.to_i64().unwrap_or(if r > T::zero() { hi } else { lo })
    }

    /// Reconstruction level of a code.
    pub fn level(&self, code: i64) -> T {
        (T::from_i64(code).unwrap() + lit(0.5)) * self.step()
    }
}

/// Dot product `y_o = wᵀx` of dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotProductSpec<T> {
    pub n: usize,
    pub input: SignalModel<T>,
    pub weight: SignalModel<T>,
}

impl<T: Scalar> DotProductSpec<T> {
    /// Unit-range uniform inputs on `[0,1]` and weights on `[-1,1]`.
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            input: SignalModel::uniform_unsigned(T::one()),
            weight: SignalModel::uniform_signed(T::one()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("dot-product dimension must be at least 1".into()));
        }
        self.input.validate()?;
        self.weight.validate()?;
        if self.input.kind == SignalKind::UniformSigned || self.input.mean < T::zero() {
            return Err(Error::Config("inputs must be unsigned-valued".into()));
        }
        Ok(())
    }
}

/// Signal-to-noise figures of a dot-product pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport<T> {
    pub sqnr_qiy_db: T,
    /// Analog-noise-only SNR (`SNR_a`).
    #[serde(rename = "snr_a_db")]
    pub snr_analog_db: T,
    pub sqnr_qy_db: T,
    /// Pre-ADC SNR including input quantization (`SNR_A`).
    #[serde(rename = "snr_A_db")]
    pub snr_pre_adc_db: T,
    /// Total output SNR (`SNR_T`).
    #[serde(rename = "snr_T_db")]
    pub snr_total_db: T,
}

/// Output statistics of a dot product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpOutputStats<T> {
    pub sigma2_yo: T,
    pub y_max: T,
    pub zeta_y_db: T,
}

/// Peak-to-average ratio in dB.
///
/// With `unsigned_factor4` the unsigned-activation convention
/// `x_m²/(4·E[x²])` is used, otherwise `range_max²/σ²`.
pub fn par_db<T: Scalar>(sig: &SignalModel<T>, unsigned_factor4: bool) -> Result<T> {
    let peak2 = sig.range_max * sig.range_max;
    if unsigned_factor4 {
        if !(sig.second_moment > T::zero()) {
            return Err(Error::DegenerateSignal("zero second moment".into()));
        }
        Ok(to_db(peak2 / (lit::<T>(4.0) * sig.second_moment)))
    } else {
        if !(sig.variance > T::zero()) {
            return Err(Error::DegenerateSignal("zero variance".into()));
        }
        Ok(to_db(peak2 / sig.variance))
    }
}

/// SQNR of a B-bit uniform quantizer on a signal with the given PAR.
pub fn sqnr_uniform_db<T: Scalar>(bits: u32, par_db: T) -> T {
    bits_db::<T>(bits) - par_db
}

/// Output variance, peak and PAR of a dot product. The PAR follows the
/// additive dB relation `ζ_x + ζ_w + 10·log10 N` with the factor-4 input
/// convention, so it is not `y_max²/σ²_yo` for unsigned inputs.
pub fn dp_output_stats<T: Scalar>(dp: &DotProductSpec<T>) -> Result<DpOutputStats<T>> {
    let n = cnt::<T>(dp.n);
    let sigma2_yo = n * dp.weight.variance * dp.input.second_moment;
    let y_max = n * dp.input.range_max * dp.weight.range_max;
    let zeta_y_db = par_db(&dp.input, true)? + par_db(&dp.weight, false)? + to_db(n);
    Ok(DpOutputStats { sigma2_yo, y_max, zeta_y_db })
}

/// Input-referred (`σ²_qiy`) and output (`σ²_qy`) quantization noise variances.
pub fn quant_noise_variances<T: Scalar>(
    dp: &DotProductSpec<T>,
    qx: &QuantizerSpec<T>,
    qw: &QuantizerSpec<T>,
    qy: &QuantizerSpec<T>,
) -> (T, T) {
    let twelve = lit::<T>(12.0);
    let (dx, dw, dy) = (qx.step(), qw.step(), qy.step());
    let qiy = cnt::<T>(dp.n) / twelve
        * (dw * dw * dp.input.second_moment + dx * dx * dp.weight.variance);
    (qiy, dy * dy / twelve)
}

/// Output-referred SQNR due to input and weight quantization.
pub fn sqnr_qiy_db<T: Scalar>(bx: u32, bw: u32, zeta_x_db: T, zeta_w_db: T) -> T {
    let zx = from_db(zeta_x_db);
    let zw = from_db(zeta_w_db);
    let qx = lit::<T>(4.0).powi(-(bx as i32));
    let qw = lit::<T>(4.0).powi(-(bw as i32));
    to_db(lit::<T>(3.0) / (zx * qx + zw * qw))
}

/// Digitization SQNR when the full output range is quantized with `by` bits.
pub fn sqnr_qy_db<T: Scalar>(by: u32, zeta_x_db: T, zeta_w_db: T, n: usize) -> T {
    bits_db::<T>(by) - zeta_x_db - zeta_w_db - to_db(cnt::<T>(n))
}

/// Harmonic combination `10·log10(1/Σ 10^(−c/10))`.
pub fn combine_snr_db<T: Scalar>(components: &[T]) -> Result<T> {
    if components.is_empty() {
        return Err(Error::Empty("snr components"));
    }
    let inv = components
        .iter()
        .fold(T::zero(), |acc, &c| acc + lit::<T>(10.0).powf(-c / lit(10.0)));
    Ok(-to_db(inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn par_conventions() {
        let w = SignalModel::<f64>::uniform_signed(2.5);
        let x = SignalModel::<f64>::uniform_unsigned(0.7);
        assert_abs_diff_eq!(par_db(&w, false).unwrap(), 4.7712, epsilon = 1e-4);
        assert_abs_diff_eq!(par_db(&x, true).unwrap(), -1.2494, epsilon = 1e-4);
        let g = SignalModel::<f64>::gaussian(0.0, 1.0, 4.0);
        assert_abs_diff_eq!(par_db(&g, false).unwrap(), 12.0412, epsilon = 1e-4);
        let z = SignalModel::<f64>::gaussian(0.0, 0.0, 1.0);
        assert!(par_db(&z, false).is_err());
    }

    #[test]
    fn uniform_sqnr_examples() {
        assert_abs_diff_eq!(sqnr_uniform_db(1, 4.7712f64), 6.0206, epsilon = 1e-3);
        assert_abs_diff_eq!(sqnr_uniform_db(7, 4.77f64), 42.14, epsilon = 0.2);
        assert_abs_diff_eq!(sqnr_uniform_db(8, 12.04f64), 40.9, epsilon = 0.1);
    }

    #[test]
    fn output_stats() {
        let s = dp_output_stats(&DotProductSpec::<f64>::uniform(1)).unwrap();
        assert_abs_diff_eq!(s.sigma2_yo, 1.0 / 9.0, epsilon = 1e-15);
        let s = dp_output_stats(&DotProductSpec::<f64>::uniform(64)).unwrap();
        assert_abs_diff_eq!(s.sigma2_yo, 64.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.y_max, 64.0, epsilon = 0.0);
        assert_abs_diff_eq!(s.zeta_y_db, 21.58, epsilon = 0.01);
    }

    #[test]
    fn qiy_examples() {
        let zx = -1.2494f64;
        let zw = 4.7712f64;
        assert_abs_diff_eq!(sqnr_qiy_db(7, 7, zx, zw), 41.17, epsilon = 0.01);
        assert_abs_diff_eq!(sqnr_qiy_db(5, 9, zx, zw), sqnr_qiy_db(9, 5, zw, zx), epsilon = 1e-12);
    }

    #[test]
    fn qiy_matches_variance_form() {
        let dp = DotProductSpec::<f64>::uniform(64);
        let qx = QuantizerSpec::unsigned(7, 1.0).unwrap();
        let qw = QuantizerSpec::signed(7, 1.0).unwrap();
        let qy = QuantizerSpec::signed(8, 4.0 * (64.0f64 / 9.0).sqrt()).unwrap();
        let (qiy, qy_var) = quant_noise_variances(&dp, &qx, &qw, &qy);
        let stats = dp_output_stats(&dp).unwrap();
        let zx = par_db(&dp.input, true).unwrap();
        let zw = par_db(&dp.weight, false).unwrap();
        assert_abs_diff_eq!(to_db(stats.sigma2_yo / qiy), sqnr_qiy_db(7, 7, zx, zw), epsilon = 1e-9);
        let yc2 = 16.0 * stats.sigma2_yo;
        assert_abs_diff_eq!(qy_var, yc2 * 4f64.powi(-8) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn qy_examples() {
        let v = sqnr_qy_db(8, -1.2494f64, 4.7712, 64);
        assert_abs_diff_eq!(v, 31.35, epsilon = 0.01);
        assert_abs_diff_eq!(sqnr_qy_db(8, 0.0f64, 0.0, 16) - sqnr_qy_db(8, 0.0, 0.0, 64), 6.0206, epsilon = 1e-3);
    }

    #[test]
    fn combine_examples() {
        assert_abs_diff_eq!(combine_snr_db(&[20.0f64, 20.0]).unwrap(), 16.9897, epsilon = 1e-4);
        assert_abs_diff_eq!(combine_snr_db(&[f64::INFINITY, 38.9]).unwrap(), 38.9, epsilon = 1e-12);
        assert_abs_diff_eq!(combine_snr_db(&[31.0f64, 40.0, 40.0]).unwrap(), 30.0247, epsilon = 1e-4);
        assert!(combine_snr_db::<f64>(&[]).is_err());
    }

    #[test]
    fn mid_rise_codes() {
        let q = QuantizerSpec::signed(3, 1.0f64).unwrap();
        assert_eq!(q.level(q.code(0.0)), 0.125);
        assert_eq!(q.level(q.code(-0.25)), -0.375);
        assert_eq!(q.level(q.code(-0.1)), -0.125);
        assert_eq!(q.level(q.code(7.0)), 0.875);
        assert_eq!(q.level(q.code(-7.0)), -0.875);
        let u = QuantizerSpec::unsigned(2, 1.0f64).unwrap();
        assert_eq!(u.code_range(), (0, 3));
        assert_eq!(u.level(u.code(-1.0)), 0.125);
    }

    #[test]
    fn works_in_f32() {
        let v = sqnr_qiy_db(7u32, 7u32, -1.2494f32, 4.7712f32);
        assert!((v - 41.17).abs() < 0.01);
    }
}
