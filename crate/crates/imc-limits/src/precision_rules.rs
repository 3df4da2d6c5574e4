//! Output precision assignment: bit growth (BGC), truncated bit growth (tBGC),
//! the minimum-precision criterion (MPC) and a Lloyd-Max reference quantizer.

use crate::snr_algebra::{
    bits_db, dp_output_stats, from_db, par_db, sqnr_qy_db, to_db, DotProductSpec, QuantizerSpec,
    SignalKind, SignalModel,
};
use crate::{lit, Error, Result, Scalar};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Clipping statistics of a zero-mean output clipped at `zeta_mpc·σ_yo`.
/// `sigma2_cc` is normalized to `σ_yo² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipStats<T> {
    pub zeta_mpc: T,
    pub p_clip: T,
    pub sigma2_cc: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionRule {
    Bgc,
    Tbgc,
    Mpc,
    LloydMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionAssignment<T> {
    pub rule: PrecisionRule,
    pub by: u32,
    pub clip_level: T,
    pub achieved_sqnr_db: T,
}

impl<T: Scalar> PrecisionAssignment<T> {
    pub fn bgc(dp: &DotProductSpec<T>, bx: u32, bw: u32) -> Result<Self> {
        let by = bgc_bits(bx, bw, dp.n);
        let mut a = Self::tbgc(dp, bx, bw, by)?;
        a.rule = PrecisionRule::Bgc;
        Ok(a)
    }

    /// Full-range quantization of the output with `by` bits.
    pub fn tbgc(dp: &DotProductSpec<T>, _bx: u32, _bw: u32, by: u32) -> Result<Self> {
        dp.validate()?;
        let stats = dp_output_stats(dp)?;
        let zx = par_db(&dp.input, true)?;
        let zw = par_db(&dp.weight, false)?;
        Ok(Self {
            rule: PrecisionRule::Tbgc,
            by,
            clip_level: stats.y_max,
            achieved_sqnr_db: sqnr_qy_db(by, zx, zw, dp.n),
        })
    }

    /// Clip at `zeta·σ_yo` assuming a Gaussian output.
    pub fn mpc(dp: &DotProductSpec<T>, by: u32, zeta: T) -> Result<Self> {
        dp.validate()?;
        let stats = dp_output_stats(dp)?;
        let clip = gaussian_clip_stats(zeta)?;
        Ok(Self {
            rule: PrecisionRule::Mpc,
            by,
            clip_level: zeta * stats.sigma2_yo.sqrt(),
            achieved_sqnr_db: sqnr_mpc_db(by, &clip),
        })
    }

    /// Lloyd-Max quantizer with `2^by` levels for a Gaussian output.
    pub fn lloyd_max(dp: &DotProductSpec<T>, by: u32, max_iter: usize) -> Result<Self> {
        dp.validate()?;
        let stats = dp_output_stats(dp)?;
        let sigma = stats.sigma2_yo.sqrt();
        let model = SignalModel::gaussian(T::zero(), sigma, lit::<T>(4.0) * sigma);
        let lm = lloyd_max(&model, 1usize << by, max_iter, lit(1e-12))?;
        let top = lm.codebook.last().copied().unwrap_or(T::zero());
        Ok(Self {
            rule: PrecisionRule::LloydMax,
            by,
            clip_level: top,
            achieved_sqnr_db: lm.sqnr_db,
        })
    }
}

/// `B_x + B_w + ⌈log2 N⌉`.
pub fn bgc_bits(bx: u32, bw: u32, n: usize) -> u32 {
    let n = n.max(1);
    bx + bw + (usize::BITS - (n - 1).leading_zeros()) * u32::from(n > 1)
}

/// SQNR of full-range output quantization at the BGC precision, with
/// `log2 N` taken exactly so that non-power-of-two `N` stays continuous.
pub fn sqnr_bgc_db<T: Scalar>(bx: u32, bw: u32, zeta_x_db: T, zeta_w_db: T, n: usize) -> T {
    let n = crate::cnt::<T>(n.max(1));
    bits_db::<T>(bx + bw) + to_db(n) - zeta_x_db - zeta_w_db
}

/// Adaptive Simpson on `[a, b]`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // Fixed panels first so that narrow peaks are never skipped.
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            step(f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 40)
        })
        .sum()
}

/// Two-sided clipping statistics of a standard Gaussian at `±zeta`.
///
/// The conditional variance is evaluated as a ratio of two integrals over the
/// excess `u = |y| − ζ`, both weighted by `exp(−ζu − u²/2)`, which avoids the
/// underflow of the raw tail probability at large `ζ`.
pub fn gaussian_clip_stats<T: Scalar>(zeta_mpc: T) -> Result<ClipStats<T>> {
    let z = zeta_mpc.to_f64().unwrap_or(f64::NAN);
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Config(format!("clip ratio must be non-negative, got {z}")));
    }
    let p_clip = erfc(z / std::f64::consts::SQRT_2);
    let upper = 40.0 / (1.0 + z);
    let w = |u: f64| (-z * u - 0.5 * u * u).exp();
    let den = integrate(&w, 0.0, upper, 1e-14);
    let num = integrate(&|u: f64| u * u * w(u), 0.0, upper, 1e-14);
    Ok(ClipStats {
        zeta_mpc,
        p_clip: lit(p_clip),
        sigma2_cc: lit(num / den),
    })
}

/// SQNR of a `by`-bit quantizer spanning `±ζσ` including clipping noise.
pub fn sqnr_mpc_db<T: Scalar>(by: u32, clip: &ClipStats<T>) -> T {
    let z = clip.zeta_mpc;
    let sigma2_qy = z * z * lit::<T>(4.0).powi(-(by as i32)) / lit(3.0);
    bits_db::<T>(by)
        - lit::<T>(20.0) * z.log10()
        - to_db(T::one() + clip.p_clip * clip.sigma2_cc / sigma2_qy)
}

/// Lower bound on output precision so that `SNR_A − SNR_T ≤ γ`, with the
/// rounded constants of the closed-form bound (clipping noise folded into
/// the constant 7.2).
pub fn mpc_min_bits<T: Scalar>(snr_a_db: T, gamma_db: T) -> Result<u32> {
    let margin = required_margin_db(gamma_db)?;
    let b = (snr_a_db + lit(7.2) + margin) / lit(6.0);
    Ok(b.ceil().max(T::one()).to_u32().unwrap_or(1))
}

/// `−γ − 10·log10(1 − 10^(−γ/10))`: how far the output SQNR must exceed
/// `SNR_A` for the combined loss to stay below `γ`.
pub fn required_margin_db<T: Scalar>(gamma_db: T) -> Result<T> {
    let arg = T::one() - from_db(-gamma_db);
    if !(gamma_db > T::zero()) || !gamma_db.is_finite() || !(arg > T::zero()) {
        return Err(Error::GammaTooLarge(arg.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(-gamma_db - to_db(arg))
}

/// Smallest `B_y` whose MPC SQNR (with the given clipping statistics, clipping
/// term included) keeps `SNR_A − SNR_T ≤ γ`.
pub fn mpc_min_bits_exact<T: Scalar>(snr_a_db: T, gamma_db: T, clip: &ClipStats<T>) -> Result<u32> {
    let target = snr_a_db + required_margin_db(gamma_db)?;
    for by in 1..=62 {
        if sqnr_mpc_db(by, clip) >= target {
            return Ok(by);
        }
    }
    Err(Error::Config("no precision up to 62 bits meets the target".into()))
}

/// Result of a Lloyd-Max iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LloydMaxResult<T> {
    pub codebook: Vec<T>,
    pub thresholds: Vec<T>,
    pub sqnr_db: T,
    pub iterations: usize,
    /// False when `max_iter` was reached before the codebook settled.
    pub converged: bool,
}

// Mass, first and second moment of a source restricted to [a, b].
trait CellMoments {
    fn moments(&self, a: f64, b: f64) -> (f64, f64, f64);
    fn variance(&self) -> f64;
}

struct GaussianSource {
    mu: f64,
    sigma: f64,
}

impl CellMoments for GaussianSource {
    fn moments(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf_diff = |lo: f64, hi: f64| {
            let s = std::f64::consts::SQRT_2;
            if lo >= 0.0 {
                0.5 * (erfc(lo / s) - erfc(hi / s))
            } else if hi <= 0.0 {
                0.5 * (erfc(-hi / s) - erfc(-lo / s))
            } else {
                1.0 - 0.5 * erfc(-lo / s) - 0.5 * erfc(hi / s)
            }
        };
        let lo = (a - self.mu) / self.sigma;
        let hi = (b - self.mu) / self.sigma;
        let (plo, phi_) = (phi(lo), phi(hi));
        let tlo = if lo.is_finite() { lo * plo } else { 0.0 };
        let thi = if hi.is_finite() { hi * phi_ } else { 0.0 };
        let m0 = cdf_diff(lo, hi);
        let m1t = plo - phi_;
        let m2t = m0 + tlo - thi;
        let m1 = self.mu * m0 + self.sigma * m1t;
        let m2 = self.mu * self.mu * m0 + 2.0 * self.mu * self.sigma * m1t + self.sigma * self.sigma * m2t;
        (m0, m1, m2)
    }
    fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

struct UniformSource {
    lo: f64,
    hi: f64,
}

impl CellMoments for UniformSource {
    fn moments(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let (a, b) = (a.max(self.lo), b.min(self.hi));
        if b <= a {
            return (0.0, 0.0, 0.0);
        }
        let w = self.hi - self.lo;
        ((b - a) / w, (b * b - a * a) / (2.0 * w), (b * b * b - a * a * a) / (3.0 * w))
    }
    fn variance(&self) -> f64 {
        (self.hi - self.lo).powi(2) / 12.0
    }
}

struct SampleSource {
    sorted: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl SampleSource {
    fn new(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut p1 = vec![0.0; sorted.len() + 1];
        let mut p2 = vec![0.0; sorted.len() + 1];
        for (i, &s) in sorted.iter().enumerate() {
            p1[i + 1] = p1[i] + s;
            p2[i + 1] = p2[i] + s * s;
        }
        Self { sorted, p1, p2 }
    }
}

impl CellMoments for SampleSource {
    // Half-open cells [a, b) so that every sample lands in exactly one cell.
    fn moments(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let i = self.sorted.partition_point(|&s| s < a);
        let j = self.sorted.partition_point(|&s| s < b);
        let j = if b == f64::INFINITY { self.sorted.len() } else { j };
        let n = self.sorted.len() as f64;
        ((j - i) as f64 / n, (self.p1[j] - self.p1[i]) / n, (self.p2[j] - self.p2[i]) / n)
    }
    fn variance(&self) -> f64 {
        let n = self.sorted.len() as f64;
        let m = self.p1[self.sorted.len()] / n;
        self.p2[self.sorted.len()] / n - m * m
    }
}

fn distortion(src: &dyn CellMoments, codebook: &[f64], thresholds: &[f64]) -> f64 {
    let mut d = 0.0;
    for (i, &c) in codebook.iter().enumerate() {
        let a = if i == 0 { f64::NEG_INFINITY } else { thresholds[i - 1] };
        let b = if i + 1 == codebook.len() { f64::INFINITY } else { thresholds[i] };
        let (m0, m1, m2) = src.moments(a, b);
        d += m2 - 2.0 * c * m1 + c * c * m0;
    }
    d.max(0.0)
}

/// Lloyd-Max quantizer for a signal model, started from the uniform codebook
/// over `mean ± 4σ` (or over the support for uniform sources).
pub fn lloyd_max<T: Scalar>(
    model: &SignalModel<T>,
    levels: usize,
    max_iter: usize,
    tol: T,
) -> Result<LloydMaxResult<T>> {
    if levels < 2 {
        return Err(Error::InvalidQuantizer(format!("levels = {levels}")));
    }
    let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let sigma = f(model.variance).sqrt();
    let mean = f(model.mean);
    let src: Box<dyn CellMoments> = match model.kind {
        SignalKind::Gaussian => {
            if !(sigma > 0.0) {
                return Err(Error::DegenerateSignal("zero variance".into()));
            }
            Box::new(GaussianSource { mu: mean, sigma })
        }
        SignalKind::UniformSigned => Box::new(UniformSource { lo: -f(model.range_max), hi: f(model.range_max) }),
        SignalKind::UniformUnsigned => Box::new(UniformSource { lo: 0.0, hi: f(model.range_max) }),
        SignalKind::Empirical => {
            if model.samples.is_empty() {
                return Err(Error::Empty("empirical signal samples"));
            }
            let s: Vec<f64> = model.samples.iter().map(|&v| f(v)).collect();
            Box::new(SampleSource::new(&s))
        }
    };
    let (lo, hi) = match model.kind {
        SignalKind::UniformSigned => (-f(model.range_max), f(model.range_max)),
        SignalKind::UniformUnsigned => (0.0, f(model.range_max)),
        _ => (mean - 4.0 * sigma, mean + 4.0 * sigma),
    };
    let step = (hi - lo) / levels as f64;
    let mut codebook: Vec<f64> = (0..levels).map(|i| lo + (i as f64 + 0.5) * step).collect();
    let mut thresholds = vec![0.0; levels - 1];
    let tol = f(tol);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        for i in 0..levels - 1 {
            thresholds[i] = 0.5 * (codebook[i] + codebook[i + 1]);
        }
        let mut moved: f64 = 0.0;
        for i in 0..levels {
            let a = if i == 0 { f64::NEG_INFINITY } else { thresholds[i - 1] };
            let b = if i + 1 == levels { f64::INFINITY } else { thresholds[i] };
            let (m0, m1, _) = src.moments(a, b);
            // Empty cells keep their level.
            if m0 > 0.0 {
                let c = m1 / m0;
                moved = moved.max((c - codebook[i]).abs());
                codebook[i] = c;
            }
        }
        if moved < tol {
            converged = true;
            break;
        }
    }
    for i in 0..levels - 1 {
        thresholds[i] = 0.5 * (codebook[i] + codebook[i + 1]);
    }
    let d = distortion(src.as_ref(), &codebook, &thresholds);
    let var = src.variance();
    Ok(LloydMaxResult {
        codebook: codebook.iter().map(|&c| lit(c)).collect(),
        thresholds: thresholds.iter().map(|&c| lit(c)).collect(),
        sqnr_db: lit(10.0 * (var / d).log10()),
        iterations,
        converged,
    })
}

/// Mid-rise quantize-and-clip: `0 → +Δ/2`, values above the clip level map to
/// `clip − Δ/2`.
pub fn quantize<T: Scalar>(value: T, spec: &QuantizerSpec<T>) -> T {
    spec.level(spec.code(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bgc_examples() {
        assert_eq!(bgc_bits(7, 7, 4), 16);
        assert_eq!(bgc_bits(7, 7, 64), 20);
        assert_eq!(bgc_bits(1, 1, 1), 2);
        assert_eq!(bgc_bits(1, 1, 65), 9);
        assert_eq!(bgc_bits(1, 1, 3), 4);
    }

    #[test]
    fn bgc_matches_full_range_identity() {
        for &n in &[1usize, 4, 64, 1024] {
            let a = sqnr_bgc_db(7, 7, -1.2494f64, 4.7712, n);
            let b = sqnr_qy_db(bgc_bits(7, 7, n), -1.2494, 4.7712, n);
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        let d = sqnr_bgc_db(6, 6, 0.0f64, 0.0, 256) - sqnr_bgc_db(6, 6, 0.0, 0.0, 64);
        assert_abs_diff_eq!(d, 6.0206, epsilon = 1e-3);
    }

    #[test]
    fn clip_stats_values() {
        let c = gaussian_clip_stats(4.0f64).unwrap();
        assert_abs_diff_eq!(c.p_clip, 6.334e-5, epsilon = 1e-8);
        assert_eq!(gaussian_clip_stats(0.0f64).unwrap().p_clip, 1.0);
        assert_abs_diff_eq!(gaussian_clip_stats(0.0f64).unwrap().sigma2_cc, 1.0, epsilon = 1e-10);
        assert!(gaussian_clip_stats(40.0f64).unwrap().p_clip < 1e-300);
        assert!(gaussian_clip_stats(-1.0f64).is_err());
    }

    #[test]
    fn clip_variance_matches_mills_ratio_form() {
        // (1+ζ²) − ζ·φ(ζ)/Q(ζ) for the standard Gaussian tail.
        for &z in &[0.5f64, 1.0, 2.0, 3.0, 4.0, 5.0] {
            let q = 0.5 * erfc(z / std::f64::consts::SQRT_2);
            let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let closed = 1.0 + z * z - z * phi / q;
            let c = gaussian_clip_stats(z).unwrap();
            // The closed form cancels ~ζ² digits; scale the bound accordingly.
            let eps = 1e-12 + z * phi / q * 1e-9;
            assert_abs_diff_eq!(c.sigma2_cc, closed, epsilon = eps);
        }
        // 30-digit quadrature references.
        for (z, v) in [(1.0f64, 0.474864723839018791), (4.0, 0.0975714220421157090), (5.0, 0.0674801643707894219)] {
            assert_abs_diff_eq!(gaussian_clip_stats(z).unwrap().sigma2_cc, v, epsilon = 1e-13);
        }
    }

    #[test]
    fn mpc_without_clipping_is_uniform_sqnr() {
        let c = ClipStats { zeta_mpc: 4.0f64, p_clip: 0.0, sigma2_cc: 0.3 };
        assert_abs_diff_eq!(
            sqnr_mpc_db(8, &c),
            crate::snr_algebra::sqnr_uniform_db(8, 20.0 * 4f64.log10()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mpc_peak_near_four_sigma() {
        let best = (0..=8)
            .map(|i| 2.0 + 0.5 * i as f64)
            .map(|z| (z, sqnr_mpc_db(8, &gaussian_clip_stats(z).unwrap())))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert_eq!(best.0, 4.0);
        assert!(best.1 > 40.0 && best.1 < 41.0);
    }

    #[test]
    fn min_bits_examples() {
        assert_eq!(mpc_min_bits(31.0f64, 0.5).unwrap(), 8);
        assert_eq!(mpc_min_bits(40.0f64, 0.5).unwrap(), 10);
        assert_abs_diff_eq!(required_margin_db(0.5f64).unwrap(), 9.136, epsilon = 1e-3);
        assert!(mpc_min_bits(30.0f64, 0.0).is_err());
        assert!(mpc_min_bits(30.0f64, f64::INFINITY).is_err());
    }

    #[test]
    fn exact_min_bits_meets_gamma() {
        let clip = gaussian_clip_stats(4.0f64).unwrap();
        for snr in [10.0, 20.0, 31.0, 40.0] {
            let b = mpc_min_bits_exact(snr, 0.5, &clip).unwrap();
            let t = crate::snr_algebra::combine_snr_db(&[snr, sqnr_mpc_db(b, &clip)]).unwrap();
            assert!(snr - t <= 0.5);
            if b > 1 {
                let t1 = crate::snr_algebra::combine_snr_db(&[snr, sqnr_mpc_db(b - 1, &clip)]).unwrap();
                assert!(snr - t1 > 0.5);
            }
        }
    }

    #[test]
    fn two_level_gaussian() {
        let g = SignalModel::gaussian(0.0f64, 1.0, 4.0);
        let lm = lloyd_max(&g, 2, 1000, 1e-14).unwrap();
        let r = (2.0 / std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(lm.codebook[0], -r, epsilon = 1e-10);
        assert_abs_diff_eq!(lm.codebook[1], r, epsilon = 1e-10);
        // Brute-force search over the symmetric level.
        let best = (1..4000)
            .map(|i| i as f64 * 5e-4)
            .map(|c| (c, 1.0 - 2.0 * c * (2.0 / std::f64::consts::PI).sqrt() + c * c))
            .fold((0.0, f64::MAX), |a, b| if b.1 < a.1 { b } else { a });
        assert_abs_diff_eq!(best.0, r, epsilon = 1e-3);
        assert!(lm.converged);
    }

    #[test]
    fn uniform_source_stays_uniform() {
        let u = SignalModel::uniform_signed(1.0f64);
        for b in 1..=5u32 {
            let lm = lloyd_max(&u, 1 << b, 100, 1e-14).unwrap();
            assert_abs_diff_eq!(lm.sqnr_db, 20.0 * 2f64.log10() * b as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn empirical_matches_kmeans_step() {
        let s = SignalModel::empirical(vec![-3.0f64, -1.0, 1.0, 3.0]).unwrap();
        let lm = lloyd_max(&s, 2, 100, 1e-14).unwrap();
        assert_eq!(lm.codebook, vec![-2.0, 2.0]);
        assert_abs_diff_eq!(lm.sqnr_db, 10.0 * 5f64.log10(), epsilon = 1e-12);
    }

    #[test]
    fn quantize_convention() {
        let q = QuantizerSpec::signed(4, 1.0f64).unwrap();
        assert_eq!(quantize(0.0, &q), 0.0625);
        assert_eq!(quantize(5.0, &q), 1.0 - 0.0625);
        let fine = QuantizerSpec::signed(40, 1.0f64).unwrap();
        assert_abs_diff_eq!(quantize(0.3141, &fine), 0.3141, epsilon = 1e-11);
    }
}
