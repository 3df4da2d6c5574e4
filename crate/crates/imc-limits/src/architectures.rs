//! QS-Arch, QR-Arch and compute-memory (CM) architectures: closed-form noise
//! budgets, ADC input range and precision, and per-DP energy.
//!
//! Noise variances are expressed in the units of the ideal DP output `y_o`.
//! The closed forms are derived for inputs on `[0, x_m]` and weights on
//! `[−w_m, w_m]` and are rescaled by `(x_m·w_m)²`.

use crate::compute_models::{qs_sigma_current, QrConfig, QsConfig, TechnologyProfile};
use crate::precision_rules::gaussian_clip_stats;
use crate::snr_algebra::{
    combine_snr_db, dp_output_stats, quant_noise_variances, to_db, DotProductSpec, QuantizerSpec,
    SignalKind, SignalModel, SnrReport,
};
use crate::{cnt, lit, Error, Result, Scalar};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchKind {
    QsArch,
    QrArch,
    Cm,
}

impl std::fmt::Display for ArchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArchKind::QsArch => "qs_arch",
            ArchKind::QrArch => "qr_arch",
            ArchKind::Cm => "cm",
        })
    }
}

/// ADC input range convention for QR-Arch and CM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VcRule {
    /// Eight standard deviations of the ADC input, i.e. a `±4σ` window.
    #[default]
    Derived,
    /// Twice the derived span.
    Table,
}

/// Headroom clipping estimate used for CM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmClipModel {
    /// Chebyshev bound on the clipping probability.
    #[default]
    Chebyshev,
    /// Exact value for uniformly distributed weights.
    UniformExact,
}

/// Charge-injection treatment in the QR-Arch budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionModel {
    /// Signal-dependent injection acts as a gain error `p·WLC_ox/C_o`.
    #[default]
    GainError,
    /// `E[x²]·WLC_ox/C_o` inside the per-row bracket.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcCoefficients<T> {
    pub k1: T,
    pub k2: T,
}

impl<T: Scalar> Default for AdcCoefficients<T> {
    fn default() -> Self {
        Self { k1: lit(100e-15), k2: lit(1e-18) }
    }
}

/// Empirical ADC energy model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcModel<T> {
    pub k1: T,
    pub k2: T,
    pub b_adc: u32,
    pub v_c: T,
    pub vdd: T,
}

impl<T: Scalar> AdcModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > T::zero() && self.k2 > T::zero()) {
            return Err(Error::Config("ADC coefficients must be positive".into()));
        }
        if !(self.v_c > T::zero() && self.v_c <= self.vdd * lit(1.0 + 1e-12)) {
            return Err(Error::Config("ADC input range must lie in (0, vdd]".into()));
        }
        Ok(())
    }
}

/// Architecture and operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ArchitectureConfig<T> {
    pub kind: ArchKind,
    pub bx: u32,
    pub bw: u32,
    pub dp: DotProductSpec<T>,
    pub tech: TechnologyProfile<T>,
    /// Bit-line capacitance (QS-Arch, CM).
    pub c_bl: T,
    /// Word-line voltage (QS-Arch, CM).
    pub v_wl: T,
    /// Charge-sharing capacitor (QR-Arch, CM).
    pub c_o: T,
    #[serde(default)]
    pub t_rise: T,
    #[serde(default)]
    pub t_fall: T,
    #[serde(default)]
    pub e_su: T,
    #[serde(default)]
    pub t_su: T,
    #[serde(default)]
    pub t_share: T,
    #[serde(default)]
    pub e_misc: T,
    #[serde(default)]
    pub adc: AdcCoefficients<T>,
    #[serde(default)]
    pub vc_rule: VcRule,
    #[serde(default)]
    pub cm_clip: CmClipModel,
    #[serde(default)]
    pub injection: InjectionModel,
}

impl<T: Scalar> ArchitectureConfig<T> {
    fn base(kind: ArchKind, tech: TechnologyProfile<T>, n: usize, bx: u32, bw: u32) -> Self {
        Self {
            kind,
            bx,
            bw,
            dp: DotProductSpec::uniform(n),
            tech,
            c_bl: lit(270e-15),
            v_wl: lit(0.8),
            c_o: lit(3e-15),
            t_rise: T::zero(),
            t_fall: T::zero(),
            e_su: T::zero(),
            t_su: T::zero(),
            t_share: T::zero(),
            e_misc: T::zero(),
            adc: AdcCoefficients::default(),
            vc_rule: VcRule::default(),
            cm_clip: CmClipModel::default(),
            injection: InjectionModel::default(),
        }
    }

    pub fn qs_arch(tech: TechnologyProfile<T>, n: usize, bx: u32, bw: u32, v_wl: T) -> Self {
        Self { v_wl, ..Self::base(ArchKind::QsArch, tech, n, bx, bw) }
    }

    pub fn qr_arch(tech: TechnologyProfile<T>, n: usize, bx: u32, bw: u32, c_o: T) -> Self {
        Self { c_o, ..Self::base(ArchKind::QrArch, tech, n, bx, bw) }
    }

    pub fn cm(tech: TechnologyProfile<T>, n: usize, bx: u32, bw: u32, v_wl: T, c_o: T) -> Self {
        Self { v_wl, c_o, ..Self::base(ArchKind::Cm, tech, n, bx, bw) }
    }

    pub fn n(&self) -> usize {
        self.dp.n
    }

    pub fn uses_qs(&self) -> bool {
        matches!(self.kind, ArchKind::QsArch | ArchKind::Cm)
    }

    pub fn uses_qr(&self) -> bool {
        matches!(self.kind, ArchKind::QrArch | ArchKind::Cm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bx < 1 || self.bw < 1 || self.bx > 24 || self.bw > 24 {
            return Err(Error::Config(format!("precisions out of range: bx={}, bw={}", self.bx, self.bw)));
        }
        self.dp.validate()?;
        self.tech.validate()?;
        if self.uses_qs() {
            self.qs_config().validate()?;
        }
        if self.uses_qr() {
            self.qr_config().validate()?;
        }
        Ok(())
    }

    /// QS compute model of one bit-line. QS-Arch uses single `T_0` pulses over
    /// `N` rows; CM uses `B_w − 1` binary-weighted pulses on one column.
    pub fn qs_config(&self) -> QsConfig<T> {
        let (t_max, n) = match self.kind {
            ArchKind::Cm => {
                let rows = self.bw.saturating_sub(1).max(1);
                (self.tech.t0 * lit::<T>(2.0).powi(rows as i32 - 1), rows as usize)
            }
            _ => (self.tech.t0, self.n()),
        };
        QsConfig {
            tech: self.tech.clone(),
            c_bl: self.c_bl,
            v_wl: self.v_wl,
            t_rise: self.t_rise,
            t_fall: self.t_fall,
            t_max,
            e_su: self.e_su,
            t_su: self.t_su,
            n,
        }
    }

    pub fn qr_config(&self) -> QrConfig<T> {
        let mut q = QrConfig::uniform(self.tech.clone(), self.c_o, self.n());
        q.e_su = self.e_su;
        q.t_share = self.t_share;
        q.t_su = self.t_su;
        q
    }

    /// `ΔV_BL,unit = I_cell·T_0/C_BL`.
    pub fn dvbl_unit(&self) -> T {
        self.qs_config().dv_unit()
    }

    /// `k_h = ΔV_BL,max / ΔV_BL,unit`.
    pub fn k_h(&self) -> T {
        self.tech.dvbl_max / self.dvbl_unit()
    }

    fn check_headroom(&self) -> Result<T> {
        let kh = self.k_h();
        if !(kh >= T::one()) {
            return Err(Error::HeadroomTooSmall(kh.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(kh)
    }
}

/// Normalized input/weight moments (unit ranges).
#[derive(Debug, Clone, Copy)]
struct Moments<T> {
    ex: T,
    ex2: T,
    varx: T,
    sw2: T,
    abs_w: T,
    scale2: T,
}

fn abs_mean<T: Scalar>(w: &SignalModel<T>) -> T {
    match w.kind {
        SignalKind::UniformSigned => w.range_max / lit(2.0),
        SignalKind::Gaussian => w.std_dev() * lit::<T>(2.0 / std::f64::consts::PI).sqrt(),
        SignalKind::Empirical => {
            w.samples.iter().fold(T::zero(), |a, &s| a + s.abs()) / cnt(w.samples.len())
        }
        SignalKind::UniformUnsigned => w.mean,
    }
}

fn moments<T: Scalar>(dp: &DotProductSpec<T>) -> Moments<T> {
    let xm = dp.input.range_max;
    let wm = dp.weight.range_max;
    Moments {
        ex: dp.input.mean / xm,
        ex2: dp.input.second_moment / (xm * xm),
        varx: dp.input.variance / (xm * xm),
        sw2: dp.weight.variance / (wm * wm),
        abs_w: abs_mean(&dp.weight) / wm,
        scale2: (xm * wm) * (xm * wm),
    }
}

/// Per-source noise variances and derived SNRs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget<T> {
    pub sigma2_yo: T,
    pub sigma2_qiy: T,
    pub sigma2_eta_h: T,
    pub sigma2_eta_e: T,
    pub sigma2_qy: T,
    pub snr_a_db: T,
    #[serde(rename = "snr_A_db")]
    pub snr_pre_adc_db: T,
    #[serde(rename = "snr_T_db")]
    pub snr_total_db: T,
}

/// `Σ_{k ≥ k_h} (k − k_h)²·Bi(N, p)(k)` with the pmf built by a log-space
/// recursion so that large `N` does not underflow.
pub fn binomial_clip_moment<T: Scalar>(n: usize, k_h: T, p: T) -> T {
    if k_h >= cnt(n) {
        return T::zero();
    }
    let q = T::one() - p;
    let ratio = (p / q).ln();
    let mut ln_pmf = cnt::<T>(n) * q.ln();
    let mut acc = T::zero();
    for k in 0..=n {
        let kk = cnt::<T>(k);
        if kk > k_h {
            let d = kk - k_h;
            acc = acc + d * d * ln_pmf.exp();
        }
        if k < n {
            ln_pmf = ln_pmf + (cnt::<T>(n - k) / cnt::<T>(k + 1)).ln() + ratio;
        }
    }
    acc
}

/// `E[min(k, k_h)]` for `k ~ Bi(N, p)`.
pub fn binomial_clipped_mean<T: Scalar>(n: usize, k_h: T, p: T) -> T {
    let q = T::one() - p;
    let ratio = (p / q).ln();
    let mut ln_pmf = cnt::<T>(n) * q.ln();
    let mut acc = T::zero();
    for k in 0..=n {
        acc = acc + cnt::<T>(k).min(k_h) * ln_pmf.exp();
        if k < n {
            ln_pmf = ln_pmf + (cnt::<T>(n - k) / cnt::<T>(k + 1)).ln() + ratio;
        }
    }
    acc
}

/// `E[round(e)²]` for `e ~ N(0, σ²)` (round half away from zero).
pub fn rounded_gaussian_second_moment(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let s = sigma * std::f64::consts::SQRT_2;
    let mut acc = 0.0;
    let kmax = (12.0 * sigma).ceil() as i64 + 2;
    for k in 1..=kmax {
        let kf = k as f64;
        let p = 0.5 * (erfc((kf - 0.5) / s) - erfc((kf + 0.5) / s));
        acc += 2.0 * kf * kf * p;
    }
    acc
}

fn pow4<T: Scalar>(b: u32) -> T {
    lit::<T>(4.0).powi(-(b as i32))
}

fn ratio_db<T: Scalar>(signal: T, noise: T) -> T {
    if noise > T::zero() {
        to_db(signal / noise)
    } else {
        T::infinity()
    }
}

/// Closed-form noise budget without ADC quantization.
pub fn noise_budget<T: Scalar>(cfg: &ArchitectureConfig<T>) -> Result<NoiseBudget<T>> {
    cfg.validate()?;
    let dp = &cfg.dp;
    let n = cnt::<T>(dp.n);
    let m = moments(dp);
    let stats = dp_output_stats(dp)?;
    let qx = QuantizerSpec::unsigned(cfg.bx, dp.input.range_max)?;
    let qw = QuantizerSpec::signed(cfg.bw, dp.weight.range_max)?;
    let (sigma2_qiy, _) = quant_noise_variances(dp, &qx, &qw, &qx);
    let fw = T::one() - pow4::<T>(cfg.bw);
    let fx = T::one() - pow4::<T>(cfg.bx);
    let (eta_h, eta_e) = match cfg.kind {
        ArchKind::QsArch => {
            let kh = cfg.check_headroom()?;
            let sd = qs_sigma_current(&cfg.qs_config())?;
            let lam = binomial_clip_moment(dp.n, kh, lit(0.25));
            (lit::<T>(4.0 / 9.0) * fw * fx * lam, n * sd * sd * fw * fx / lit(9.0))
        }
        ArchKind::QrArch => {
            let t = &cfg.tech;
            let c = cfg.c_o;
            let cap = m.ex2 * t.kappa * t.kappa / c;
            let th = lit::<T>(2.0) * t.kt() / (c * t.vdd * t.vdd);
            let pre = lit::<T>(2.0 / 3.0) * fw * n;
            let e = match cfg.injection {
                InjectionModel::GainError => {
                    let b = t.inj_p * t.wl_cox / c;
                    pre * (cap + th) + b * b * n * m.sw2 * m.ex2
                }
                InjectionModel::Table => pre * (cap + th + m.ex2 * t.wl_cox / c),
            };
            (T::zero(), e)
        }
        ArchKind::Cm => {
            let kh = cfg.check_headroom()?;
            let sd = qs_sigma_current(&cfg.qs_config())?;
            let two_bw = lit::<T>(2.0).powi(cfg.bw as i32);
            let excess = (T::one() - lit::<T>(2.0) * kh / two_bw).max(T::zero());
            let h = match cfg.cm_clip {
                CmClipModel::Chebyshev => {
                    n * m.ex2 * m.sw2 * two_bw * two_bw * excess * excess / (lit::<T>(12.0) * kh * kh)
                }
                CmClipModel::UniformExact => n * m.ex2 * excess * excess * excess / lit(3.0),
            };
            let e = lit::<T>(2.0 / 3.0) * n * m.ex2 * (lit::<T>(0.25) - pow4::<T>(cfg.bw)) * sd * sd;
            (h, e)
        }
    };
    let eta_h = eta_h * m.scale2;
    let eta_e = eta_e * m.scale2;
    let s = stats.sigma2_yo;
    let snr_a = ratio_db(s, eta_h + eta_e);
    let snr_pre = ratio_db(s, eta_h + eta_e + sigma2_qiy);
    Ok(NoiseBudget {
        sigma2_yo: s,
        sigma2_qiy,
        sigma2_eta_h: eta_h,
        sigma2_eta_e: eta_e,
        sigma2_qy: T::zero(),
        snr_a_db: snr_a,
        snr_pre_adc_db: snr_pre,
        snr_total_db: snr_pre,
    })
}

/// ADC input range `V_c`.
pub fn adc_input_range<T: Scalar>(cfg: &ArchitectureConfig<T>) -> T {
    let n = cnt::<T>(cfg.n());
    let m = moments(&cfg.dp);
    let span = match cfg.vc_rule {
        VcRule::Derived => lit::<T>(4.0),
        VcRule::Table => lit::<T>(8.0),
    };
    let vdd = cfg.tech.vdd;
    let v = match cfg.kind {
        ArchKind::QsArch => {
            let du = cfg.dvbl_unit();
            (lit::<T>(4.0) * (lit::<T>(3.0) * n).sqrt() * du).min(cfg.tech.dvbl_max).min(n * du)
        }
        ArchKind::QrArch => span * vdd * ((m.ex2 + m.varx) / n).sqrt(),
        ArchKind::Cm => {
            let two_bw = lit::<T>(2.0).powi(cfg.bw as i32);
            span * m.sw2.sqrt() * two_bw * cfg.dvbl_unit() * m.ex2.sqrt() / n.sqrt()
        }
    };
    v.min(vdd)
}

/// Minimum ADC precision from the MPC bound and the architecture limits.
pub fn adc_min_bits<T: Scalar>(cfg: &ArchitectureConfig<T>, snr_a_db: T) -> u32 {
    let mpc = (snr_a_db + lit(16.2)) / lit(6.0);
    let log2n = cnt::<T>(cfg.n()).log2();
    let b = match cfg.kind {
        ArchKind::QsArch => mpc.min(cfg.k_h().log2()).min(log2n),
        ArchKind::QrArch => mpc.min(T::from_u32(cfg.bx).unwrap() + log2n),
        ArchKind::Cm => mpc,
    };
    b.ceil().max(T::one()).to_u32().unwrap_or(1)
}

/// ADC precision and range under the bit-growth criterion.
pub fn bgc_adc<T: Scalar>(cfg: &ArchitectureConfig<T>) -> (u32, T) {
    let n = cfg.n();
    let ceil_log2 = |v: usize| if v <= 1 { 0 } else { usize::BITS - (v - 1).leading_zeros() };
    match cfg.kind {
        ArchKind::QsArch => {
            let du = cfg.dvbl_unit();
            (ceil_log2(n + 1).max(1), (cnt::<T>(n) * du).min(cfg.tech.dvbl_max))
        }
        ArchKind::QrArch => (cfg.bx + ceil_log2(n), cfg.tech.vdd),
        ArchKind::Cm => {
            let two_bw = lit::<T>(2.0).powi(cfg.bw as i32);
            (
                crate::precision_rules::bgc_bits(cfg.bx, cfg.bw, n),
                (two_bw * cfg.dvbl_unit()).min(cfg.tech.vdd),
            )
        }
    }
}

/// Expected voltage at the QR-Arch ADC input, including the injection pedestal.
pub fn qr_column_mean<T: Scalar>(cfg: &ArchitectureConfig<T>) -> T {
    let t = &cfg.tech;
    let m = moments(&cfg.dp);
    let b = t.inj_p * t.wl_cox / cfg.c_o;
    (T::one() - b) * t.vdd * m.ex / lit(2.0) + b * (t.vdd - t.vt)
}

/// Quantization step of the QS-Arch ADC in units of `ΔV_BL,unit`. Steps finer
/// than one unit discharge are snapped to it.
pub fn qs_adc_step<T: Scalar>(cfg: &ArchitectureConfig<T>, b_adc: u32, v_c: T) -> T {
    let s = v_c / cfg.dvbl_unit() / lit::<T>(2.0).powi(b_adc as i32);
    s.max(T::one())
}

/// Output-referred ADC noise variance for `b_adc` bits over range `v_c`.
pub fn adc_noise_variance<T: Scalar>(cfg: &ArchitectureConfig<T>, b_adc: u32, v_c: T) -> Result<T> {
    cfg.validate()?;
    let n = cnt::<T>(cfg.n());
    let m = moments(&cfg.dp);
    let levels = lit::<T>(2.0).powi(b_adc as i32);
    let twelve = lit::<T>(12.0);
    let fw = T::one() - pow4::<T>(cfg.bw);
    let fx = T::one() - pow4::<T>(cfg.bx);
    let gauss_clip = |half_span: T, sigma: T| -> Result<T> {
        if !(sigma > T::zero()) {
            return Ok(T::zero());
        }
        let c = gaussian_clip_stats(half_span / sigma)?;
        Ok(c.p_clip * c.sigma2_cc * sigma * sigma)
    };
    let v = match cfg.kind {
        ArchKind::QsArch => {
            let kh = cfg.check_headroom()?;
            let s = qs_adc_step(cfg, b_adc, v_c);
            let sd = qs_sigma_current(&cfg.qs_config())?;
            let plane_q = if s <= T::one() {
                let var_e = n * sd * sd / lit(4.0);
                let r = rounded_gaussian_second_moment(var_e.sqrt().to_f64().unwrap());
                (lit::<T>(r) - var_e).max(T::zero())
            } else {
                s * s / twelve
            };
            let top = (levels - T::one()) * s;
            let p = lit::<T>(0.25);
            let extra = if top < kh {
                (binomial_clip_moment(cfg.n(), top, p) - binomial_clip_moment(cfg.n(), kh, p)).max(T::zero())
            } else {
                T::zero()
            };
            lit::<T>(4.0 / 9.0) * fw * fx * (plane_q + extra)
        }
        ArchKind::QrArch => {
            let vdd = cfg.tech.vdd;
            let b = cfg.tech.inj_p * cfg.tech.wl_cox / cfg.c_o;
            let sigma_v = (T::one() - b) * vdd * ((lit::<T>(2.0) * m.ex2 - m.ex * m.ex) / (lit::<T>(4.0) * n)).sqrt();
            let step = v_c / levels;
            let volts = step * step / twelve + gauss_clip(v_c / lit(2.0), sigma_v)?;
            let g = n / vdd;
            lit::<T>(4.0 / 3.0) * fw * g * g * volts
        }
        ArchKind::Cm => {
            let two = lit::<T>(2.0).powi(cfg.bw as i32 - 1);
            let du = cfg.dvbl_unit();
            let sigma_y = (n * m.ex2 * m.sw2).sqrt();
            let sigma_v = two * du * sigma_y / n;
            let step = v_c / levels;
            let volts = step * step / twelve + gauss_clip(v_c / lit(2.0), sigma_v)?;
            let g = n / (two * du);
            g * g * volts
        }
    };
    Ok(v * m.scale2)
}

/// Analytical SNR report. `b_adc = None` leaves out ADC quantization.
pub fn analytical_snr<T: Scalar>(cfg: &ArchitectureConfig<T>, b_adc: Option<u32>) -> Result<SnrReport<T>> {
    let nb = noise_budget_with_adc(cfg, b_adc)?;
    let sqnr_qiy = ratio_db(nb.sigma2_yo, nb.sigma2_qiy);
    Ok(SnrReport {
        sqnr_qiy_db: sqnr_qiy,
        snr_analog_db: nb.snr_a_db,
        sqnr_qy_db: ratio_db(nb.sigma2_yo, nb.sigma2_qy),
        snr_pre_adc_db: nb.snr_pre_adc_db,
        snr_total_db: nb.snr_total_db,
    })
}

/// [`noise_budget`] plus the ADC term at `b_adc` bits over [`adc_input_range`].
pub fn noise_budget_with_adc<T: Scalar>(cfg: &ArchitectureConfig<T>, b_adc: Option<u32>) -> Result<NoiseBudget<T>> {
    let mut nb = noise_budget(cfg)?;
    if let Some(b) = b_adc {
        nb.sigma2_qy = adc_noise_variance(cfg, b, adc_input_range(cfg))?;
        let total = nb.sigma2_eta_h + nb.sigma2_eta_e + nb.sigma2_qiy + nb.sigma2_qy;
        nb.snr_total_db = ratio_db(nb.sigma2_yo, total);
    }
    Ok(nb)
}

/// `k1·(B + log2(V_dd/V_c)) + k2·(V_dd/V_c)²·4^B`.
pub fn adc_energy<T: Scalar>(model: &AdcModel<T>) -> T {
    let r = model.vdd / model.v_c;
    let b = T::from_u32(model.b_adc).unwrap();
    model.k1 * (b + r.log2()) + model.k2 * r * r * lit::<T>(4.0).powi(model.b_adc as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    /// Analog compute energy per DP (QS/QR/multiplier terms).
    pub compute: T,
    pub adc_per_conversion: T,
    pub conversions: u32,
    pub adc: T,
    pub misc: T,
    pub total: T,
}

/// Per-DP energy with the given ADC.
pub fn dp_energy<T: Scalar>(cfg: &ArchitectureConfig<T>, adc: &AdcModel<T>) -> Result<EnergyBreakdown<T>> {
    cfg.validate()?;
    let n = cnt::<T>(cfg.n());
    let m = moments(&cfg.dp);
    let vdd = cfg.tech.vdd;
    let e_adc = adc_energy(adc);
    let (compute, conversions) = match cfg.kind {
        ArchKind::QsArch => {
            let kh = cfg.check_headroom()?;
            let mean_va = cfg.dvbl_unit() * binomial_clipped_mean(cfg.n(), kh, lit(0.25));
            let e_qs = crate::compute_models::qs_energy(&cfg.qs_config(), mean_va);
            (e_qs * T::from_u32(cfg.bw * cfg.bx).unwrap(), cfg.bw * cfg.bx)
        }
        ArchKind::QrArch => {
            let mean_vj = vdd * m.ex / lit(2.0);
            let qr = cfg.qr_config();
            let e_qr = crate::compute_models::qr_energy(&qr, &vec![mean_vj; cfg.n()])?;
            let e_mult = m.ex / lit(2.0) * cfg.c_o * vdd;
            ((e_qr + n * e_mult) * T::from_u32(cfg.bw).unwrap(), cfg.bw)
        }
        ArchKind::Cm => {
            let kh = cfg.check_headroom()?;
            let du = cfg.dvbl_unit();
            let levels = 1usize << cfg.bw.saturating_sub(1);
            let mean_dv = du
                * (0..levels).fold(T::zero(), |a, k| a + cnt::<T>(k).min(kh))
                / cnt::<T>(levels);
            let e_qs = crate::compute_models::qs_energy(&cfg.qs_config(), mean_dv);
            let mean_vj = m.ex * mean_dv;
            let e_qr = crate::compute_models::qr_energy(&cfg.qr_config(), &vec![mean_vj; cfg.n()])?;
            let e_mult = n * m.ex * (T::one() - m.abs_w) * cfg.c_o * vdd;
            (lit::<T>(2.0) * n * e_qs + e_qr + e_mult, 1)
        }
    };
    let adc_total = e_adc * T::from_u32(conversions).unwrap();
    Ok(EnergyBreakdown {
        compute,
        adc_per_conversion: e_adc,
        conversions,
        adc: adc_total,
        misc: cfg.e_misc,
        total: compute + adc_total + cfg.e_misc,
    })
}

/// ADC model at the configuration's supply and coefficients.
pub fn adc_model<T: Scalar>(cfg: &ArchitectureConfig<T>, b_adc: u32, v_c: T) -> AdcModel<T> {
    AdcModel { k1: cfg.adc.k1, k2: cfg.adc.k2, b_adc, v_c, vdd: cfg.tech.vdd }
}

/// Harmonic SNR of `SNR_A` and an ADC SQNR.
pub fn snr_total_db<T: Scalar>(snr_pre_adc_db: T, sqnr_adc_db: T) -> Result<T> {
    combine_snr_db(&[snr_pre_adc_db, sqnr_adc_db])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep_runner::presets::cmos65nm;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn enumerate(n: usize, kh: f64) -> f64 {
        // Sum over all 4^n outcomes grouped by count of ones.
        let mut total = 0.0;
        let mut c = 1.0f64;
        for k in 0..=n {
            if k > 0 {
                c = c * (n - k + 1) as f64 / k as f64;
            }
            let p = c * 0.25f64.powi(k as i32) * 0.75f64.powi((n - k) as i32);
            if k as f64 > kh {
                total += (k as f64 - kh).powi(2) * p;
            }
        }
        total
    }

    #[test]
    fn clip_moment_small_case() {
        assert_abs_diff_eq!(binomial_clip_moment(4, 2.0f64, 0.25), 0.0625, epsilon = 1e-15);
        let v = 4.0 / 9.0 * 0.75 * 0.75 * binomial_clip_moment(4, 2.0f64, 0.25);
        assert_abs_diff_eq!(v, 0.015625, epsilon = 1e-15);
        assert_eq!(binomial_clip_moment(16, 16.0f64, 0.25), 0.0);
        for n in 1..=32 {
            for kh in 0..=n {
                let a = binomial_clip_moment(n, kh as f64, 0.25);
                assert_abs_diff_eq!(a, enumerate(n, kh as f64), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn clip_moment_large_n_is_finite() {
        let v = binomial_clip_moment(4096, 900.0f64, 0.25);
        assert!(v.is_finite() && v > 0.0);
        let v32 = binomial_clip_moment(512, 100.0f32, 0.25);
        assert!(v32.is_finite());
    }

    #[test]
    fn qs_budget_table_values() {
        let cfg = ArchitectureConfig::qs_arch(cmos65nm(), 32, 6, 6, 0.8);
        let nb = noise_budget(&cfg).unwrap();
        assert_abs_diff_eq!(nb.snr_pre_adc_db, 19.29, epsilon = 0.02);
        assert_abs_diff_eq!(cfg.k_h(), 57.47, epsilon = 0.05);
        let cfg = ArchitectureConfig::qs_arch(cmos65nm(), 128, 6, 6, 0.6);
        assert_abs_diff_eq!(noise_budget(&cfg).unwrap().snr_pre_adc_db, 13.36, epsilon = 0.02);
        let small = ArchitectureConfig::qs_arch(cmos65nm(), 16, 6, 6, 0.8);
        assert_eq!(noise_budget(&small).unwrap().sigma2_eta_h, 0.0);
    }

    #[test]
    fn headroom_error() {
        let mut cfg = ArchitectureConfig::qs_arch(cmos65nm(), 32, 6, 6, 0.8);
        cfg.c_bl = 1e-15;
        assert!(matches!(noise_budget(&cfg), Err(Error::HeadroomTooSmall(_))));
    }

    #[test]
    fn cm_single_bit_weight_has_no_electrical_noise() {
        let cfg = ArchitectureConfig::cm(cmos65nm(), 128, 6, 1, 0.8, 3e-15);
        assert_eq!(noise_budget(&cfg).unwrap().sigma2_eta_e, 0.0);
    }

    #[test]
    fn cm_exact_clip_matches_uniform_integral() {
        let mut cfg = ArchitectureConfig::cm(cmos65nm(), 128, 6, 8, 0.8, 3e-15);
        cfg.cm_clip = CmClipModel::UniformExact;
        let wh = 2.0 * cfg.k_h() / 256.0;
        // Midpoint rule over |w| ~ U(0,1).
        let m = 200_000;
        let mut lam = 0.0;
        for i in 0..m {
            let w = (i as f64 + 0.5) / m as f64;
            if w > wh {
                lam += (w - wh).powi(2);
            }
        }
        lam /= m as f64;
        let nb = noise_budget(&cfg).unwrap();
        assert_relative_eq!(nb.sigma2_eta_h, 128.0 / 3.0 * lam, max_relative = 1e-6);
    }

    #[test]
    fn qr_budget_values() {
        let snr = |c: f64| noise_budget(&ArchitectureConfig::qr_arch(cmos65nm(), 64, 6, 7, c)).unwrap().snr_a_db;
        assert_abs_diff_eq!(snr(1e-15), 14.33, epsilon = 0.02);
        assert_abs_diff_eq!(snr(3e-15), 21.58, epsilon = 0.02);
        assert_abs_diff_eq!(snr(9e-15), 27.63, epsilon = 0.02);
        assert_eq!(noise_budget(&ArchitectureConfig::qr_arch(cmos65nm(), 64, 6, 7, 3e-15)).unwrap().sigma2_eta_h, 0.0);
    }

    #[test]
    fn adc_range_values() {
        let mut qr = ArchitectureConfig::qr_arch(cmos65nm(), 64, 6, 6, 3e-15);
        qr.vc_rule = VcRule::Table;
        assert_abs_diff_eq!(adc_input_range(&qr), 0.6455, epsilon = 1e-4);
        qr.vc_rule = VcRule::Derived;
        assert_abs_diff_eq!(adc_input_range(&qr), 0.3227, epsilon = 1e-4);
        let mut q16 = qr.clone();
        q16.dp.n = 16;
        assert_relative_eq!(adc_input_range(&q16), 2.0 * adc_input_range(&qr), max_relative = 1e-12);
        let qs = ArchitectureConfig::qs_arch(cmos65nm(), 4096, 6, 6, 0.8);
        assert_eq!(adc_input_range(&qs), 0.9);
    }

    #[test]
    fn adc_energy_values() {
        let m = AdcModel { k1: 100e-15, k2: 1e-18, b_adc: 8, v_c: 1.0, vdd: 1.0 };
        assert_relative_eq!(adc_energy(&m), 865.536e-15, max_relative = 1e-9);
        let h = AdcModel { v_c: 0.5, ..m };
        assert_relative_eq!(adc_energy(&h) - adc_energy(&m), 100e-15 + 3.0 * 65.536e-15, max_relative = 1e-9);
        let one = AdcModel { b_adc: 1, ..m };
        assert_relative_eq!(adc_energy(&one), 100.004e-15, max_relative = 1e-9);
    }

    #[test]
    fn min_bits_values() {
        let cm = ArchitectureConfig::cm(cmos65nm(), 128, 6, 6, 0.8, 3e-15);
        assert_eq!(adc_min_bits(&cm, 31.7), 8);
        let mut qs = ArchitectureConfig::qs_arch(cmos65nm(), 512, 6, 6, 0.8);
        qs.c_bl = 270e-15 * 15.99 / 57.4735;
        assert!((qs.k_h() - 16.0).abs() < 0.1);
        assert_eq!(adc_min_bits(&qs, 60.0), 4);
        assert_eq!(bgc_adc(&cm).0, 19);
    }

    #[test]
    fn energy_forms() {
        let qs = ArchitectureConfig::qs_arch(cmos65nm(), 64, 1, 1, 0.8);
        let adc = adc_model(&qs, 6, 0.5);
        let e = dp_energy(&qs, &adc).unwrap();
        assert_eq!(e.conversions, 1);
        assert_relative_eq!(e.total, e.compute + adc_energy(&adc), max_relative = 1e-12);
        let qs6 = ArchitectureConfig::qs_arch(cmos65nm(), 64, 6, 6, 0.8);
        let e6 = dp_energy(&qs6, &adc).unwrap();
        assert_relative_eq!(e6.total, 36.0 * e.total, max_relative = 1e-12);
        let qr = ArchitectureConfig::qr_arch(cmos65nm(), 64, 6, 6, 3e-15);
        let adc = adc_model(&qr, 8, 0.32);
        let e = dp_energy(&qr, &adc).unwrap();
        let e_qr = 64.0 * 0.75 * 3e-15;
        let e_mult = 0.25 * 3e-15;
        assert_relative_eq!(e.total, 6.0 * (e_qr + 64.0 * e_mult + adc_energy(&adc)), max_relative = 1e-12);
    }

    #[test]
    fn rounded_gaussian() {
        assert_eq!(rounded_gaussian_second_moment(0.0), 0.0);
        assert!(rounded_gaussian_second_moment(0.1) < 1e-6);
        let s = 3.0;
        assert_abs_diff_eq!(rounded_gaussian_second_moment(s), s * s + 1.0 / 12.0, epsilon = 1e-6);
    }
}
