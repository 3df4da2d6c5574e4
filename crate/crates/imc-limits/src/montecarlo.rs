//! Sample-accurate Monte Carlo: draws die instances, runs the
//! quantize → analog compute → ADC pipeline of each architecture and
//! estimates SNRs against the floating-point dot product.
//!
//! Each die owns a ChaCha8 stream keyed by `(seed, die)`. Per-die sums are
//! reduced in die order, so results do not depend on the thread count.

use crate::architectures::{adc_input_range, qr_column_mean, qs_adc_step, ArchKind, ArchitectureConfig};
use crate::compute_models::{qr_sample, qs_sigma_current, qs_sigma_thermal, qs_trf, HeadroomClip, NoiseDraw};
use crate::snr_algebra::{to_db, DotProductSpec, QuantizerSpec, SignalKind, SignalModel, SnrReport};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Which analog noise sources are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSwitches {
    pub current_mismatch: bool,
    pub pulse_jitter: bool,
    pub thermal: bool,
    pub cap_mismatch: bool,
    pub injection: bool,
}

impl Default for NoiseSwitches {
    fn default() -> Self {
        Self { current_mismatch: true, pulse_jitter: true, thermal: true, cap_mismatch: true, injection: true }
    }
}

impl NoiseSwitches {
    pub fn none() -> Self {
        Self { current_mismatch: false, pulse_jitter: false, thermal: false, cap_mismatch: false, injection: false }
    }
}

/// Granularity of the frozen QS-Arch current mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchScope {
    /// Independent deviation for every (weight bit, input bit, row) access.
    #[default]
    PerAccess,
    /// One deviation per cell, reused by all input bit-planes.
    PerCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialPlan {
    pub n_dies: usize,
    pub vectors_per_die: usize,
    pub seed: u64,
    pub arch: ArchitectureConfig<f64>,
    /// ADC precision; `None` bypasses the ADC.
    #[serde(default)]
    pub b_adc: Option<u32>,
    /// ADC input range override; defaults to [`adc_input_range`].
    #[serde(default)]
    pub v_c: Option<f64>,
    #[serde(default)]
    pub mismatch: MismatchScope,
    #[serde(default)]
    pub headroom: HeadroomClip,
    #[serde(default)]
    pub noise: NoiseSwitches,
}

impl TrialPlan {
    pub fn new(arch: ArchitectureConfig<f64>, seed: u64) -> Self {
        Self {
            n_dies: 1000,
            vectors_per_die: 100,
            seed,
            arch,
            b_adc: None,
            v_c: None,
            mismatch: MismatchScope::default(),
            headroom: HeadroomClip::default(),
            noise: NoiseSwitches::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_dies == 0 || self.vectors_per_die == 0 {
            return Err(Error::Config("n_dies and vectors_per_die must be at least 1".into()));
        }
        if let Some(b) = self.b_adc {
            if !(1..=30).contains(&b) {
                return Err(Error::Config(format!("b_adc={b} out of range")));
            }
        }
        if let Some(v) = self.v_c {
            if !(v > 0.0 && v <= self.arch.tech.vdd) {
                return Err(Error::Config("v_c must lie in (0, vdd]".into()));
            }
        }
        self.arch.validate()
    }
}

/// Monte Carlo SNR estimate with its variance decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub sqnr_qiy_db: f64,
    pub snr_a_db: f64,
    #[serde(rename = "snr_A_db")]
    pub snr_pre_adc_db: f64,
    #[serde(rename = "snr_T_db")]
    pub snr_total_db: f64,
    /// ADC-only SQNR, from `y_T − y_A`.
    pub sqnr_qy_db: f64,
    pub stderr_a_db: f64,
    #[serde(rename = "stderr_A_db")]
    pub stderr_pre_adc_db: f64,
    #[serde(rename = "stderr_T_db")]
    pub stderr_total_db: f64,
    pub sigma2_yo: f64,
    pub sigma2_qiy: f64,
    pub sigma2_eta_a: f64,
    pub sigma2_qy: f64,
    /// Mean of `y_A − y_q`, removed before the variance.
    pub analog_bias: f64,
    pub n_dies: usize,
    pub vectors_per_die: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl SnrEstimate {
    pub fn report(&self) -> SnrReport<f64> {
        SnrReport {
            sqnr_qiy_db: self.sqnr_qiy_db,
            snr_analog_db: self.snr_a_db,
            sqnr_qy_db: self.sqnr_qy_db,
            snr_pre_adc_db: self.snr_pre_adc_db,
            snr_total_db: self.snr_total_db,
        }
    }
}

/// SHA-256 of the canonical JSON form of a configuration.
pub fn config_hash(cfg: &ArchitectureConfig<f64>) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

const SERIES: usize = 6;
const YO: usize = 0;
const QIY: usize = 1;
const ETA: usize = 2;
const PRE: usize = 3;
const TOT: usize = 4;
const ADC: usize = 5;

#[derive(Debug, Clone, Copy, Default)]
struct DieSums {
    s: [f64; SERIES],
    ss: [f64; SERIES],
}

impl DieSums {
    fn push(&mut self, v: [f64; SERIES]) {
        for k in 0..SERIES {
            self.s[k] += v[k];
            self.ss[k] += v[k] * v[k];
        }
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// One draw from a signal model; Gaussian draws are clipped to the range.
pub fn sample_signal<R: Rng>(m: &SignalModel<f64>, rng: &mut R) -> f64 {
    match m.kind {
        SignalKind::UniformUnsigned => m.range_max * rng.gen::<f64>(),
        SignalKind::UniformSigned => m.range_max * (2.0 * rng.gen::<f64>() - 1.0),
        SignalKind::Gaussian => {
            let lo = if m.mean >= 0.0 && m.mean - 4.0 * m.std_dev() >= -1e-12 { 0.0 } else { -m.range_max };
            (m.mean + m.std_dev() * normal(rng)).clamp(lo, m.range_max)
        }
        SignalKind::Empirical => m.samples[rng.gen_range(0..m.samples.len())],
    }
}

/// Mid-rise B-bit ADC over `[lo, lo + span]`.
fn adc_midrise(v: f64, lo: f64, span: f64, bits: u32) -> f64 {
    let levels = (1u64 << bits) as f64;
    let step = span / levels;
    let k = ((v - lo) / step).floor().clamp(0.0, levels - 1.0);
    lo + (k + 0.5) * step
}

struct Sim<'a> {
    plan: &'a TrialPlan,
    n: usize,
    bx: u32,
    bw: u32,
    qx: QuantizerSpec<f64>,
    qw: QuantizerSpec<f64>,
    scale: f64,
    v_c: f64,
    // QS-side constants
    k_h: f64,
    sigma_d: f64,
    jitter_rel: f64,
    thermal_units: f64,
    gain_cal: f64,
    du: f64,
    // QR-side config
    qr: Option<crate::compute_models::QrConfig<f64>>,
    qr_center: f64,
}

impl<'a> Sim<'a> {
    fn new(plan: &'a TrialPlan) -> Result<Self> {
        let a = &plan.arch;
        let dp: &DotProductSpec<f64> = &a.dp;
        let qx = QuantizerSpec::unsigned(a.bx, dp.input.range_max)?;
        let qw = QuantizerSpec::signed(a.bw, dp.weight.range_max)?;
        let sw = plan.noise;
        let (mut k_h, mut sigma_d, mut jitter_rel, mut thermal_units, mut gain_cal, mut du) =
            (f64::INFINITY, 0.0, 0.0, 0.0, 1.0, 1.0);
        if a.uses_qs() {
            let qs = a.qs_config();
            du = a.dvbl_unit();
            k_h = a.k_h();
            if k_h < 1.0 {
                return Err(Error::HeadroomTooSmall(k_h));
            }
            if sw.current_mismatch {
                sigma_d = qs_sigma_current(&qs)?;
            }
            if sw.pulse_jitter {
                jitter_rel = a.tech.sigma_t0 / a.tech.t0;
            }
            if sw.thermal {
                thermal_units = qs_sigma_thermal(&qs) / du;
            }
            // Finite edges shorten every pulse by t_rf; the digital back-end
            // undoes the known gain.
            gain_cal = 1.0 - qs_trf(&qs) / a.tech.t0;
        }
        let (qr, qr_center) = if a.uses_qr() {
            let mut q = a.qr_config();
            if a.kind == ArchKind::Cm || !sw.injection {
                q.tech.inj_p = 0.0;
            }
            let center = match a.kind {
                ArchKind::QrArch if sw.injection => qr_column_mean(a),
                ArchKind::QrArch => a.tech.vdd * dp.input.mean / dp.input.range_max / 2.0,
                _ => {
                    let half = (1u64 << (a.bw - 1)) as f64;
                    dp.input.mean / dp.input.range_max * dp.weight.mean / dp.weight.range_max * half * du
                }
            };
            (Some(q), center)
        } else {
            (None, 0.0)
        };
        Ok(Self {
            plan,
            n: dp.n,
            bx: a.bx,
            bw: a.bw,
            qx,
            qw,
            scale: dp.input.range_max * dp.weight.range_max,
            v_c: plan.v_c.unwrap_or_else(|| adc_input_range(a)),
            k_h,
            sigma_d,
            jitter_rel,
            thermal_units,
            gain_cal,
            du,
            qr,
            qr_center,
        })
    }

    fn die(&self, die: u64) -> Result<DieSums> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.plan.seed);
        rng.set_stream(die);
        let mut sums = DieSums::default();
        match self.plan.arch.kind {
            ArchKind::QsArch => self.run_qs(&mut rng, &mut sums),
            ArchKind::QrArch => self.run_qr(&mut rng, &mut sums)?,
            ArchKind::Cm => self.run_cm(&mut rng, &mut sums)?,
        }
        Ok(sums)
    }

    /// Draws a vector; returns `(y_o, y_q, y_q − code-domain product)` and
    /// fills the integer codes.
    fn draw_vector(&self, rng: &mut ChaCha8Rng, kx: &mut [i64], kw: &mut [i64], xq: &mut [f64]) -> (f64, f64, f64) {
        let dp = &self.plan.arch.dp;
        let (dx, dw) = (self.qx.step(), self.qw.step());
        let (mut yo, mut yq, mut code) = (0.0, 0.0, 0.0);
        for r in 0..self.n {
            let x = sample_signal(&dp.input, rng);
            let w = sample_signal(&dp.weight, rng);
            kx[r] = self.qx.code(x);
            kw[r] = self.qw.code(w);
            xq[r] = self.qx.level(kx[r]);
            yo += w * x;
            yq += self.qw.level(kw[r]) * xq[r];
            code += (kw[r] as f64 * dw) * (kx[r] as f64 * dx);
        }
        (yo, yq, yq - code)
    }

    fn finish(&self, sums: &mut DieSums, yo: f64, yq: f64, ya: f64, yt: f64) {
        sums.push([yo, yq - yo, ya - yq, ya - yo, yt - yo, yt - ya]);
    }

    fn run_qs(&self, rng: &mut ChaCha8Rng, sums: &mut DieSums) {
        let (n, bx, bw) = (self.n, self.bx as usize, self.bw as usize);
        let per_access = self.plan.mismatch == MismatchScope::PerAccess;
        let eps_len = if per_access { bw * bx * n } else { bw * n };
        let eps: Vec<f64> = (0..eps_len).map(|_| self.sigma_d * normal(rng)).collect();
        let wmask = (1i64 << bw) - 1;
        let (mut kx, mut kw, mut xq) = (vec![0i64; n], vec![0i64; n], vec![0.0; n]);
        let mut on = vec![0u32; bw * bx];
        let mut dev = vec![0.0f64; bw * bx];
        let step = self.plan.b_adc.map(|b| qs_adc_step(&self.plan.arch, b, self.v_c));
        let top = self.plan.b_adc.map(|b| ((1u64 << b) - 1) as f64);
        for _ in 0..self.plan.vectors_per_die {
            let (yo, yq, offset) = self.draw_vector(rng, &mut kx, &mut kw, &mut xq);
            on.iter_mut().for_each(|v| *v = 0);
            dev.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..n {
                let wb = kw[r] & wmask;
                let xb = kx[r];
                for i in 0..bw {
                    if (wb >> (bw - 1 - i)) & 1 == 0 {
                        continue;
                    }
                    for j in 0..bx {
                        if (xb >> (bx - 1 - j)) & 1 == 1 {
                            let p = i * bx + j;
                            on[p] += 1;
                            dev[p] += if per_access { eps[p * n + r] } else { eps[i * n + r] };
                        }
                    }
                }
            }
            let (mut ya, mut yt) = (0.0, 0.0);
            for i in 0..bw {
                let si = if i == 0 { -1.0 } else { 1.0 } * 0.5f64.powi(i as i32);
                for j in 0..bx {
                    let p = i * bx + j;
                    let k = on[p] as f64;
                    let ideal = k * self.gain_cal;
                    let noise = dev[p]
                        + self.jitter_rel * k.sqrt() * normal(rng)
                        + self.thermal_units * normal(rng);
                    let v = match self.plan.headroom {
                        HeadroomClip::AfterNoise => (ideal + noise).min(self.k_h),
                        HeadroomClip::IdealOnly => ideal.min(self.k_h) + noise,
                    } / self.gain_cal;
                    let wgt = si * 0.5f64.powi(j as i32 + 1);
                    ya += wgt * v;
                    yt += wgt
                        * match (step, top) {
                            (Some(s), Some(t)) => (v / s).round().clamp(0.0, t) * s,
                            _ => v,
                        };
                }
            }
            let ya = ya * self.scale + offset;
            let yt = yt * self.scale + offset;
            self.finish(sums, yo, yq, ya, yt);
        }
    }

    fn adc_column(&self, v: f64) -> f64 {
        match self.plan.b_adc {
            Some(b) => adc_midrise(v, self.qr_center - self.v_c / 2.0, self.v_c, b),
            None => v,
        }
    }

    fn run_qr(&self, rng: &mut ChaCha8Rng, sums: &mut DieSums) -> Result<()> {
        let (n, bw) = (self.n, self.bw as usize);
        let qr = self.qr.as_ref().expect("qr config");
        let sw = self.plan.noise;
        let caps: Vec<Vec<f64>> = (0..bw)
            .map(|_| {
                (0..n)
                    .map(|j| if sw.cap_mismatch { qr.tech.kappa * qr.caps[j].sqrt() * normal(rng) } else { 0.0 })
                    .collect()
            })
            .collect();
        let kt = qr.tech.kt();
        let sig_th: Vec<f64> = qr.caps.iter().map(|&c| if sw.thermal { (kt / c).sqrt() } else { 0.0 }).collect();
        let mut draw = NoiseDraw::<f64>::zero(n);
        let (mut kx, mut kw, mut xq) = (vec![0i64; n], vec![0i64; n], vec![0.0; n]);
        let mut volts = vec![0.0; n];
        let wmask = (1i64 << bw) - 1;
        let (xm, vdd, nf) = (self.plan.arch.dp.input.range_max, qr.tech.vdd, n as f64);
        for _ in 0..self.plan.vectors_per_die {
            let (yo, yq, _) = self.draw_vector(rng, &mut kx, &mut kw, &mut xq);
            // The DAC drives x_q; the digital back-end adds ½·Δw·Σx_q.
            let offset = 0.5 * self.qw.step() * xq.iter().sum::<f64>();
            let (mut ya, mut yt) = (0.0, 0.0);
            for (i, cap) in caps.iter().enumerate() {
                for r in 0..n {
                    let bit = ((kw[r] & wmask) >> (bw - 1 - i)) & 1;
                    volts[r] = vdd * xq[r] / xm * bit as f64;
                    draw.thermal_nodes[r] = sig_th[r] * normal(rng);
                }
                draw.cap_mismatch.copy_from_slice(cap);
                let va = qr_sample(&volts, qr, &draw)?;
                let si = if i == 0 { -1.0 } else { 1.0 } * 0.5f64.powi(i as i32);
                ya += si * nf * va / vdd;
                yt += si * nf * self.adc_column(va) / vdd;
            }
            let ya = ya * self.scale + offset;
            let yt = yt * self.scale + offset;
            self.finish(sums, yo, yq, ya, yt);
        }
        Ok(())
    }

    fn run_cm(&self, rng: &mut ChaCha8Rng, sums: &mut DieSums) -> Result<()> {
        let (n, bw) = (self.n, self.bw as usize);
        let mag_bits = bw.saturating_sub(1);
        let qr = self.qr.as_ref().expect("qr config");
        let sw = self.plan.noise;
        let eps: Vec<f64> = (0..n * mag_bits).map(|_| self.sigma_d * normal(rng)).collect();
        let mut draw = NoiseDraw::<f64>::zero(n);
        for j in 0..n {
            if sw.cap_mismatch {
                draw.cap_mismatch[j] = qr.tech.kappa * qr.caps[j].sqrt() * normal(rng);
            }
        }
        let kt = qr.tech.kt();
        let sig_th: Vec<f64> = qr.caps.iter().map(|&c| if sw.thermal { (kt / c).sqrt() } else { 0.0 }).collect();
        let half = (1u64 << mag_bits) as f64;
        let dvmax = self.plan.arch.tech.dvbl_max;
        let (mut kx, mut kw, mut xq) = (vec![0i64; n], vec![0i64; n], vec![0.0; n]);
        let mut volts = vec![0.0; n];
        let (xm, nf) = (self.plan.arch.dp.input.range_max, n as f64);
        for _ in 0..self.plan.vectors_per_die {
            let (yo, yq, _) = self.draw_vector(rng, &mut kx, &mut kw, &mut xq);
            let mut offset = 0.0;
            for r in 0..n {
                // Sign-magnitude: w_q = sign·(m + ½)·Δw.
                let (sign, m) = if kw[r] >= 0 { (1.0, kw[r]) } else { (-1.0, -kw[r] - 1) };
                offset += 0.5 * self.qw.step() * sign * xq[r];
                let mut dv = 0.0;
                for i in 0..mag_bits {
                    let h = (1u64 << (mag_bits - 1 - i)) as f64;
                    if (m >> (mag_bits - 1 - i)) & 1 == 1 {
                        let jit = self.jitter_rel / h.sqrt() * normal(rng);
                        dv += h * (self.gain_cal + eps[r * mag_bits + i] + jit);
                    }
                }
                dv = dv * self.du + self.thermal_units * self.du * normal(rng);
                let dv = match self.plan.headroom {
                    HeadroomClip::AfterNoise => dv.min(dvmax),
                    HeadroomClip::IdealOnly => {
                        let ideal = m as f64 * self.du * self.gain_cal;
                        ideal.min(dvmax) + (dv - ideal)
                    }
                } / self.gain_cal;
                volts[r] = sign * xq[r] / xm * dv;
                draw.thermal_nodes[r] = sig_th[r] * normal(rng);
            }
            let va = qr_sample(&volts, qr, &draw)?;
            let g = nf / (half * self.du) * self.scale;
            let ya = g * va + offset;
            let yt = g * self.adc_column(va) + offset;
            self.finish(sums, yo, yq, ya, yt);
        }
        Ok(())
    }
}

fn db_or_inf(signal: f64, noise: f64) -> f64 {
    if noise > 0.0 {
        to_db(signal / noise)
    } else {
        f64::INFINITY
    }
}

/// Runs the plan and returns the pooled, mean-removed SNR estimates.
pub fn run_trials(plan: &TrialPlan) -> Result<SnrEstimate> {
    plan.validate()?;
    let sim = Sim::new(plan)?;
    let dies: Vec<DieSums> = (0..plan.n_dies as u64)
        .into_par_iter()
        .map(|d| sim.die(d))
        .collect::<Result<_>>()?;
    let m = plan.vectors_per_die as f64;
    let total = m * plan.n_dies as f64;
    let mut mean = [0.0; SERIES];
    for d in &dies {
        for k in 0..SERIES {
            mean[k] += d.s[k];
        }
    }
    mean.iter_mut().for_each(|v| *v /= total);
    // Per-die mean square about the pooled mean.
    let per_die: Vec<[f64; SERIES]> = dies
        .iter()
        .map(|d| {
            let mut o = [0.0; SERIES];
            for k in 0..SERIES {
                o[k] = ((d.ss[k] - 2.0 * mean[k] * d.s[k]) / m + mean[k] * mean[k]).max(0.0);
            }
            o
        })
        .collect();
    let mut var = [0.0; SERIES];
    for d in &per_die {
        for k in 0..SERIES {
            var[k] += d[k];
        }
    }
    var.iter_mut().for_each(|v| *v /= plan.n_dies as f64);
    let stderr = |k: usize| -> f64 {
        let nd = plan.n_dies as f64;
        if plan.n_dies < 2 || var[k] <= 0.0 {
            return 0.0;
        }
        let sd = (per_die.iter().map(|d| (d[k] - var[k]).powi(2)).sum::<f64>() / (nd - 1.0)).sqrt();
        10.0 / std::f64::consts::LN_10 * sd / (nd.sqrt() * var[k])
    };
    let s = var[YO];
    Ok(SnrEstimate {
        sqnr_qiy_db: db_or_inf(s, var[QIY]),
        snr_a_db: db_or_inf(s, var[ETA]),
        snr_pre_adc_db: db_or_inf(s, var[PRE]),
        snr_total_db: db_or_inf(s, var[TOT]),
        sqnr_qy_db: db_or_inf(s, var[ADC]),
        stderr_a_db: stderr(ETA),
        stderr_pre_adc_db: stderr(PRE),
        stderr_total_db: stderr(TOT),
        sigma2_yo: s,
        sigma2_qiy: var[QIY],
        sigma2_eta_a: var[ETA],
        sigma2_qy: var[ADC],
        analog_bias: mean[ETA],
        n_dies: plan.n_dies,
        vectors_per_die: plan.vectors_per_die,
        seed: plan.seed,
        config_hash: config_hash(&plan.arch),
    })
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McValue {
    pub value: f64,
    pub stderr: f64,
}

/// Estimates `E[(S − k_h)²·1{S ≥ k_h}]` for `S` a sum of `n` Bernoulli(1/4)
/// bits. Each bit is the AND of two fair random bits.
pub fn clipping_oracle(n: usize, k_h: f64, trials: usize, seed: u64) -> Result<McValue> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    const CHUNKS: usize = 64;
    let parts: Vec<(f64, f64)> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = trials / CHUNKS + usize::from(c < trials % CHUNKS);
            let (mut s, mut ss) = (0.0, 0.0);
            for _ in 0..count {
                let mut left = n;
                let mut ones = 0u32;
                while left > 0 {
                    let take = left.min(64);
                    let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
                    ones += (rng.gen::<u64>() & rng.gen::<u64>() & mask).count_ones();
                    left -= take;
                }
                let d = (ones as f64 - k_h).max(0.0);
                s += d * d;
                ss += d.powi(4);
            }
            (s, ss)
        })
        .collect();
    let (s, ss) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let t = trials as f64;
    let mean = s / t;
    let var = (ss / t - mean * mean).max(0.0);
    Ok(McValue { value: mean, stderr: (var / t).sqrt() })
}

/// SQNR of an MPC quantizer (`by` bits clipping at `zeta·σ_yo`) measured on
/// sampled dot-product outputs.
pub fn mpc_sqnr_mc(dp: &DotProductSpec<f64>, by: u32, zeta: f64, samples: usize, seed: u64) -> Result<McValue> {
    dp.validate()?;
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    const CHUNKS: usize = 64;
    let mean_y = dp.n as f64 * dp.input.mean * dp.weight.mean;
    let sigma = (dp.n as f64 * dp.weight.variance * dp.input.second_moment).sqrt();
    let q = QuantizerSpec::signed(by, zeta * sigma)?;
    let parts: Vec<(f64, f64)> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = samples / CHUNKS + usize::from(c < samples % CHUNKS);
            let (mut sy, mut se) = (0.0, 0.0);
            for _ in 0..count {
                let mut y = 0.0;
                for _ in 0..dp.n {
                    y += sample_signal(&dp.weight, &mut rng) * sample_signal(&dp.input, &mut rng);
                }
                let yc = y - mean_y;
                let e = q.level(q.code(yc)) - yc;
                sy += yc * yc;
                se += e * e;
            }
            (sy, se)
        })
        .collect();
    let (sy, se) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    // Chunk-level spread of the error power gives the standard error.
    let t = samples as f64;
    let mse = se / t;
    let chunk_mse: Vec<f64> = parts
        .iter()
        .enumerate()
        .map(|(c, p)| p.1 / (samples / CHUNKS + usize::from(c < samples % CHUNKS)).max(1) as f64)
        .collect();
    let mu = chunk_mse.iter().sum::<f64>() / CHUNKS as f64;
    let sd = (chunk_mse.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (CHUNKS as f64 - 1.0)).sqrt();
    Ok(McValue {
        value: to_db(sy / se),
        stderr: 10.0 / std::f64::consts::LN_10 * sd / ((CHUNKS as f64).sqrt() * mse),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub analytical_db: f64,
    pub mc_db: f64,
    pub delta_db: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub tolerance_db: f64,
    pub metrics: Vec<MetricDelta>,
    pub pass: bool,
}

impl DeltaReport {
    pub fn failures(&self) -> impl Iterator<Item = &MetricDelta> {
        self.metrics.iter().filter(|m| !m.pass)
    }
}

/// Per-metric analytical − MC deltas. The estimate must come from `cfg`.
pub fn compare(
    cfg: &ArchitectureConfig<f64>,
    analytical: &SnrReport<f64>,
    estimate: &SnrEstimate,
    tolerance_db: f64,
) -> Result<DeltaReport> {
    if config_hash(cfg) != estimate.config_hash {
        return Err(Error::MismatchedConfigs("estimate was produced from a different configuration".into()));
    }
    let pairs = [
        ("snr_a_db", analytical.snr_analog_db, estimate.snr_a_db),
        ("snr_A_db", analytical.snr_pre_adc_db, estimate.snr_pre_adc_db),
        ("snr_T_db", analytical.snr_total_db, estimate.snr_total_db),
    ];
    let metrics: Vec<MetricDelta> = pairs
        .iter()
        .map(|&(name, a, m)| {
            let delta = if a == m { 0.0 } else { a - m };
            MetricDelta {
                metric: name.to_string(),
                analytical_db: a,
                mc_db: m,
                delta_db: delta,
                pass: delta.abs() <= tolerance_db,
            }
        })
        .collect();
    let pass = metrics.iter().all(|m| m.pass);
    Ok(DeltaReport { tolerance_db, metrics, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architectures::{analytical_snr, binomial_clip_moment};
    use crate::snr_algebra::quant_noise_variances;
    use crate::sweep_runner::presets::cmos65nm;

    fn small(mut plan: TrialPlan) -> TrialPlan {
        plan.n_dies = 40;
        plan.vectors_per_die = 100;
        plan
    }

    #[test]
    fn noiseless_pipeline_equals_input_quantization() {
        for arch in [
            ArchitectureConfig::qs_arch(cmos65nm(), 16, 4, 5, 0.8),
            ArchitectureConfig::qr_arch(cmos65nm(), 16, 4, 5, 3e-15),
            ArchitectureConfig::cm(cmos65nm(), 16, 4, 5, 0.8, 3e-15),
        ] {
            let mut plan = small(TrialPlan::new(arch.clone(), 3));
            plan.noise = NoiseSwitches::none();
            let est = run_trials(&plan).unwrap();
            assert!(est.sigma2_eta_a < 1e-20, "{:?}: {}", arch.kind, est.sigma2_eta_a);
            let qx = QuantizerSpec::unsigned(4, 1.0).unwrap();
            let qw = QuantizerSpec::signed(5, 1.0).unwrap();
            let (qiy, _) = quant_noise_variances(&arch.dp, &qx, &qw, &qx);
            let rel = (est.sigma2_qiy - qiy).abs() / qiy;
            assert!(rel < 0.05, "{rel}");
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let plan = small(TrialPlan::new(ArchitectureConfig::qs_arch(cmos65nm(), 32, 6, 6, 0.7), 11));
        let a = run_trials(&plan).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_trials(&plan).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn qs_matches_budget_without_clipping() {
        let arch = ArchitectureConfig::qs_arch(cmos65nm(), 32, 6, 6, 0.7);
        let est = run_trials(&small(TrialPlan::new(arch.clone(), 5))).unwrap();
        let an = analytical_snr(&arch, None).unwrap();
        assert!((est.snr_pre_adc_db - an.snr_pre_adc_db).abs() < 1.0);
    }

    #[test]
    fn clipping_oracle_matches_binomial() {
        assert_eq!(clipping_oracle(8, 8.0, 10_000, 1).unwrap().value, 0.0);
        let o = clipping_oracle(16, 8.0, 200_000, 2).unwrap();
        let exact = binomial_clip_moment(16, 8.0f64, 0.25);
        assert!((o.value - exact).abs() < 3.0 * o.stderr, "{} vs {exact}", o.value);
    }

    #[test]
    fn compare_rejects_foreign_estimate() {
        let a = ArchitectureConfig::qr_arch(cmos65nm(), 16, 4, 4, 3e-15);
        let mut plan = TrialPlan::new(a.clone(), 1);
        plan.n_dies = 2;
        plan.vectors_per_die = 10;
        let est = run_trials(&plan).unwrap();
        let other = ArchitectureConfig::qr_arch(cmos65nm(), 16, 4, 4, 9e-15);
        let an = analytical_snr(&other, None).unwrap();
        assert!(matches!(compare(&other, &an, &est, 1.0), Err(Error::MismatchedConfigs(_))));
        let same = compare(&a, &est.report(), &est, 0.0).unwrap();
        assert!(same.pass && same.metrics.iter().all(|m| m.delta_db == 0.0));
    }
}
