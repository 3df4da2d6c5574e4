//! Charge-summing (QS) and charge-redistribution (QR) compute models: ideal
//! transfer, noisy per-sample transfer, noise parameters, energy and delay.
//!
//! All quantities are SI (A, V, s, F, J). The Pelgrom coefficient is in F^0.5.

use crate::{cnt, lit, Error, Result, Scalar};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Device and circuit parameters of one process node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyProfile<T> {
    #[serde(default)]
    pub name: String,
    /// α-law transconductance parameter k′ (A/V^α).
    pub k_prime: T,
    pub alpha: T,
    pub sigma_vt: T,
    pub sigma_t0: T,
    /// Unit WL driver delay T_0.
    pub t0: T,
    pub vt: T,
    pub vdd: T,
    /// Maximum bit-line discharge ΔV_BL,max.
    pub dvbl_max: T,
    pub gm: T,
    pub wl_cox: T,
    /// Pelgrom coefficient κ (F^0.5), σ_C = κ·√C.
    pub kappa: T,
    /// Charge-injection layout constant p.
    pub inj_p: T,
    pub temperature: T,
    pub boltzmann: T,
}

impl<T: Scalar> TechnologyProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("k_prime", self.k_prime),
            ("t0", self.t0),
            ("vt", self.vt),
            ("vdd", self.vdd),
            ("dvbl_max", self.dvbl_max),
            ("gm", self.gm),
            ("wl_cox", self.wl_cox),
            ("temperature", self.temperature),
            ("boltzmann", self.boltzmann),
        ];
        for (name, v) in pos {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("technology.{name} must be positive")));
            }
        }
        let nonneg = [
            ("sigma_vt", self.sigma_vt),
            ("sigma_t0", self.sigma_t0),
            ("kappa", self.kappa),
            ("inj_p", self.inj_p),
        ];
        for (name, v) in nonneg {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("technology.{name} must be non-negative")));
            }
        }
        if !(self.alpha > T::one() && self.alpha <= lit(2.0)) {
            return Err(Error::Config("technology.alpha must lie in (1, 2]".into()));
        }
        if self.dvbl_max > self.vdd {
            return Err(Error::Config("technology.dvbl_max exceeds vdd".into()));
        }
        Ok(())
    }

    /// `kT`.
    pub fn kt(&self) -> T {
        self.boltzmann * self.temperature
    }

    pub fn cast<U: Scalar>(&self) -> TechnologyProfile<U> {
        let c = |v: T| U::from_f64(v.to_f64().unwrap()).unwrap();
        TechnologyProfile {
            name: self.name.clone(),
            k_prime: c(self.k_prime),
            alpha: c(self.alpha),
            sigma_vt: c(self.sigma_vt),
            sigma_t0: c(self.sigma_t0),
            t0: c(self.t0),
            vt: c(self.vt),
            vdd: c(self.vdd),
            dvbl_max: c(self.dvbl_max),
            gm: c(self.gm),
            wl_cox: c(self.wl_cox),
            kappa: c(self.kappa),
            inj_p: c(self.inj_p),
            temperature: c(self.temperature),
            boltzmann: c(self.boltzmann),
        }
    }
}

/// QS compute model settings for one bit-line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsConfig<T> {
    pub tech: TechnologyProfile<T>,
    /// Bit-line capacitance C.
    pub c_bl: T,
    pub v_wl: T,
    pub t_rise: T,
    pub t_fall: T,
    /// Longest allowed pulse width T_max.
    pub t_max: T,
    pub e_su: T,
    pub t_su: T,
    /// Rows that can integrate onto the bit-line.
    pub n: usize,
}

impl<T: Scalar> QsConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.tech.validate()?;
        if self.v_wl <= self.tech.vt {
            return Err(Error::CellCutoff {
                v_wl: self.v_wl.to_f64().unwrap_or(f64::NAN),
                vt: self.tech.vt.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(self.c_bl > T::zero()) {
            return Err(Error::ZeroCapacitance);
        }
        if self.t_rise < T::zero() || self.t_fall < T::zero() || self.t_max < T::zero() {
            return Err(Error::Config("pulse timing must be non-negative".into()));
        }
        Ok(())
    }

    /// Nominal cell current `k′(V_WL − V_t)^α` with W/L = 1.
    pub fn i_cell(&self) -> T {
        let od = (self.v_wl - self.tech.vt).max(T::zero());
        self.tech.k_prime * od.powf(self.tech.alpha)
    }

    /// Discharge of one cell over one unit pulse `T_0`.
    pub fn dv_unit(&self) -> T {
        self.i_cell() * self.tech.t0 / self.c_bl
    }
}

/// QR compute model settings for one charge-sharing line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrConfig<T> {
    pub tech: TechnologyProfile<T>,
    pub caps: Vec<T>,
    pub e_su: T,
    pub t_share: T,
    pub t_su: T,
}

impl<T: Scalar> QrConfig<T> {
    pub fn uniform(tech: TechnologyProfile<T>, c_o: T, n: usize) -> Self {
        Self { tech, caps: vec![c_o; n], e_su: T::zero(), t_share: T::zero(), t_su: T::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        self.tech.validate()?;
        if self.caps.is_empty() {
            return Err(Error::Empty("capacitor list"));
        }
        if self.caps.iter().any(|&c| !(c > T::zero())) {
            return Err(Error::ZeroCapacitance);
        }
        Ok(())
    }

    /// Capacitors outside the 0.5 fF – 100 fF band.
    pub fn warnings(&self) -> Vec<String> {
        let (lo, hi) = (lit::<T>(0.5e-15), lit::<T>(100e-15));
        self.caps
            .iter()
            .enumerate()
            .filter(|(_, &c)| c < lo || c > hi)
            .map(|(j, c)| format!("capacitor {j} = {c} F is outside the 0.5–100 fF band"))
            .collect()
    }
}

/// Frozen noise realization for one evaluation of a compute model.
///
/// Spatial terms (current and capacitor mismatch) belong to a die and are
/// reused across input vectors; temporal terms are redrawn per access.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseDraw<T> {
    /// Absolute cell current deviations `i_j` (A).
    pub current_mismatch: Vec<T>,
    /// Pulse width deviations `t_j` (s).
    pub pulse_jitter: Vec<T>,
    /// Capacitor deviations `c_j` (F).
    pub cap_mismatch: Vec<T>,
    /// Integrated bit-line thermal noise `v_θ` (V).
    pub thermal: T,
    /// Per-node sampled thermal noise `v_θj` for QR (V).
    pub thermal_nodes: Vec<T>,
    pub seed: u64,
    pub die: u64,
}

fn normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    lit(rng.sample::<f64, _>(StandardNormal))
}

impl<T: Scalar> NoiseDraw<T> {
    /// All-zero draw of dimension `n`.
    pub fn zero(n: usize) -> Self {
        Self {
            current_mismatch: vec![T::zero(); n],
            pulse_jitter: vec![T::zero(); n],
            cap_mismatch: vec![T::zero(); n],
            thermal: T::zero(),
            thermal_nodes: vec![T::zero(); n],
            seed: 0,
            die: 0,
        }
    }

    /// QS draw for the given nominal currents and driver stage counts `h_j`.
    pub fn qs<R: Rng + ?Sized>(cfg: &QsConfig<T>, currents: &[T], stages: &[u32], rng: &mut R) -> Result<Self> {
        check_len("currents vs stages", currents.len(), stages.len())?;
        let sd = qs_sigma_current(cfg)?;
        let n = currents.len();
        let current_mismatch = currents.iter().map(|&i| i * sd * normal::<T, R>(rng)).collect();
        let pulse_jitter = stages.iter().map(|&h| qs_sigma_pulse(h, cfg) * normal::<T, R>(rng)).collect();
        let thermal = qs_sigma_thermal(cfg) * normal::<T, R>(rng);
        Ok(Self {
            current_mismatch,
            pulse_jitter,
            cap_mismatch: vec![T::zero(); n],
            thermal,
            thermal_nodes: vec![T::zero(); n],
            seed: 0,
            die: 0,
        })
    }

    /// QR draw: capacitor mismatch and per-node thermal noise.
    pub fn qr<R: Rng + ?Sized>(cfg: &QrConfig<T>, rng: &mut R) -> Self {
        let n = cfg.caps.len();
        let kt = cfg.tech.kt();
        let cap_mismatch = cfg.caps.iter().map(|&c| cfg.tech.kappa * c.sqrt() * normal::<T, R>(rng)).collect();
        let thermal_nodes = cfg.caps.iter().map(|&c| (kt / c).sqrt() * normal::<T, R>(rng)).collect();
        Self {
            current_mismatch: vec![T::zero(); n],
            pulse_jitter: vec![T::zero(); n],
            cap_mismatch,
            thermal: T::zero(),
            thermal_nodes,
            seed: 0,
            die: 0,
        }
    }
}

fn check_len(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { what, left, right });
    }
    Ok(())
}

/// `V_o = (1/C)·Σ I_j·T_j`.
pub fn qs_ideal<T: Scalar>(currents: &[T], pulses: &[T], c: T) -> Result<T> {
    check_len("currents vs pulses", currents.len(), pulses.len())?;
    if !(c > T::zero()) {
        return Err(Error::ZeroCapacitance);
    }
    Ok(currents.iter().zip(pulses).fold(T::zero(), |a, (&i, &t)| a + i * t) / c)
}

/// Relative cell current mismatch `σ_D = α·σ_Vt/(V_WL − V_t)`.
pub fn qs_sigma_current<T: Scalar>(cfg: &QsConfig<T>) -> Result<T> {
    let od = cfg.v_wl - cfg.tech.vt;
    if !(od > T::zero()) {
        return Err(Error::CellCutoff {
            v_wl: cfg.v_wl.to_f64().unwrap_or(f64::NAN),
            vt: cfg.tech.vt.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(cfg.tech.alpha * cfg.tech.sigma_vt / od)
}

/// Effective pulse shortening from finite rise and fall times.
pub fn qs_trf<T: Scalar>(cfg: &QsConfig<T>) -> T {
    let t = &cfg.tech;
    cfg.t_rise - (cfg.v_wl - t.vt) / cfg.v_wl * (cfg.t_rise + cfg.t_fall) / (t.alpha + T::one())
}

/// Pulse width spread of an `h`-stage WL driver.
pub fn qs_sigma_pulse<T: Scalar>(h: u32, cfg: &QsConfig<T>) -> T {
    T::from_u32(h).unwrap().sqrt() * cfg.tech.sigma_t0
}

/// Integrated thermal noise on the bit-line.
pub fn qs_sigma_thermal<T: Scalar>(cfg: &QsConfig<T>) -> T {
    let t = &cfg.tech;
    (cnt::<T>(cfg.n) * cfg.t_max * t.gm * t.kt() / lit(3.0)).sqrt() / cfg.c_bl
}

/// How headroom clipping is applied in [`qs_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadroomClip {
    /// Clip the noisy discharge at the rail.
    #[default]
    AfterNoise,
    /// Clip only the ideal discharge and add noise on top.
    IdealOnly,
}

/// Noisy QS output `V_a`.
pub fn qs_sample<T: Scalar>(
    currents: &[T],
    pulses: &[T],
    cfg: &QsConfig<T>,
    draw: &NoiseDraw<T>,
    clip: HeadroomClip,
) -> Result<T> {
    let v_o = qs_ideal(currents, pulses, cfg.c_bl)?;
    check_len("currents vs mismatch draw", currents.len(), draw.current_mismatch.len())?;
    check_len("pulses vs jitter draw", pulses.len(), draw.pulse_jitter.len())?;
    let t_rf = qs_trf(cfg);
    let mut acc = T::zero();
    for j in 0..currents.len() {
        acc = acc + draw.current_mismatch[j] * pulses[j] + currents[j] * (draw.pulse_jitter[j] - t_rf);
    }
    let v_e = draw.thermal + acc / cfg.c_bl;
    let vmax = cfg.tech.dvbl_max;
    Ok(match clip {
        HeadroomClip::AfterNoise => (v_o + v_e).min(vmax),
        HeadroomClip::IdealOnly => v_o.min(vmax) + v_e,
    })
}

/// `E_QS = E[V_a]·V_dd·C + E_su`.
pub fn qs_energy<T: Scalar>(cfg: &QsConfig<T>, mean_va: T) -> T {
    mean_va * cfg.tech.vdd * cfg.c_bl + cfg.e_su
}

pub fn qs_delay<T: Scalar>(cfg: &QsConfig<T>) -> T {
    cfg.t_max + cfg.t_su
}

/// `V_o = Σ C_j V_j / Σ C_j`.
pub fn qr_ideal<T: Scalar>(node_voltages: &[T], caps: &[T]) -> Result<T> {
    check_len("voltages vs caps", node_voltages.len(), caps.len())?;
    let total = caps.iter().fold(T::zero(), |a, &c| a + c);
    if !(total > T::zero()) {
        return Err(Error::ZeroCapacitance);
    }
    Ok(node_voltages.iter().zip(caps).fold(T::zero(), |a, (&v, &c)| a + c * v) / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrNoiseParams<T> {
    pub sigma_cap: T,
    pub v_inj: T,
    pub sigma_thermal: T,
}

/// Capacitor mismatch, charge injection and kT/C noise of node `j`.
pub fn qr_noise_params<T: Scalar>(cfg: &QrConfig<T>, j: usize, vj: T) -> Result<QrNoiseParams<T>> {
    let c = *cfg.caps.get(j).ok_or(Error::LengthMismatch {
        what: "node index vs caps",
        left: j,
        right: cfg.caps.len(),
    })?;
    if !(c > T::zero()) {
        return Err(Error::ZeroCapacitance);
    }
    let t = &cfg.tech;
    Ok(QrNoiseParams {
        sigma_cap: t.kappa * c.sqrt(),
        v_inj: t.inj_p * t.wl_cox * (t.vdd - t.vt - vj) / c,
        sigma_thermal: (t.kt() / c).sqrt(),
    })
}

/// Noisy charge-shared output `V_a`. No headroom clipping applies.
pub fn qr_sample<T: Scalar>(node_voltages: &[T], cfg: &QrConfig<T>, draw: &NoiseDraw<T>) -> Result<T> {
    let n = node_voltages.len();
    check_len("voltages vs caps", n, cfg.caps.len())?;
    check_len("caps vs mismatch draw", n, draw.cap_mismatch.len())?;
    check_len("caps vs thermal draw", n, draw.thermal_nodes.len())?;
    let t = &cfg.tech;
    let (mut num, mut den) = (T::zero(), T::zero());
    for j in 0..n {
        let c = cfg.caps[j];
        let v_inj = t.inj_p * t.wl_cox * (t.vdd - t.vt - node_voltages[j]) / c;
        let ce = c + draw.cap_mismatch[j];
        num = num + ce * (node_voltages[j] + draw.thermal_nodes[j] + v_inj);
        den = den + ce;
    }
    if !(den > T::zero()) {
        return Err(Error::ZeroCapacitance);
    }
    Ok(num / den)
}

/// `E_QR = Σ E[V_dd − V_j]·V_dd·C_j + E_su`.
pub fn qr_energy<T: Scalar>(cfg: &QrConfig<T>, mean_vj: &[T]) -> Result<T> {
    check_len("mean voltages vs caps", mean_vj.len(), cfg.caps.len())?;
    let vdd = cfg.tech.vdd;
    Ok(mean_vj.iter().zip(&cfg.caps).fold(T::zero(), |a, (&v, &c)| a + (vdd - v) * vdd * c) + cfg.e_su)
}

pub fn qr_delay<T: Scalar>(cfg: &QrConfig<T>) -> T {
    cfg.t_share + cfg.t_su
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep_runner::presets::cmos65nm;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qs_cfg(v_wl: f64, n: usize) -> QsConfig<f64> {
        QsConfig {
            tech: cmos65nm(),
            c_bl: 270e-15,
            v_wl,
            t_rise: 0.0,
            t_fall: 0.0,
            t_max: 100e-12,
            e_su: 0.0,
            t_su: 0.0,
            n,
        }
    }

    #[test]
    fn ideal_qs() {
        assert_relative_eq!(qs_ideal(&[10e-6], &[100e-12], 270e-15).unwrap(), 3.7037e-3, max_relative = 1e-4);
        assert_eq!(qs_ideal::<f64>(&[], &[], 1e-15).unwrap(), 0.0);
        let a = qs_ideal(&[1e-6, 2e-6], &[1e-10, 3e-10], 1e-13).unwrap();
        let b = qs_ideal(&[1e-6, 2e-6], &[2e-10, 6e-10], 1e-13).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-14);
        assert!(qs_ideal(&[1e-6], &[], 1e-13).is_err());
    }

    #[test]
    fn current_mismatch() {
        assert_abs_diff_eq!(qs_sigma_current(&qs_cfg(0.8, 1)).unwrap(), 0.1071, epsilon = 1e-4);
        assert_abs_diff_eq!(qs_sigma_current(&qs_cfg(0.6, 1)).unwrap(), 0.2142, epsilon = 1e-4);
        let mut c = qs_cfg(0.8, 1);
        c.tech.sigma_vt = 0.0;
        assert_eq!(qs_sigma_current(&c).unwrap(), 0.0);
        assert!(matches!(qs_sigma_current(&qs_cfg(0.3, 1)), Err(Error::CellCutoff { .. })));
    }

    #[test]
    fn rise_fall() {
        let mut c = qs_cfg(0.8, 1);
        c.t_rise = 1e-10;
        c.t_fall = 1e-10;
        assert_abs_diff_eq!(qs_trf(&c) / 1e-10, 1.0 - 0.5 * 2.0 / 2.8, epsilon = 1e-12);
        assert_abs_diff_eq!(qs_trf(&c) / 1e-10, 0.643, epsilon = 1e-3);
        assert_eq!(qs_trf(&qs_cfg(0.8, 1)), 0.0);
    }

    #[test]
    fn pulse_and_thermal() {
        let c = qs_cfg(0.8, 512);
        assert_relative_eq!(qs_sigma_pulse(4, &c), 4.6e-12, max_relative = 1e-12);
        assert_abs_diff_eq!(qs_sigma_thermal(&c), 0.253e-3, epsilon = 2e-6);
        assert_eq!(qs_sigma_thermal(&qs_cfg(0.8, 0)), 0.0);
    }

    #[test]
    fn sample_reduces_to_ideal_and_clips() {
        let c = qs_cfg(0.8, 2);
        let cur = [40e-6, 20e-6];
        let pul = [1e-10, 2e-10];
        let z = NoiseDraw::zero(2);
        let v = qs_sample(&cur, &pul, &c, &z, HeadroomClip::AfterNoise).unwrap();
        assert_eq!(v, qs_ideal(&cur, &pul, c.c_bl).unwrap());
        let big = [4e-3, 4e-3];
        assert_eq!(qs_sample(&big, &pul, &c, &z, HeadroomClip::AfterNoise).unwrap(), 0.9);
        let mut d = NoiseDraw::zero(2);
        d.thermal = 0.05;
        assert_abs_diff_eq!(qs_sample(&big, &pul, &c, &d, HeadroomClip::IdealOnly).unwrap(), 0.95, epsilon = 1e-12);
        assert!(qs_sample(&cur, &pul, &c, &NoiseDraw::zero(3), HeadroomClip::AfterNoise).is_err());
    }

    #[test]
    fn sample_variance_matches_closed_form() {
        let c = qs_cfg(0.7, 1);
        let i = c.i_cell();
        let t = c.tech.t0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 100_000;
        let v0 = qs_ideal(&[i], &[t], c.c_bl).unwrap();
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..m {
            let d = NoiseDraw::qs(&c, &[i], &[1], &mut rng).unwrap();
            let e = qs_sample(&[i], &[t], &c, &d, HeadroomClip::AfterNoise).unwrap() - v0;
            s += e;
            s2 += e * e;
        }
        let var = s2 / m as f64 - (s / m as f64).powi(2);
        let sd = qs_sigma_current(&c).unwrap();
        let pulse = i * qs_sigma_pulse(1, &c) / c.c_bl;
        let expect = (i * t / c.c_bl * sd).powi(2) + pulse.powi(2) + qs_sigma_thermal(&c).powi(2);
        assert_relative_eq!(var, expect, max_relative = 0.03);
    }

    #[test]
    fn mismatch_dominates_in_qs() {
        for k in 0..=30 {
            let v = 0.5 + 0.01 * k as f64;
            let c = qs_cfg(v, 512);
            let sd = qs_sigma_current(&c).unwrap();
            assert!((0.107 - 1e-3..=0.43 + 1e-3).contains(&sd));
            assert!(qs_sigma_pulse(1, &c) / c.tech.t0 <= 0.03);
            assert!(qs_sigma_thermal(&c) <= 0.3e-3);
            assert!(sd > qs_sigma_pulse(1, &c) / c.tech.t0);
        }
    }

    #[test]
    fn energy_delay_qs() {
        let c = qs_cfg(0.8, 1);
        assert_relative_eq!(qs_energy(&c, 0.3), 81e-15, max_relative = 1e-12);
        let mut c2 = c.clone();
        c2.e_su = 5e-15;
        assert_eq!(qs_energy(&c2, 0.0), 5e-15);
        c2.c_bl *= 2.0;
        c2.e_su = 0.0;
        assert_relative_eq!(qs_energy(&c2, 0.3), 2.0 * qs_energy(&c, 0.3), max_relative = 1e-12);
        assert_eq!(qs_delay(&c), 100e-12);
    }

    #[test]
    fn ideal_qr() {
        assert_relative_eq!(qr_ideal(&[0.0, 1.0], &[1e-15, 3e-15]).unwrap(), 0.75, max_relative = 1e-12);
        assert_relative_eq!(qr_ideal(&[0.2, 0.4, 0.9], &[2e-15; 3]).unwrap(), 0.5, max_relative = 1e-12);
        let v = qr_ideal(&[0.3, 1.0, 1.0], &[1e-9, 1e-15, 1e-15]).unwrap();
        assert_abs_diff_eq!(v, 0.3, epsilon = 1e-5);
        assert!(matches!(qr_ideal(&[0.1], &[0.0]), Err(Error::ZeroCapacitance)));
    }

    #[test]
    fn qr_params_table_values() {
        let cfg = QrConfig::uniform(cmos65nm(), 3e-15, 4);
        let p = qr_noise_params(&cfg, 0, 0.5).unwrap();
        assert_abs_diff_eq!(p.sigma_cap / 1e-15, 0.1386, epsilon = 1e-4);
        assert_abs_diff_eq!(p.sigma_cap / 3e-15, 0.0462, epsilon = 1e-4);
        assert_abs_diff_eq!(p.v_inj, 5.17e-3, epsilon = 1e-5);
        assert_abs_diff_eq!(p.sigma_thermal, 1.175e-3, epsilon = 1e-5);
    }

    #[test]
    fn qr_sample_properties() {
        let mut tech = cmos65nm();
        tech.inj_p = 0.0;
        let cfg = QrConfig::uniform(tech, 3e-15, 5);
        let v = [0.1, 0.5, 0.2, 0.9, 0.0];
        assert_eq!(qr_sample(&v, &cfg, &NoiseDraw::zero(5)).unwrap(), qr_ideal(&v, &cfg.caps).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut d = NoiseDraw::qr(&cfg, &mut rng);
        d.thermal_nodes.iter_mut().for_each(|t| *t = 0.0);
        assert_relative_eq!(qr_sample(&[0.37; 5], &cfg, &d).unwrap(), 0.37, max_relative = 1e-12);
        let a = qr_sample(&v, &cfg, &d).unwrap();
        assert_eq!(a, qr_sample(&v, &cfg, &d).unwrap());
    }

    #[test]
    fn energy_delay_qr() {
        let cfg = QrConfig::uniform(cmos65nm(), 3e-15, 64);
        let e = qr_energy(&cfg, &[0.5; 64]).unwrap();
        assert_relative_eq!(e, 96e-15, max_relative = 1e-12);
        assert_eq!(qr_energy(&cfg, &[1.0; 64]).unwrap(), 0.0);
        let cfg2 = QrConfig::uniform(cmos65nm(), 6e-15, 64);
        assert_relative_eq!(qr_energy(&cfg2, &[0.5; 64]).unwrap(), 2.0 * e, max_relative = 1e-12);
        assert!(qr_energy(&cfg, &[0.5; 3]).is_err());
        assert_eq!(qr_delay(&cfg), 0.0);
    }

    #[test]
    fn qr_cap_warnings() {
        let cfg = QrConfig::uniform(cmos65nm(), 0.2e-15, 2);
        assert_eq!(cfg.warnings().len(), 2);
        assert!(QrConfig::uniform(cmos65nm(), 3e-15, 2).warnings().is_empty());
    }
}
