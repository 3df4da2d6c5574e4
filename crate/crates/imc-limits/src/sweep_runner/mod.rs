//! Experiment orchestration: named presets and custom grids evaluated into
//! [`ResultTable`]s, optionally with Monte Carlo columns.

pub mod config;
pub mod emit;
pub mod presets;

use crate::architectures::{
    adc_energy, adc_input_range, adc_min_bits, adc_model, analytical_snr, bgc_adc, dp_energy, ArchKind,
    ArchitectureConfig,
};
use crate::compute_models::{qs_sigma_current, TechnologyProfile};
use crate::montecarlo::{run_trials, SnrEstimate, TrialPlan};
use crate::precision_rules::{gaussian_clip_stats, lloyd_max, sqnr_mpc_db, PrecisionAssignment};
use crate::snr_algebra::{DotProductSpec, SignalModel};
use crate::{Error, Result};
use config::TrialOverrides;
use emit::{Cell, Column, Metadata, ResultTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig4a,
    Fig4b,
    Fig7a,
    Fig7b,
    Fig8a,
    Fig8b,
    Fig9a,
    Fig9b,
    Fig10,
    Fig11,
    Custom,
}

impl Experiment {
    pub const PRESETS: [Experiment; 10] = [
        Experiment::Fig4a,
        Experiment::Fig4b,
        Experiment::Fig7a,
        Experiment::Fig7b,
        Experiment::Fig8a,
        Experiment::Fig8b,
        Experiment::Fig9a,
        Experiment::Fig9b,
        Experiment::Fig10,
        Experiment::Fig11,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig4a => "fig4a",
            Experiment::Fig4b => "fig4b",
            Experiment::Fig7a => "fig7a",
            Experiment::Fig7b => "fig7b",
            Experiment::Fig8a => "fig8a",
            Experiment::Fig8b => "fig8b",
            Experiment::Fig9a => "fig9a",
            Experiment::Fig9b => "fig9b",
            Experiment::Fig10 => "fig10",
            Experiment::Fig11 => "fig11",
            Experiment::Custom => "custom",
        }
    }

    /// Grid axes a preset lets the user override.
    fn axes(self) -> &'static [&'static str] {
        match self {
            Experiment::Fig4a => &["n"],
            Experiment::Fig4b => &["zeta", "b_y"],
            Experiment::Fig7a => &["n", "v_wl"],
            Experiment::Fig7b => &["n", "v_wl"],
            Experiment::Fig8a => &["bx", "c_o"],
            Experiment::Fig8b => &["c_o"],
            Experiment::Fig9a => &["bw", "v_wl"],
            Experiment::Fig9b => &["v_wl"],
            Experiment::Fig10 => &["n"],
            Experiment::Fig11 => &[],
            Experiment::Custom => &["n", "bx", "bw", "v_wl", "c_o", "c_bl", "b_adc"],
        }
    }
}

/// One sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub grid: Vec<GridAxis>,
    pub output_path: Option<PathBuf>,
    pub mc_enabled: bool,
    pub trials: TrialOverrides,
    pub technology: TechnologyProfile<f64>,
    pub c_bl: f64,
    /// Base architecture of a custom sweep.
    pub base: Option<ArchitectureConfig<f64>>,
}

impl SweepSpec {
    /// Preset with the reference profile and default trials.
    pub fn preset(experiment: Experiment) -> Self {
        let p = presets::preset("cmos65nm").expect("bundled profile");
        Self {
            experiment,
            grid: Vec::new(),
            output_path: None,
            mc_enabled: false,
            trials: TrialOverrides::default(),
            technology: p.technology,
            c_bl: p.c_bl,
            base: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = self.experiment.axes();
        for g in &self.grid {
            if !allowed.contains(&g.name.as_str()) {
                return Err(Error::Config(format!(
                    "grid parameter '{}' is not valid for {} (allowed: {})",
                    g.name,
                    self.experiment.name(),
                    allowed.join(", ")
                )));
            }
            if g.values.is_empty() {
                return Err(Error::EmptySweep);
            }
            if g.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("grid parameter '{}' has a non-finite value", g.name)));
            }
        }
        if self.experiment == Experiment::Custom {
            if self.grid.is_empty() {
                return Err(Error::EmptySweep);
            }
            if self.base.is_none() {
                return Err(Error::Config("custom sweep needs an architecture".into()));
            }
        }
        if self.mc_enabled && (self.trials.n_dies == 0 || self.trials.vectors_per_die == 0) {
            return Err(Error::Config("trial counts must be at least 1".into()));
        }
        Ok(())
    }

    fn axis(&self, name: &str, default: &[f64]) -> Vec<f64> {
        self.grid.iter().find(|g| g.name == name).map(|g| g.values.clone()).unwrap_or_else(|| default.to_vec())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a technology profile's canonical JSON.
pub fn profile_hash(t: &TechnologyProfile<f64>) -> String {
    sha256_hex(&serde_json::to_vec(t).expect("profile serializes"))
}

/// Analytical results at one design point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub snr_a_db: f64,
    pub snr_pre_adc_db: f64,
    pub b_adc: u32,
    pub v_c: f64,
    pub snr_total_db: f64,
    pub e_adc: f64,
    pub e_dp: f64,
}

/// Evaluates a configuration; `b_adc = None` picks the minimum-precision bound.
pub fn evaluate(cfg: &ArchitectureConfig<f64>, b_adc: Option<u32>) -> Result<Point> {
    let pre = analytical_snr(cfg, None)?;
    let b = b_adc.unwrap_or_else(|| adc_min_bits(cfg, pre.snr_pre_adc_db));
    let v_c = adc_input_range(cfg);
    let total = analytical_snr(cfg, Some(b))?;
    let adc = adc_model(cfg, b, v_c);
    let e = dp_energy(cfg, &adc)?;
    Ok(Point {
        snr_a_db: pre.snr_analog_db,
        snr_pre_adc_db: pre.snr_pre_adc_db,
        b_adc: b,
        v_c,
        snr_total_db: total.snr_total_db,
        e_adc: adc_energy(&adc),
        e_dp: e.total,
    })
}

fn point_columns() -> Vec<Column> {
    vec![
        Column::new("snr_a", "dB"),
        Column::new("snr_A", "dB"),
        Column::new("b_adc", "bit"),
        Column::new("v_c", "V"),
        Column::new("snr_T", "dB"),
        Column::new("e_adc", "J"),
        Column::new("e_dp", "J"),
    ]
}

fn point_cells(p: &Point) -> Vec<Cell> {
    vec![
        p.snr_a_db.into(),
        p.snr_pre_adc_db.into(),
        p.b_adc.into(),
        p.v_c.into(),
        p.snr_total_db.into(),
        p.e_adc.into(),
        p.e_dp.into(),
    ]
}

fn mc_columns() -> Vec<Column> {
    vec![
        Column::new("mc_snr_a", "dB"),
        Column::new("mc_snr_A", "dB"),
        Column::new("mc_snr_T", "dB"),
        Column::new("mc_stderr_A", "dB"),
        Column::new("delta_A", "dB"),
    ]
}

fn mc_cells(p: &Point, e: &SnrEstimate) -> Vec<Cell> {
    vec![
        e.snr_a_db.into(),
        e.snr_pre_adc_db.into(),
        e.snr_total_db.into(),
        e.stderr_pre_adc_db.into(),
        (p.snr_pre_adc_db - e.snr_pre_adc_db).into(),
    ]
}

/// Monte Carlo plan for a design point under the sweep's trial settings.
pub fn trial_plan(cfg: &ArchitectureConfig<f64>, b_adc: Option<u32>, t: &TrialOverrides) -> TrialPlan {
    let mut plan = TrialPlan::new(cfg.clone(), t.seed);
    plan.n_dies = t.n_dies;
    plan.vectors_per_die = t.vectors_per_die;
    plan.b_adc = b_adc;
    plan.mismatch = t.mismatch;
    plan.noise = t.noise;
    plan
}

fn arch_point_row(cfg: &ArchitectureConfig<f64>, b_adc: Option<u32>, spec: &SweepSpec) -> Result<Vec<Cell>> {
    let p = evaluate(cfg, b_adc)?;
    let mut row = point_cells(&p);
    if spec.mc_enabled {
        let est = run_trials(&trial_plan(cfg, Some(p.b_adc), &spec.trials))?;
        row.extend(mc_cells(&p, &est));
    }
    Ok(row)
}

/// Builds a table from keyed rows. A failing point keeps its key cells, gets
/// NaN values and an `error: …` status.
fn tabulate<K, F>(spec: &SweepSpec, mut columns: Vec<Column>, keys: Vec<K>, key_cells: impl Fn(&K) -> Vec<Cell>, f: F) -> Result<ResultTable>
where
    K: Sync,
    F: Fn(&K) -> Result<Vec<Cell>> + Sync,
{
    let n_key = key_cells(keys.first().ok_or(Error::EmptySweep)?).len();
    let width = columns.len() - n_key;
    columns.push(Column::new("status", "label"));
    let results: Vec<Result<Vec<Cell>>> = keys.par_iter().map(&f).collect();
    let mut table = ResultTable::new(columns, metadata(spec));
    for (k, r) in keys.iter().zip(results) {
        let mut row = key_cells(k);
        match r {
            Ok(v) => {
                row.extend(v);
                row.push("ok".into());
            }
            Err(e) => {
                row.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(width));
                row.push(format!("error: {e}").into());
            }
        }
        table.push(row)?;
    }
    Ok(table)
}

fn metadata(spec: &SweepSpec) -> Metadata {
    let mut settings = BTreeMap::new();
    settings.insert("mc_enabled".into(), spec.mc_enabled.to_string());
    if spec.mc_enabled {
        let t = &spec.trials;
        settings.insert("n_dies".into(), t.n_dies.to_string());
        settings.insert("vectors_per_die".into(), t.vectors_per_die.to_string());
        settings.insert("mismatch".into(), format!("{:?}", t.mismatch));
        settings.insert("estimator".into(), "pooled mean-removed variance of signal-pair differences".into());
    }
    let profile_hash = if spec.experiment == Experiment::Fig11 {
        let all: Vec<String> = presets::names().iter().map(|n| presets::raw(n).unwrap().to_string()).collect();
        sha256_hex(all.concat().as_bytes())
    } else {
        profile_hash(&spec.technology)
    };
    Metadata {
        experiment: spec.experiment.name().into(),
        seed: spec.trials.seed,
        profile_hash,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        settings,
    }
}

fn cols(spec: &SweepSpec, keys: &[(&str, &str)], with_point: bool) -> Vec<Column> {
    let mut c: Vec<Column> = keys.iter().map(|(n, u)| Column::new(n, u)).collect();
    if with_point {
        c.extend(point_columns());
        if spec.mc_enabled {
            c.extend(mc_columns());
        }
    }
    c
}

fn as_u32(v: f64, what: &str) -> Result<u32> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(Error::Config(format!("{what} must be a positive integer, got {v}")))
    }
}

fn as_usize(v: f64, what: &str) -> Result<usize> {
    as_u32(v, what).map(|x| x as usize)
}

fn qs(spec: &SweepSpec, n: usize, bx: u32, bw: u32, v_wl: f64) -> ArchitectureConfig<f64> {
    let mut c = ArchitectureConfig::qs_arch(spec.technology.clone(), n, bx, bw, v_wl);
    c.c_bl = spec.c_bl;
    c
}

fn qr(spec: &SweepSpec, n: usize, bx: u32, bw: u32, c_o: f64) -> ArchitectureConfig<f64> {
    ArchitectureConfig::qr_arch(spec.technology.clone(), n, bx, bw, c_o)
}

fn cm(spec: &SweepSpec, n: usize, bx: u32, bw: u32, v_wl: f64, c_o: f64) -> ArchitectureConfig<f64> {
    let mut c = ArchitectureConfig::cm(spec.technology.clone(), n, bx, bw, v_wl, c_o);
    c.c_bl = spec.c_bl;
    c
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let k = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=k).map(|i| ((start + i as f64 * step) * 1e6).round() / 1e6).collect()
}

fn pow2(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|e| (1u64 << e) as f64).collect()
}

/// Runs a preset or custom sweep.
pub fn run_experiment(spec: &SweepSpec) -> Result<ResultTable> {
    spec.validate()?;
    match spec.experiment {
        Experiment::Fig4a => fig4a(spec),
        Experiment::Fig4b => fig4b(spec),
        Experiment::Fig7a => fig7a(spec),
        Experiment::Fig7b => fig7b(spec),
        Experiment::Fig8a => fig8a(spec),
        Experiment::Fig8b => fig8b(spec),
        Experiment::Fig9a => fig9a(spec),
        Experiment::Fig9b => fig9b(spec),
        Experiment::Fig10 => fig10(spec),
        Experiment::Fig11 => fig11(spec),
        Experiment::Custom => custom(spec),
    }
}

/// Output precision rules at `B_x = B_w = 7`, `B_y = 8`.
fn fig4a(spec: &SweepSpec) -> Result<ResultTable> {
    let ns = spec.axis("n", &[16.0, 64.0, 256.0, 1024.0]);
    let mut keys = Vec::new();
    for &n in &ns {
        let n = as_usize(n, "n")?;
        for method in ["bgc", "tbgc", "mpc"] {
            keys.push((n, method));
        }
    }
    let mut columns = cols(spec, &[("n", "1"), ("method", "label")], false);
    columns.extend([Column::new("b_y", "bit"), Column::new("sqnr_qy", "dB")]);
    if spec.mc_enabled {
        columns.extend([Column::new("mc_sqnr_qy", "dB"), Column::new("mc_stderr", "dB")]);
    }
    let samples = spec.trials.n_dies * spec.trials.vectors_per_die;
    tabulate(spec, columns, keys, |&(n, m)| vec![n.into(), m.into()], |&(n, m)| {
        let dp = DotProductSpec::uniform(n);
        let a = match m {
            "bgc" => PrecisionAssignment::bgc(&dp, 7, 7)?,
            "tbgc" => PrecisionAssignment::tbgc(&dp, 7, 7, 8)?,
            _ => PrecisionAssignment::mpc(&dp, 8, 4.0)?,
        };
        let mut row: Vec<Cell> = vec![a.by.into(), a.achieved_sqnr_db.into()];
        if spec.mc_enabled {
            if m == "mpc" {
                let v = crate::montecarlo::mpc_sqnr_mc(&dp, 8, 4.0, samples, spec.trials.seed)?;
                row.extend([v.value.into(), v.stderr.into()]);
            } else {
                row.extend([f64::NAN.into(), f64::NAN.into()]);
            }
        }
        Ok(row)
    })
}

/// MPC SQNR against the clipping factor for a Gaussian output.
fn fig4b(spec: &SweepSpec) -> Result<ResultTable> {
    let zetas = spec.axis("zeta", &range(2.0, 6.0, 0.5));
    let bys = spec.axis("b_y", &[8.0]);
    let mut lm = BTreeMap::new();
    let gauss = SignalModel::gaussian(0.0, 1.0, 4.0);
    for &b in &bys {
        let b = as_u32(b, "b_y")?;
        if b > 12 {
            return Err(Error::Config("b_y above 12 is not supported for the Lloyd-Max column".into()));
        }
        lm.insert(b, lloyd_max(&gauss, 1usize << b, 2000, 1e-12)?.sqnr_db);
    }
    let mut keys = Vec::new();
    for &b in &bys {
        for &z in &zetas {
            keys.push((b as u32, z));
        }
    }
    let mut columns = cols(spec, &[("b_y", "bit"), ("zeta", "1")], false);
    columns.extend([Column::new("sqnr_mpc", "dB"), Column::new("lloyd_max", "dB")]);
    tabulate(spec, columns, keys, |&(b, z)| vec![b.into(), z.into()], |&(b, z)| {
        let clip = gaussian_clip_stats(z)?;
        Ok(vec![sqnr_mpc_db(b, &clip).into(), lm[&b].into()])
    })
}

/// QS-Arch SNR against N at several word-line voltages.
fn fig7a(spec: &SweepSpec) -> Result<ResultTable> {
    let vs = spec.axis("v_wl", &[0.6, 0.7, 0.8]);
    let ns = spec.axis("n", &[8.0, 16.0, 32.0, 64.0, 96.0, 128.0, 160.0, 192.0, 256.0, 384.0, 512.0]);
    let mut keys = Vec::new();
    for &v in &vs {
        for &n in &ns {
            keys.push((v, as_usize(n, "n")?));
        }
    }
    let mut columns = cols(spec, &[("v_wl", "V"), ("n", "1")], false);
    columns.extend([Column::new("k_h", "1"), Column::new("sigma_d", "1")]);
    columns.extend(cols(spec, &[], true));
    tabulate(spec, columns, keys, |&(v, n)| vec![v.into(), n.into()], |&(v, n)| {
        let c = qs(spec, n, 6, 6, v);
        let mut row: Vec<Cell> = vec![c.k_h().into(), qs_sigma_current(&c.qs_config())?.into()];
        row.extend(arch_point_row(&c, None, spec)?);
        Ok(row)
    })
}

/// QS-Arch energy against SNR as the word-line voltage varies.
fn fig7b(spec: &SweepSpec) -> Result<ResultTable> {
    let vs = spec.axis("v_wl", &range(0.45, 1.0, 0.05));
    let ns = spec.axis("n", &[64.0, 128.0, 256.0]);
    let mut keys = Vec::new();
    for &n in &ns {
        for &v in &vs {
            keys.push((as_usize(n, "n")?, v));
        }
    }
    let columns = cols(spec, &[("n", "1"), ("v_wl", "V")], true);
    tabulate(spec, columns, keys, |&(n, v)| vec![n.into(), v.into()], |&(n, v)| {
        arch_point_row(&qs(spec, n, 6, 6, v), None, spec)
    })
}

/// QR-Arch SNR against input precision at several capacitor sizes.
fn fig8a(spec: &SweepSpec) -> Result<ResultTable> {
    let cs = spec.axis("c_o", &[1e-15, 3e-15, 9e-15]);
    let bxs = spec.axis("bx", &range(1.0, 8.0, 1.0));
    let mut keys = Vec::new();
    for &c in &cs {
        for &b in &bxs {
            keys.push((c, as_u32(b, "bx")?));
        }
    }
    let columns = cols(spec, &[("c_o", "F"), ("bx", "bit")], true);
    tabulate(spec, columns, keys, |&(c, b)| vec![c.into(), b.into()], |&(c, b)| {
        arch_point_row(&qr(spec, 64, b, 7, c), None, spec)
    })
}

/// QR-Arch energy against SNR as the capacitor size varies.
fn fig8b(spec: &SweepSpec) -> Result<ResultTable> {
    let cs = spec.axis("c_o", &[0.5e-15, 1e-15, 2e-15, 3e-15, 5e-15, 9e-15, 15e-15, 25e-15, 50e-15]);
    let keys: Vec<f64> = cs;
    let columns = cols(spec, &[("c_o", "F")], true);
    tabulate(spec, columns, keys, |&c| vec![c.into()], |&c| arch_point_row(&qr(spec, 64, 6, 6, c), None, spec))
}

/// CM SNR against weight precision at several word-line voltages.
fn fig9a(spec: &SweepSpec) -> Result<ResultTable> {
    let vs = spec.axis("v_wl", &[0.6, 0.7, 0.8]);
    let bws = spec.axis("bw", &range(2.0, 9.0, 1.0));
    let mut keys = Vec::new();
    for &v in &vs {
        for &b in &bws {
            keys.push((v, as_u32(b, "bw")?));
        }
    }
    let columns = cols(spec, &[("v_wl", "V"), ("bw", "bit")], true);
    tabulate(spec, columns, keys, |&(v, b)| vec![v.into(), b.into()], |&(v, b)| {
        arch_point_row(&cm(spec, 128, 6, b, v, 3e-15), None, spec)
    })
}

/// CM ADC precision and energy under MPC and BGC.
fn fig9b(spec: &SweepSpec) -> Result<ResultTable> {
    let keys = spec.axis("v_wl", &range(0.5, 0.9, 0.05));
    let mut columns = cols(spec, &[("v_wl", "V")], false);
    columns.extend([
        Column::new("snr_A", "dB"),
        Column::new("b_adc_mpc", "bit"),
        Column::new("b_adc_bgc", "bit"),
        Column::new("snr_T_mpc", "dB"),
        Column::new("e_adc_mpc", "J"),
        Column::new("e_adc_bgc", "J"),
        Column::new("e_dp_mpc", "J"),
        Column::new("e_dp_bgc", "J"),
    ]);
    tabulate(spec, columns, keys, |&v| vec![v.into()], |&v| {
        let c = cm(spec, 128, 6, 6, v, 3e-15);
        let p = evaluate(&c, None)?;
        let (bb, vb) = bgc_adc(&c);
        let adc_b = adc_model(&c, bb, vb);
        let e_b = dp_energy(&c, &adc_b)?;
        Ok(vec![
            p.snr_pre_adc_db.into(),
            p.b_adc.into(),
            bb.into(),
            p.snr_total_db.into(),
            p.e_adc.into(),
            adc_energy(&adc_b).into(),
            p.e_dp.into(),
            e_b.total.into(),
        ])
    })
}

/// ADC energy per conversion against N under MPC and BGC.
fn fig10(spec: &SweepSpec) -> Result<ResultTable> {
    let ns = spec.axis("n", &pow2(4, 16));
    let mut keys = Vec::new();
    for kind in [ArchKind::QsArch, ArchKind::QrArch, ArchKind::Cm] {
        for rule in ["mpc", "bgc"] {
            for &n in &ns {
                keys.push((kind, rule, as_usize(n, "n")?));
            }
        }
    }
    let mut columns = cols(spec, &[("arch", "label"), ("rule", "label"), ("n", "1")], false);
    columns.extend([
        Column::new("snr_A", "dB"),
        Column::new("b_adc", "bit"),
        Column::new("v_c", "V"),
        Column::new("e_adc", "J"),
        Column::new("e_adc_dp", "J"),
    ]);
    tabulate(spec, columns, keys, |&(k, r, n)| vec![k.to_string().into(), r.into(), n.into()], |&(k, r, n)| {
        let c = match k {
            ArchKind::QsArch => qs(spec, n, 6, 6, 0.8),
            ArchKind::QrArch => qr(spec, n, 6, 6, 3e-15),
            ArchKind::Cm => cm(spec, n, 6, 6, 0.8, 3e-15),
        };
        let snr = analytical_snr(&c, None)?.snr_pre_adc_db;
        let (b, v_c) = if r == "mpc" { (adc_min_bits(&c, snr), adc_input_range(&c)) } else { bgc_adc(&c) };
        let adc = adc_model(&c, b, v_c);
        let e = dp_energy(&c, &adc)?;
        Ok(vec![snr.into(), b.into(), v_c.into(), e.adc_per_conversion.into(), e.adc.into()])
    })
}

/// Energy against SNR across technology profiles at `B_x = 3`, `B_w = 4`, `N = 100`.
fn fig11(spec: &SweepSpec) -> Result<ResultTable> {
    let mut keys = Vec::new();
    for name in presets::names() {
        let p = presets::preset(name)?;
        let t = &p.technology;
        let v_lo = ((t.vt + 0.1) * 100.0).ceil() / 100.0;
        for v in range(v_lo, t.vdd, 0.05) {
            keys.push((name, ArchKind::QsArch, v, f64::NAN));
            keys.push((name, ArchKind::Cm, v, 3e-15));
        }
        for c in [0.25e-15, 0.5e-15, 1e-15, 2e-15, 4e-15, 8e-15, 16e-15, 32e-15, 64e-15] {
            keys.push((name, ArchKind::QrArch, f64::NAN, c));
        }
    }
    let columns = cols(spec, &[("profile", "label"), ("arch", "label"), ("v_wl", "V"), ("c_o", "F")], true);
    tabulate(
        spec,
        columns,
        keys,
        |&(name, k, v, c)| vec![name.into(), k.to_string().into(), v.into(), c.into()],
        |&(name, k, v, c)| {
            let p = presets::preset(name)?;
            let mut s = spec.clone();
            s.technology = p.technology;
            s.c_bl = p.c_bl;
            let cfg = match k {
                ArchKind::QsArch => qs(&s, 100, 3, 4, v),
                ArchKind::QrArch => qr(&s, 100, 3, 4, c),
                ArchKind::Cm => cm(&s, 100, 3, 4, v, c),
            };
            arch_point_row(&cfg, None, &s)
        },
    )
}

/// Cartesian product of the grid axes over the base architecture, first
/// axis outermost.
fn custom(spec: &SweepSpec) -> Result<ResultTable> {
    let base = spec.base.as_ref().ok_or_else(|| Error::Config("custom sweep needs an architecture".into()))?;
    let mut keys: Vec<Vec<f64>> = vec![Vec::new()];
    for g in &spec.grid {
        keys = keys
            .into_iter()
            .flat_map(|k| g.values.iter().map(move |&v| [k.clone(), vec![v]].concat()))
            .collect();
    }
    let unit = |n: &str| match n {
        "v_wl" => "V",
        "c_o" | "c_bl" => "F",
        "bx" | "bw" | "b_adc" => "bit",
        _ => "1",
    };
    let key_cols: Vec<(&str, &str)> = spec.grid.iter().map(|g| (g.name.as_str(), unit(&g.name))).collect();
    let columns = cols(spec, &key_cols, true);
    tabulate(spec, columns, keys, |k| k.iter().map(|&v| Cell::Num(v)).collect(), |k| {
        let mut c = base.clone();
        let mut b_adc = None;
        for (g, &v) in spec.grid.iter().zip(k) {
            match g.name.as_str() {
                "n" => c.dp.n = as_usize(v, "n")?,
                "bx" => c.bx = as_u32(v, "bx")?,
                "bw" => c.bw = as_u32(v, "bw")?,
                "v_wl" => c.v_wl = v,
                "c_o" => c.c_o = v,
                "c_bl" => c.c_bl = v,
                "b_adc" => b_adc = Some(as_u32(v, "b_adc")?),
                other => return Err(Error::Config(format!("unknown grid parameter '{other}'"))),
            }
        }
        arch_point_row(&c, b_adc, spec)
    })
}

/// Analytical-vs-Monte-Carlo grid: QS-Arch over word-line voltage and N,
/// QR-Arch over capacitor size, CM over weight precision and word-line voltage.
pub fn validation_grid(tech: &TechnologyProfile<f64>, c_bl: f64) -> Vec<(String, ArchitectureConfig<f64>)> {
    let mut spec = SweepSpec::preset(Experiment::Custom);
    spec.technology = tech.clone();
    spec.c_bl = c_bl;
    let mut out = Vec::new();
    for v in [0.6, 0.7, 0.8] {
        for n in [32, 128, 512] {
            out.push((format!("qs_arch v_wl={v} n={n}"), qs(&spec, n, 6, 6, v)));
        }
    }
    for c in [1.0, 3.0, 9.0] {
        out.push((format!("qr_arch c_o={c}fF n=64"), qr(&spec, 64, 6, 7, c * 1e-15)));
    }
    for v in [0.6, 0.7, 0.8] {
        for bw in [4, 6, 8] {
            out.push((format!("cm v_wl={v} bw={bw} n=128"), cm(&spec, 128, 6, bw, v, 3e-15)));
        }
    }
    out
}

/// Compares analytical and Monte Carlo `SNR_A` for each configuration.
/// Returns the table and whether every point is within `tolerance_db`.
pub fn run_validation(
    configs: &[(String, ArchitectureConfig<f64>)],
    trials: &TrialOverrides,
    tolerance_db: f64,
    profile: &TechnologyProfile<f64>,
) -> Result<(ResultTable, bool)> {
    let mut spec = SweepSpec::preset(Experiment::Custom);
    spec.mc_enabled = true;
    spec.trials = *trials;
    spec.technology = profile.clone();
    let mut meta = metadata(&spec);
    meta.experiment = "validate".into();
    meta.settings.insert("tolerance_db".into(), tolerance_db.to_string());
    let columns = vec![
        Column::new("config", "label"),
        Column::new("snr_A", "dB"),
        Column::new("mc_snr_A", "dB"),
        Column::new("mc_stderr_A", "dB"),
        Column::new("delta_A", "dB"),
        Column::new("pass", "label"),
    ];
    let mut table = ResultTable::new(columns, meta);
    let mut all = true;
    for (label, cfg) in configs {
        let an = analytical_snr(cfg, None)?;
        let est = run_trials(&trial_plan(cfg, None, trials))?;
        let report = crate::montecarlo::compare(cfg, &an, &est, tolerance_db)?;
        let d = report.metrics.iter().find(|m| m.metric == "snr_A_db").expect("metric present");
        all &= d.pass;
        table.push(vec![
            label.as_str().into(),
            an.snr_pre_adc_db.into(),
            est.snr_pre_adc_db.into(),
            est.stderr_pre_adc_db.into(),
            d.delta_db.into(),
            if d.pass { "pass" } else { "fail" }.into(),
        ])?;
    }
    Ok((table, all))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig4a_rows() {
        let t = run_experiment(&SweepSpec::preset(Experiment::Fig4a)).unwrap();
        let (m, by, s) = (t.column("method").unwrap(), t.column("b_y").unwrap(), t.column("sqnr_qy").unwrap());
        for r in t.rows.iter().filter(|r| r[0] == Cell::Int(64)) {
            match &r[m] {
                Cell::Text(x) if x == "bgc" => assert_eq!(r[by], Cell::Int(20)),
                Cell::Text(x) if x == "tbgc" => assert!((r[s].as_f64().unwrap() - 31.0).abs() < 1.0),
                Cell::Text(x) if x == "mpc" => assert!(r[s].as_f64().unwrap() >= 40.0),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn fig9b_mpc_bits() {
        let mut spec = SweepSpec::preset(Experiment::Fig9b);
        spec.grid = vec![GridAxis { name: "v_wl".into(), values: vec![0.7, 0.8] }];
        let t = run_experiment(&spec).unwrap();
        for b in t.values("b_adc_mpc").unwrap() {
            assert!(b.unwrap() <= 8.0);
        }
        for b in t.values("b_adc_bgc").unwrap() {
            assert_eq!(b.unwrap(), 19.0);
        }
    }

    #[test]
    fn failed_points_are_marked() {
        let mut spec = SweepSpec::preset(Experiment::Fig7a);
        spec.grid = vec![
            GridAxis { name: "v_wl".into(), values: vec![0.3, 0.8] },
            GridAxis { name: "n".into(), values: vec![32.0] },
        ];
        let t = run_experiment(&spec).unwrap();
        let st = t.column("status").unwrap();
        assert!(matches!(&t.rows[0][st], Cell::Text(s) if s.starts_with("error: cell cutoff")));
        assert_eq!(t.rows[1][st], Cell::Text("ok".into()));
    }

    #[test]
    fn grid_names_checked() {
        let mut spec = SweepSpec::preset(Experiment::Fig8a);
        spec.grid = vec![GridAxis { name: "v_wl".into(), values: vec![0.7] }];
        assert!(run_experiment(&spec).is_err());
    }
}
