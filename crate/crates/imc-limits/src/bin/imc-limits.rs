use clap::{Args, Parser, Subcommand};
use imc_limits::montecarlo::run_trials;
use imc_limits::sweep_runner::config::{load_config, resolve, ConfigFile, Loaded};
use imc_limits::sweep_runner::emit::{self, Cell, Column, Format, Metadata, ResultTable};
use imc_limits::sweep_runner::{self as runner, evaluate, presets, Experiment, SweepSpec};
use imc_limits::{Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

/// Accuracy and energy limits of analog in-memory dot-product architectures.
#[derive(Parser)]
#[command(name = "imc-limits", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled technology profile (overrides the config's).
    #[arg(long)]
    profile: Option<String>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Add Monte Carlo columns.
    #[arg(long)]
    mc: bool,
    /// Monte Carlo die count.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the architecture in a config file.
    Eval(Common),
    /// Run a named experiment or the config's sweep.
    Sweep {
        #[arg(value_enum)]
        experiment: Option<Experiment>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare analytical and Monte Carlo SNR; exits 2 when a point is out of tolerance.
    Validate {
        #[arg(long, default_value_t = 1.5)]
        tolerance: f64,
        #[command(flatten)]
        common: Common,
    },
    /// List bundled technology profiles or show one.
    Profiles {
        name: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

fn load(c: &Common) -> Result<Loaded> {
    let mut l = match &c.config {
        Some(p) => load_config(p, c.profile.as_deref())?,
        None => resolve(ConfigFile::default(), c.profile.as_deref())?,
    };
    if let Some(s) = c.seed {
        l.trials.seed = s;
    }
    if let Some(t) = c.trials {
        if t == 0 {
            return Err(Error::Config("--trials must be at least 1".into()));
        }
        l.trials.n_dies = t;
    }
    Ok(l)
}

fn output(table: &ResultTable, c: &Common) -> Result<()> {
    match &c.out {
        Some(p) => emit::emit(table, c.format, p),
        None => {
            let text = match c.format {
                Format::Csv => emit::to_csv(table)?,
                Format::Json => emit::to_json(table)?,
            };
            print!("{text}");
            Ok(())
        }
    }
}

fn eval(c: &Common) -> Result<()> {
    let l = load(c)?;
    let cfg = l.architecture.ok_or_else(|| Error::Config("eval needs an architecture section".into()))?;
    let p = evaluate(&cfg, l.b_adc)?;
    let mut columns = vec![
        Column::new("arch", "label"),
        Column::new("n", "1"),
        Column::new("bx", "bit"),
        Column::new("bw", "bit"),
        Column::new("snr_a", "dB"),
        Column::new("snr_A", "dB"),
        Column::new("b_adc", "bit"),
        Column::new("v_c", "V"),
        Column::new("snr_T", "dB"),
        Column::new("e_adc", "J"),
        Column::new("e_dp", "J"),
    ];
    let mut row: Vec<Cell> = vec![
        cfg.kind.to_string().into(),
        cfg.n().into(),
        cfg.bx.into(),
        cfg.bw.into(),
        p.snr_a_db.into(),
        p.snr_pre_adc_db.into(),
        p.b_adc.into(),
        p.v_c.into(),
        p.snr_total_db.into(),
        p.e_adc.into(),
        p.e_dp.into(),
    ];
    let mut settings = BTreeMap::new();
    if c.mc {
        let est = run_trials(&runner::trial_plan(&cfg, Some(p.b_adc), &l.trials))?;
        columns.extend([
            Column::new("mc_snr_a", "dB"),
            Column::new("mc_snr_A", "dB"),
            Column::new("mc_snr_T", "dB"),
            Column::new("mc_stderr_A", "dB"),
        ]);
        row.extend([
            est.snr_a_db.into(),
            est.snr_pre_adc_db.into(),
            est.snr_total_db.into(),
            est.stderr_pre_adc_db.into(),
        ]);
        settings.insert("n_dies".into(), l.trials.n_dies.to_string());
        settings.insert("vectors_per_die".into(), l.trials.vectors_per_die.to_string());
    }
    let meta = Metadata {
        experiment: "eval".into(),
        seed: l.trials.seed,
        profile_hash: runner::profile_hash(&l.technology),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        settings,
    };
    let mut t = ResultTable::new(columns, meta);
    t.push(row)?;
    output(&t, c)
}

fn sweep(experiment: Option<Experiment>, c: &Common) -> Result<()> {
    let l = load(c)?;
    let mut spec = match (experiment, l.sweep) {
        (Some(e), Some(mut s)) if e == s.experiment => {
            s.trials = l.trials;
            s
        }
        (Some(e), _) => {
            let mut s = SweepSpec::preset(e);
            s.technology = l.technology.clone();
            s.c_bl = l.c_bl;
            s.base = l.architecture.clone();
            s.trials = l.trials;
            s
        }
        (None, Some(mut s)) => {
            s.trials = l.trials;
            s
        }
        (None, None) => return Err(Error::Config("sweep needs an experiment name or a config with a sweep section".into())),
    };
    spec.mc_enabled |= c.mc;
    let table = runner::run_experiment(&spec)?;
    let mut c = c.clone();
    if c.out.is_none() {
        c.out = spec.output_path.clone();
    }
    output(&table, &c)
}

/// Returns whether every point passed.
fn validate(tolerance: f64, c: &Common) -> Result<bool> {
    if !(tolerance >= 0.0) {
        return Err(Error::Config("--tolerance must be non-negative".into()));
    }
    let l = load(c)?;
    let configs = match &l.architecture {
        Some(a) => vec![(format!("{} n={}", a.kind, a.n()), a.clone())],
        None => runner::validation_grid(&l.technology, l.c_bl),
    };
    let (table, pass) = runner::run_validation(&configs, &l.trials, tolerance, &l.technology)?;
    output(&table, c)?;
    Ok(pass)
}

fn profiles(name: Option<String>, format: Format) -> Result<()> {
    match name {
        None => {
            for n in presets::names() {
                let p = presets::preset(n)?;
                println!("{n}\t{}", p.description);
            }
        }
        Some(n) => {
            let p = presets::preset(&n)?;
            match format {
                Format::Json => print!("{}", presets::raw(&n).expect("exists")),
                Format::Csv => {
                    let v = serde_json::to_value(&p.technology).expect("serializes");
                    let obj = v.as_object().expect("object");
                    let mut w = csv::Writer::from_writer(std::io::stdout());
                    let wr = |e: csv::Error| Error::Config(e.to_string());
                    w.write_record(["key", "value"]).map_err(wr)?;
                    for (k, v) in obj {
                        w.write_record([k.as_str(), &v.to_string()]).map_err(wr)?;
                    }
                    w.write_record(["c_bl", &p.c_bl.to_string()]).map_err(wr)?;
                    w.flush().map_err(|e| Error::Config(e.to_string()))?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Eval(c) => eval(&c).map(|_| true),
        Cmd::Sweep { experiment, common } => sweep(experiment, &common).map(|_| true),
        Cmd::Validate { tolerance, common } => validate(tolerance, &common),
        Cmd::Profiles { name, format } => profiles(name, format).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed: at least one point is outside the tolerance");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
