//! Preset scenarios, parameter sweeps and CSV emission.

mod csv;
mod study;

pub use csv::{num, trajectory_table, write_tables, CsvTable, TRAJECTORY_HEADER};
pub use study::{
    alternating_pattern, circular_mean, coding_study, thermal_drift, CodedPair, CodingCell, DriftRow, DriftStudy,
};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::{extract_pulse_phases, fringe_scan, interfere_delayed, pair_phases, PulseRecord, TrainSetup};
use crate::config::{resolve_key, Config};
use crate::error::{Error, Result};
use crate::sim::{build_master_drive, build_slave_drive, simulate, TimeGrid, Trajectory};
use crate::steady::{
    approx_operating_point, delta_i_pi, solve_operating_point, spontaneous_scale_estimate, sweep_delta_i_pi, Method,
};
use crate::thermal::{f_fit, integrate_dt, y_exact};
use crate::sim::DriveWaveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Steady,
    Dipi,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Thermal,
    /// Single trajectory from the config as given.
    Custom,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 8] = [
        ScenarioName::Steady,
        ScenarioName::Dipi,
        ScenarioName::Fig2,
        ScenarioName::Fig3,
        ScenarioName::Fig4,
        ScenarioName::Fig5,
        ScenarioName::Thermal,
        ScenarioName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Steady => "steady",
            ScenarioName::Dipi => "dipi",
            ScenarioName::Fig2 => "fig2",
            ScenarioName::Fig3 => "fig3",
            ScenarioName::Fig4 => "fig4",
            ScenarioName::Fig5 => "fig5",
            ScenarioName::Thermal => "thermal",
            ScenarioName::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = if s == "simulate" { "custom" } else { s };
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::invalid("scenario", format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    /// Contents of the user config file, if any.
    pub config_text: Option<String>,
    /// Shown in the manifest: the config path, or `defaults`.
    pub config_label: String,
    /// `section.key=value` overrides applied after the config file.
    pub overrides: Vec<String>,
    /// Required whenever the scenario draws noise.
    pub seed: Option<u64>,
    /// Output path prefix; files are `<out><table>.csv`.
    pub out: String,
    /// Shown in the manifest.
    pub command_line: String,
    /// First noise stream used by this evaluation.
    pub stream_base: u64,
}

impl Scenario {
    pub fn new(name: ScenarioName) -> Self {
        Scenario {
            name,
            config_text: None,
            config_label: "defaults".into(),
            overrides: Vec::new(),
            seed: None,
            out: String::new(),
            command_line: String::new(),
            stream_base: 0,
        }
    }

    pub fn config(&self) -> Result<Config> {
        Config::load(self.config_text.as_deref(), &self.overrides)
    }

    pub fn manifest(&self) -> Vec<String> {
        vec![
            format!("phasemod {}", env!("CARGO_PKG_VERSION")),
            format!("config: {}", self.config_label),
            format!("command: {}", self.command_line),
            match self.seed {
                Some(s) => format!("seed: {s}"),
                None => "seed: none".into(),
            },
        ]
    }

    fn seed_for_noise(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::invalid("seed", format!("scenario `{}` draws noise and needs a seed", self.name)))
    }

    /// Compute every output table without touching the filesystem.
    pub fn evaluate(&self) -> Result<Vec<CsvTable>> {
        let cfg = self.config()?;
        match self.name {
            ScenarioName::Steady => steady_tables(&cfg),
            ScenarioName::Dipi => dipi_tables(&cfg),
            ScenarioName::Fig2 => fig2_tables(&cfg),
            ScenarioName::Fig3 => self.fig3_tables(&cfg),
            ScenarioName::Fig4 => fig4_tables(&cfg),
            ScenarioName::Fig5 => self.fig5_tables(&cfg),
            ScenarioName::Thermal => thermal_tables(&cfg),
            ScenarioName::Custom => self.custom_tables(&cfg),
        }
    }

    fn setup(&self, cfg: &Config, noise: bool) -> Result<TrainSetup> {
        let seed = if noise { self.seed_for_noise()? } else { self.seed.unwrap_or(0) };
        Ok(train_setup(cfg, noise, seed, self.stream_base))
    }

    fn fig3_tables(&self, cfg: &Config) -> Result<Vec<CsvTable>> {
        let sys = cfg.system(false);
        let setup = self.setup(cfg, cfg.run.noise)?;
        let dipi = master_dipi(cfg)?;
        let n = cfg.run.pulses;
        let (traj, rec) = setup.run(&sys, n, &alternating_pattern(n, dipi))?;
        let bias = unperturbed_step(&rec);
        let mut out = vec![
            trajectory_table("fig3_trace", &traj),
            interference_table("fig3_interference", &traj, setup.period, bias)?,
            pairs_table("fig3_pairs", &rec, dipi),
        ];
        let m = cfg.run.fringe_points;
        let ramp: Vec<f64> = (0..m)
            .map(|k| -dipi + 2.0 * dipi * k as f64 / (m - 1) as f64)
            .collect();
        let quiet = TrainSetup { noise: false, ..setup };
        let mut fringe = CsvTable::new("fig3_fringe", &["dI_mA", "pair_energy", "delta_phi_rad"]);
        for row in fringe_scan(&sys, &ramp, &quiet)? {
            fringe.push_nums(&[row.di * 1e3, row.pair_energy, row.delta_phi]);
        }
        out.push(fringe);
        Ok(out)
    }

    fn fig5_tables(&self, cfg: &Config) -> Result<Vec<CsvTable>> {
        let setup = self.setup(cfg, true)?;
        let dipi = master_dipi(cfg)?;
        let mut summary = CsvTable::new(
            "fig5",
            &["R", "n_pairs", "errors", "rate", "ci_low", "ci_high", "kappa_ex_per_s"],
        );
        let mut pairs = CsvTable::new("fig5_pairs", &["kappa_ex_per_s", "member", "pulse", "bit", "delta_phi_rad"]);
        for (c, &kappa) in cfg.run.kappa_list.iter().enumerate() {
            let mut sys = cfg.system(false);
            sys.coupling.kappa_ex = kappa;
            let base = self.stream_base + ((c as u64) << 24);
            let cell = coding_study(&sys, &setup, dipi, cfg.run.members, cfg.run.coding_pulses, base)?;
            let r = &cell.rate;
            summary.push_nums(&[
                cell.r,
                r.n_pairs as f64,
                r.errors as f64,
                r.rate,
                r.ci_low,
                r.ci_high,
                kappa,
            ]);
            for p in &cell.pairs {
                pairs.push(vec![
                    num(kappa),
                    p.member.to_string(),
                    p.index.to_string(),
                    u8::from(p.bit).to_string(),
                    num(p.delta_phi),
                ]);
            }
        }
        Ok(vec![summary, pairs])
    }

    fn custom_tables(&self, cfg: &Config) -> Result<Vec<CsvTable>> {
        let sys = cfg.system(cfg.run.thermal);
        let setup = self.setup(cfg, cfg.run.noise)?;
        let n = cfg.run.pulses;
        let slave = build_slave_drive(setup.period, setup.width, setup.i_low, setup.i_high, n)?;
        let timing = setup.timing(n);
        let master = build_master_drive(setup.i_s, &[], setup.d, &timing)?;
        let opts = crate::sim::SimOptions {
            thermal: cfg.run.thermal,
            ..setup.options(n)
        };
        let traj = simulate(&sys, &master, &slave, &opts)?;
        let gates: Vec<(f64, f64)> = (0..n).map(|j| timing.gate(j)).collect();
        let rec = extract_pulse_phases(&traj, &gates)?;
        Ok(vec![trajectory_table("simulate", &traj), pairs_table("simulate_pairs", &rec, 0.0)])
    }
}

/// Train layout and integration settings from a config.
pub fn train_setup(cfg: &Config, noise: bool, seed: u64, stream: u64) -> TrainSetup {
    let d = &cfg.drive;
    TrainSetup {
        period: d.period,
        width: d.width,
        i_low: d.i_low,
        i_high: d.i_high,
        i_s: d.i_s,
        d: d.d,
        dt: cfg.run.dt,
        warmup: cfg.run.warmup,
        record_stride: cfg.run.record_stride,
        noise,
        seed,
        stream,
    }
}

/// Numerically inverted Delta I_pi of the master at the configured bias.
pub fn master_dipi(cfg: &Config) -> Result<f64> {
    Ok(delta_i_pi(&cfg.master, cfg.drive.i_s, cfg.drive.d, Method::Numerical)?.delta_i_pi)
}

/// Mean phase step over the unperturbed pairs of an alternating train,
/// skipping the first pair.
fn unperturbed_step(rec: &[PulseRecord]) -> f64 {
    let steps: Vec<f64> = pair_phases(rec)
        .iter()
        .filter(|p| p.index >= 2 && p.index % 2 == 1)
        .map(|p| p.delta_phi)
        .collect();
    if steps.is_empty() {
        0.0
    } else {
        circular_mean(&steps)
    }
}

fn interference_table(name: &str, traj: &Trajectory, delay: f64, bias: f64) -> Result<CsvTable> {
    let tr = interfere_delayed(traj, delay, bias)?;
    let mut t = CsvTable::new(name, &["t_ns", "Q_int"]);
    for (k, q) in tr.intensity.iter().enumerate() {
        t.push_nums(&[tr.grid.time(k) * 1e9, *q]);
    }
    Ok(t)
}

fn pairs_table(name: &str, rec: &[PulseRecord], dipi: f64) -> CsvTable {
    let mut t = CsvTable::new(
        name,
        &["pulse", "t_ns", "energy", "phase_rad", "dI_mA", "delta_phi_rad", "visibility"],
    );
    let pairs = pair_phases(rec);
    for p in &pairs {
        let r = &rec[p.index];
        // the excursion in the gap before pulse j follows the alternating pattern
        let di = if (p.index - 1) % 2 == 1 { dipi } else { 0.0 };
        t.push_nums(&[
            p.index as f64,
            r.centroid * 1e9,
            r.energy,
            r.phase,
            di * 1e3,
            p.delta_phi,
            p.visibility,
        ]);
    }
    t
}

fn steady_tables(cfg: &Config) -> Result<Vec<CsvTable>> {
    let mut t = CsvTable::new(
        "steady",
        &["laser", "I_mA", "I_over_Ith", "N_s", "Q_s", "omega_shift_rad_per_s", "N_s_approx", "Q_s_approx"],
    );
    let d = &cfg.drive;
    for (label, p, currents) in [
        ("master", &cfg.master, vec![d.i_s]),
        ("slave", &cfg.slave, vec![d.i_low, d.i_high]),
    ] {
        for i in currents {
            let ss = solve_operating_point(p, i)?;
            let (na, qa) = match approx_operating_point(p, i) {
                Ok(a) => (a.n_s, a.q_s),
                Err(_) => (f64::NAN, f64::NAN),
            };
            let mut row = vec![label.to_string()];
            row.extend(
                [i * 1e3, i / p.threshold_current(), ss.n_s, ss.q_s, ss.omega_shift, na, qa]
                    .iter()
                    .map(|&x| num(x)),
            );
            t.push(row);
        }
    }
    Ok(vec![t])
}

fn dipi_tables(cfg: &Config) -> Result<Vec<CsvTable>> {
    let mut t = CsvTable::new(
        "dipi",
        &["method", "I_s_mA", "d_ns", "dIpi_mA", "delta_phi_rad", "spont_scale_W"],
    );
    let (p, i, d) = (&cfg.master, cfg.drive.i_s, cfg.drive.d);
    let spont = spontaneous_scale_estimate(p, d);
    for m in [Method::Numerical, Method::FirstOrder, Method::Simple] {
        let r = delta_i_pi(p, i, d, m)?;
        let mut row = vec![m.name().to_string()];
        row.extend([i * 1e3, d * 1e9, r.delta_i_pi * 1e3, r.delta_phi, spont].iter().map(|&x| num(x)));
        t.push(row);
    }
    Ok(vec![t])
}

fn fig2_tables(cfg: &Config) -> Result<Vec<CsvTable>> {
    let chi: Vec<f64> = (1..=50).map(f64::from).collect();
    let rows = sweep_delta_i_pi(&cfg.master, &chi, &[3.0, 4.0, 5.0, 6.0], cfg.drive.i_s, cfg.drive.d)?;
    let mut t = CsvTable::new("fig2", &["chi_per_W", "alpha", "dIpi_numerical_mA", "dIpi_simple_mA"]);
    for r in rows {
        t.push_nums(&[r.chi, r.alpha, r.dipi_numerical * 1e3, r.dipi_simple * 1e3]);
    }
    Ok(vec![t])
}

fn fig4_tables(cfg: &Config) -> Result<Vec<CsvTable>> {
    let sys = cfg.system(true);
    let setup = train_setup(cfg, false, 0, 0);
    let dipi = master_dipi(cfg)?;
    let st = thermal_drift(&sys, &setup, cfg.run.fig4_pulses, dipi, cfg.drive.i_off)?;
    let gates: Vec<(f64, f64)> = (0..cfg.run.fig4_pulses).map(|j| setup.timing(cfg.run.fig4_pulses).gate(j)).collect();
    let rec = extract_pulse_phases(&st.hot, &gates)?;
    let mut drift = CsvTable::new(
        "fig4_drift",
        &["pair", "t_ns", "delta_phi_off_rad", "delta_phi_on_rad", "drift_rad", "asymptote_rad"],
    );
    for r in &st.rows {
        drift.push_nums(&[r.pair as f64, r.t * 1e9, r.delta_phi_off, r.delta_phi_on, r.drift, st.asymptote]);
    }
    Ok(vec![
        trajectory_table("fig4_trace", &st.hot),
        interference_table("fig4_interference", &st.hot, setup.period, unperturbed_step(&rec))?,
        drift,
    ])
}

fn thermal_tables(cfg: &Config) -> Result<Vec<CsvTable>> {
    let mut fit = CsvTable::new("thermal", &["p", "y_exact", "f_fit", "difference"]);
    let n = 200;
    for k in 0..=n {
        let p = 0.01 * 1000f64.powf(k as f64 / n as f64);
        let y = y_exact(p)?;
        let f = f_fit(p);
        fit.push_nums(&[p, y, f, y - f]);
    }
    // bias current until t = 0, then the master baseline
    let tp = cfg.thermal;
    let drive = DriveWaveform::constant(cfg.drive.i_s)?.switched_on_at(0.0, tp.i_bias)?;
    let dt = tp.tau_h / 100.0;
    let grid = TimeGrid::new(0.0, dt, 801)?;
    let rise = tp.settled_rise(cfg.drive.i_s);
    let mut step = CsvTable::new("thermal_step", &["t_ns", "dT_K", "dT_closed_K"]);
    for (k, v) in integrate_dt(&drive, &tp, &grid).into_iter().enumerate() {
        let t = grid.time(k);
        step.push_nums(&[t * 1e9, v, rise * (1.0 - (-t / tp.tau_h).exp())]);
    }
    Ok(vec![fit, step])
}

/// Evaluate a scenario and write its tables.
pub fn run_scenario(s: &Scenario) -> Result<Vec<PathBuf>> {
    let tables = s.evaluate()?;
    write_tables(&s.out, &tables, &s.manifest())
}

/// One evaluation of `base` per value of `axis`, each with its own block of
/// noise streams. Tables of the same name are concatenated with the value in
/// a leading column named after the resolved key. Sweeping the injection
/// rate also pins the coding study's coupling list to that single value.
pub fn sweep_tables(axis: &str, values: &[String], base: &Scenario) -> Result<Vec<CsvTable>> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    let key = resolve_key(axis)?;
    let cells: Vec<Scenario> = values
        .iter()
        .enumerate()
        .map(|(c, v)| {
            let mut s = base.clone();
            s.overrides.push(format!("{key}={v}"));
            if key == "coupling.kappa_ex_per_s" {
                s.overrides.push(format!("run.kappa_list=[{v}]"));
            }
            s.stream_base = base.stream_base + ((c as u64) << 32);
            s
        })
        .collect();
    let results = crate::parallel::map(&cells, |s| s.evaluate());
    let mut merged: Vec<CsvTable> = Vec::new();
    for (v, res) in values.iter().zip(results) {
        for t in res? {
            let t = t.tagged(&key, v);
            match merged.iter_mut().find(|m| m.name == t.name) {
                Some(m) => m.rows.extend(t.rows),
                None => merged.push(t),
            }
        }
    }
    Ok(merged)
}

pub fn run_sweep(axis: &str, values: &[String], base: &Scenario) -> Result<Vec<PathBuf>> {
    let tables = sweep_tables(axis, values, base)?;
    write_tables(&base.out, &tables, &base.manifest())
}
