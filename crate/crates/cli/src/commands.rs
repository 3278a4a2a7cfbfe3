//! The five subcommands: `evolve`, `sweep`, `fit`, `phase-diagram` and
//! `convergence`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qbat::output::fmt12;
use qbat::{
    build_h_undriven, convergence_check, find_max, fit_linear, fit_power_law, ground_state,
    propagate, Error, MaxRecord, ModelParams, PropagationConfig, Series, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, GridPoint};
use crate::CliError;

pub const SWEEP_CSV_HEADER: &str = "g,Omega,eta,N,E_max,P_max,t_star_E,t_star_P";
pub const PHASE_CSV_HEADER: &str = "eta,g,magnetization,gap";

/// Deviation below which a photon cutoff counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-5;
/// Extra photon levels of the reference run in a convergence audit.
pub const CONVERGENCE_OFFSET: usize = 4;

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Maxima of one propagated grid point.
#[derive(Debug, Clone)]
pub struct PointSummary {
    pub point: GridPoint,
    pub e_max: MaxRecord,
    pub p_max: MaxRecord,
    /// Smallest and largest sampled `E_b`, before any peak refinement.
    pub e_range: (f64, f64),
    pub final_norm: f64,
}

impl PointSummary {
    fn from_trajectory(point: GridPoint, traj: &Trajectory) -> Result<Self, CliError> {
        let lo = traj
            .stored_energy
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = traj
            .stored_energy
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            point,
            e_max: find_max(traj, Series::StoredEnergy)?,
            p_max: find_max(traj, Series::Power)?,
            e_range: (lo, hi),
            final_norm: traj.final_norm().unwrap_or(f64::NAN),
        })
    }

    fn csv_row(&self) -> String {
        let p = &self.point;
        format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt12(p.g),
            fmt12(p.omega),
            fmt12(p.eta),
            p.n_atoms,
            fmt12(self.e_max.value),
            fmt12(self.p_max.value),
            fmt12(self.e_max.t_star),
            fmt12(self.p_max.t_star),
        )
    }
}

/// Propagates one grid point and extracts its maxima.
pub fn run_point(config: &Config, point: GridPoint) -> Result<PointSummary, CliError> {
    let params = config.model_at(point)?;
    let traj = propagate(&params, &config.propagation()?)?;
    PointSummary::from_trajectory(point, &traj)
}

#[derive(Debug, Clone, Serialize)]
struct EvolveSummary<'a> {
    #[serde(rename = "E_max")]
    e_max: f64,
    #[serde(rename = "P_max")]
    p_max: f64,
    #[serde(rename = "t_star_E")]
    t_star_e: f64,
    #[serde(rename = "t_star_P")]
    t_star_p: f64,
    final_norm: f64,
    params: &'a ModelParams,
}

/// Single trajectory: `trajectory.csv` and `summary.json`.
pub fn cmd_evolve(config: &Config, out_dir: &Path) -> Result<Trajectory, CliError> {
    let point = config.base_point()?;
    let params = config.model_at(point)?;
    let traj = propagate(&params, &config.propagation()?)?;
    let summary = PointSummary::from_trajectory(point, &traj)?;
    write_output(out_dir, "trajectory.csv", &traj.to_csv())?;
    let report = EvolveSummary {
        e_max: summary.e_max.value,
        p_max: summary.p_max.value,
        t_star_e: summary.e_max.t_star,
        t_star_p: summary.p_max.t_star,
        final_norm: summary.final_norm,
        params: &params,
    };
    write_output(out_dir, "summary.json", &to_json(&report))?;
    Ok(traj)
}

/// Cartesian sweep: one `sweep.csv` row per grid point, in grid order.
pub fn cmd_sweep(config: &Config, out_dir: &Path) -> Result<Vec<PointSummary>, CliError> {
    let grid = config.sweep_grid()?;
    config.propagation()?;
    let rows = grid
        .par_iter()
        .map(|&point| run_point(config, point))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    rows.iter().for_each(|r| csv.push_str(&r.csv_row()));
    write_output(out_dir, "sweep.csv", &csv)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// `log P_max = α log N + log β`.
    Power,
    /// `E_max = slope · N + intercept`.
    Linear,
}

#[derive(Debug, Clone)]
struct SweepRecord {
    key: [f64; 3],
    n: usize,
    e_max: f64,
    p_max: f64,
}

fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| {
                CliError::Input(format!("{}: missing column \"{name}\"", path.display()))
            })
    };
    let cols = [
        column("g")?,
        column("Omega")?,
        column("eta")?,
        column("N")?,
        column("E_max")?,
        column("P_max")?,
    ];
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::Input(e.to_string()))?;
        let field = |k: usize| {
            let raw = row.get(cols[k]).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| {
                CliError::Input(format!(
                    "row {}: cannot parse {raw:?} as a number",
                    line + 2
                ))
            })
        };
        let n = field(3)?;
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(CliError::Input(format!(
                "row {}: N must be a positive integer",
                line + 2
            )));
        }
        records.push(SweepRecord {
            key: [field(0)?, field(1)?, field(2)?],
            n: n as usize,
            e_max: field(4)?,
            p_max: field(5)?,
        });
    }
    Ok(records)
}

/// Fits `N`-scaling per `(g, Omega, eta)` group of a sweep CSV.
///
/// A CSV with a single group yields one JSON object, several groups yield
/// an array in order of first appearance. Each group needs ≥ 3 rows.
pub fn cmd_fit(
    summary_csv: &Path,
    mode: FitMode,
    out_dir: &Path,
) -> Result<serde_json::Value, CliError> {
    let records = read_sweep_csv(summary_csv)?;
    let mut order: Vec<[u64; 3]> = Vec::new();
    let mut groups: BTreeMap<[u64; 3], Vec<&SweepRecord>> = BTreeMap::new();
    for r in &records {
        let key = r.key.map(f64::to_bits);
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    if records.len() < 3 {
        return Err(CliError::Input(format!(
            "fit needs at least 3 rows, got {}",
            records.len()
        )));
    }
    let mut fits = Vec::with_capacity(order.len());
    for key in &order {
        let rows = &groups[key];
        let [g, omega, eta] = rows[0].key;
        if rows.len() < 3 {
            return Err(CliError::Input(format!(
                "group g={g}, Omega={omega}, eta={eta} has {} rows; fit needs at least 3",
                rows.len()
            )));
        }
        let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        let params = json!({ "g": g, "Omega": omega, "eta": eta });
        let fit = match mode {
            FitMode::Power => {
                let ps: Vec<f64> = rows.iter().map(|r| r.p_max).collect();
                let f = fit_power_law(&ns, &ps).map_err(|e| CliError::Input(e.to_string()))?;
                json!({
                    "alpha": f.alpha,
                    "beta": f.beta,
                    "r_squared": f.r_squared,
                    "n_points": f.n_points,
                    "N_list": f.n_list,
                    "P_list": f.p_list,
                    "params": params,
                })
            }
            FitMode::Linear => {
                let es: Vec<f64> = rows.iter().map(|r| r.e_max).collect();
                let f = fit_linear(&ns, &es).map_err(|e| CliError::Input(e.to_string()))?;
                json!({
                    "slope": f.slope,
                    "intercept": f.intercept,
                    "r_squared": f.r_squared,
                    "n_points": ns.len(),
                    "N_list": ns,
                    "E_list": es,
                    "params": params,
                })
            }
        };
        fits.push(fit);
    }
    let doc = if fits.len() == 1 {
        fits.pop().expect("one fit")
    } else {
        serde_json::Value::Array(fits)
    };
    let name = match mode {
        FitMode::Power => "fit_power.json",
        FitMode::Linear => "fit_linear.json",
    };
    write_output(out_dir, name, &to_json(&doc))?;
    Ok(doc)
}

/// One `(η, g)` cell of the ground-state phase diagram. Cells whose
/// eigensolve failed carry `NaN` magnetization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub eta: f64,
    pub g: f64,
    pub magnetization: f64,
    /// Gap to the first excited level, `NaN` when unresolved.
    pub gap: f64,
    pub degenerate: bool,
}

fn phase_cell(config: &Config, point: GridPoint) -> Result<Result<PhaseRow, Error>, CliError> {
    let params = config.model_at(point)?;
    let dim = params.dims()?.total_dim();
    if dim > config.max_dim {
        return Err(Error::Resource(format!(
            "dimension {dim} exceeds max_dim = {}",
            config.max_dim
        ))
        .into());
    }
    let h = build_h_undriven(&params)?;
    Ok(ground_state(&h).map(|gs| PhaseRow {
        eta: point.eta,
        g: point.g,
        magnetization: gs.magnetization,
        gap: gs.gap.unwrap_or(f64::NAN),
        degenerate: gs.degenerate,
    }))
}

/// Ground-state magnetization over the `(eta_list × g_list)` grid of the
/// undriven Hamiltonian; writes `phase_diagram.csv`. Returns the rows and
/// the number of cells whose eigensolve failed.
pub fn cmd_phase_diagram(
    config: &Config,
    out_dir: &Path,
) -> Result<(Vec<PhaseRow>, usize), CliError> {
    let grid = config.phase_grid()?;
    let cells = grid
        .par_iter()
        .map(|&point| phase_cell(config, point))
        .collect::<Result<Vec<_>, _>>()?;
    let mut warnings = 0;
    let mut rows = Vec::with_capacity(cells.len());
    for (point, cell) in grid.iter().zip(cells) {
        rows.push(cell.unwrap_or_else(|err| {
            warnings += 1;
            eprintln!("warning: eta={}, g={}: {err}", point.eta, point.g);
            PhaseRow {
                eta: point.eta,
                g: point.g,
                magnetization: f64::NAN,
                gap: f64::NAN,
                degenerate: false,
            }
        }));
    }
    let mut csv = format!("{PHASE_CSV_HEADER}\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt12(r.eta),
            fmt12(r.g),
            fmt12(r.magnetization),
            fmt12(r.gap)
        );
    }
    write_output(out_dir, "phase_diagram.csv", &csv)?;
    Ok((rows, warnings))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceEntry {
    #[serde(rename = "N_ph")]
    pub n_photon_max: usize,
    #[serde(rename = "N_ph_ref")]
    pub n_photon_ref: usize,
    #[serde(rename = "E_b")]
    pub stored_energy: f64,
    #[serde(rename = "P_b")]
    pub power: f64,
    #[serde(rename = "dE_b")]
    pub fluctuation: f64,
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub tolerance: f64,
    pub reference_offset: usize,
    pub t_max: f64,
    pub dt: f64,
    pub results: Vec<ConvergenceEntry>,
    pub params: ModelParams,
}

/// Truncation audit: cutoffs `2N`, `3N`, `4N` against the same cutoff plus
/// four levels; writes `convergence.json`.
pub fn cmd_convergence(config: &Config, out_dir: &Path) -> Result<ConvergenceReport, CliError> {
    let params = config.model()?;
    let prop: PropagationConfig = config.propagation()?;
    let n = params.n_atoms;
    let results = [2, 3, 4]
        .par_iter()
        .map(|&k| {
            let p = params.clone().with_photon_cutoff(k * n);
            p.validate()?;
            let dev = convergence_check(&p, &prop, CONVERGENCE_OFFSET)?;
            Ok(ConvergenceEntry {
                n_photon_max: dev.n_photon_max,
                n_photon_ref: dev.n_photon_ref,
                stored_energy: dev.stored_energy,
                power: dev.power,
                fluctuation: dev.fluctuation,
                max_deviation: dev.max(),
                pass: dev.max() < CONVERGENCE_TOL,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = ConvergenceReport {
        tolerance: CONVERGENCE_TOL,
        reference_offset: CONVERGENCE_OFFSET,
        t_max: prop.t_max,
        dt: prop.dt,
        results,
        params,
    };
    write_output(out_dir, "convergence.json", &to_json(&report))?;
    Ok(report)
}
