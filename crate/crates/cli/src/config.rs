//! Flat JSON run configuration.
//!
//! Model, propagation and sweep keys share one namespace. Unknown keys are
//! rejected so a misspelt physics parameter never silently falls back to its
//! default.

use std::fs;
use std::path::{Path, PathBuf};

use qbat::{CouplingMode, Method, ModelParams, PropagationConfig};
use serde::Deserialize;

use crate::CliError;

/// Default upper bound on the number of sweep or phase-diagram points.
pub const DEFAULT_GRID_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingModeName {
    #[default]
    Direct,
    Geometric,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub omega0: f64,
    pub omegac: f64,
    pub omegad: f64,
    pub g: f64,
    pub Omega: f64,
    pub eta: f64,
    pub N: Option<usize>,
    /// Photon cutoff; `4N` for each point when absent.
    pub N_ph: Option<usize>,
    /// Initial Fock state; `N` for each point when absent.
    pub n_init: Option<usize>,
    /// End of the charging window; absent means "charger always on".
    pub T: Option<f64>,

    pub coupling_mode: CouplingModeName,
    pub Gamma0: Option<f64>,
    pub R: Option<f64>,
    pub alpha_angle: Option<f64>,
    pub c_light: f64,

    pub t_max: f64,
    pub dt: f64,
    pub sample_stride: usize,
    pub method: Method,
    pub max_dim: usize,

    pub g_list: Option<Vec<f64>>,
    pub Omega_list: Option<Vec<f64>>,
    pub eta_list: Option<Vec<f64>>,
    pub N_list: Option<Vec<usize>>,
    pub grid_cap: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let prop = PropagationConfig::default();
        Self {
            omega0: 1.0,
            omegac: 1.0,
            omegad: 1.0,
            g: 0.0,
            Omega: 0.0,
            eta: 0.0,
            N: None,
            N_ph: None,
            n_init: None,
            T: None,
            coupling_mode: CouplingModeName::Direct,
            Gamma0: None,
            R: None,
            alpha_angle: None,
            c_light: 1.0,
            t_max: prop.t_max,
            dt: prop.dt,
            sample_stride: prop.sample_stride,
            method: prop.method,
            max_dim: prop.max_dim,
            g_list: None,
            Omega_list: None,
            eta_list: None,
            N_list: None,
            grid_cap: DEFAULT_GRID_CAP,
            out_dir: None,
        }
    }
}

/// One point of a parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub g: f64,
    pub omega: f64,
    pub eta: f64,
    pub n_atoms: usize,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn require_n(&self) -> Result<usize, CliError> {
        self.N
            .ok_or_else(|| CliError::Config("missing key \"N\"".into()))
    }

    fn coupling(&self, eta: f64) -> Result<CouplingMode, CliError> {
        match self.coupling_mode {
            CouplingModeName::Direct => Ok(CouplingMode::Direct { eta }),
            CouplingModeName::Geometric => {
                let need = |v: Option<f64>, key: &str| {
                    v.ok_or_else(|| CliError::Config(format!("geometric coupling needs \"{key}\"")))
                };
                Ok(CouplingMode::Geometric {
                    gamma0: need(self.Gamma0, "Gamma0")?,
                    spacing: need(self.R, "R")?,
                    alpha_angle: need(self.alpha_angle, "alpha_angle")?,
                    c_light: self.c_light,
                })
            }
        }
    }

    /// Model parameters at a grid point, with the per-point `N_ph = 4N` and
    /// `n_init = N` defaults applied.
    pub fn model_at(&self, point: GridPoint) -> Result<ModelParams, CliError> {
        let n = point.n_atoms;
        let params = ModelParams {
            omega0: self.omega0,
            omegac: self.omegac,
            omegad: self.omegad,
            g: point.g,
            drive_amplitude: point.omega,
            n_atoms: n,
            n_photon_max: self.N_ph.unwrap_or(4 * n),
            n_init: self.n_init.unwrap_or(n),
            charging_time: self.T,
            coupling: self.coupling(point.eta)?,
        };
        params.validate()?;
        Ok(params)
    }

    /// The single point described by the scalar keys.
    pub fn base_point(&self) -> Result<GridPoint, CliError> {
        Ok(GridPoint {
            g: self.g,
            omega: self.Omega,
            eta: self.eta,
            n_atoms: self.require_n()?,
        })
    }

    pub fn model(&self) -> Result<ModelParams, CliError> {
        self.model_at(self.base_point()?)
    }

    pub fn propagation(&self) -> Result<PropagationConfig, CliError> {
        let cfg = PropagationConfig {
            t_max: self.t_max,
            dt: self.dt,
            sample_stride: self.sample_stride,
            method: self.method,
            max_dim: self.max_dim,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn check_cap(&self, size: usize) -> Result<(), CliError> {
        if size == 0 {
            return Err(CliError::Config("parameter grid is empty".into()));
        }
        if size > self.grid_cap {
            return Err(CliError::Config(format!(
                "grid has {size} points, above grid_cap = {}",
                self.grid_cap
            )));
        }
        Ok(())
    }

    /// Cartesian sweep grid in lexicographic order `(g, Omega, eta, N)`, the
    /// last key varying fastest. Missing lists fall back to the scalar key.
    pub fn sweep_grid(&self) -> Result<Vec<GridPoint>, CliError> {
        let gs = self.g_list.clone().unwrap_or_else(|| vec![self.g]);
        let omegas = self.Omega_list.clone().unwrap_or_else(|| vec![self.Omega]);
        let etas = self.eta_list.clone().unwrap_or_else(|| vec![self.eta]);
        let ns = match &self.N_list {
            Some(ns) => ns.clone(),
            None => vec![self.require_n()?],
        };
        let size = [gs.len(), omegas.len(), etas.len(), ns.len()]
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .unwrap_or(usize::MAX);
        self.check_cap(size)?;
        let mut grid = Vec::with_capacity(size);
        for &g in &gs {
            for &omega in &omegas {
                for &eta in &etas {
                    for &n_atoms in &ns {
                        grid.push(GridPoint {
                            g,
                            omega,
                            eta,
                            n_atoms,
                        });
                    }
                }
            }
        }
        Ok(grid)
    }

    /// `(η, g)` grid for the phase diagram, `η` varying slowest.
    pub fn phase_grid(&self) -> Result<Vec<GridPoint>, CliError> {
        let n_atoms = self.require_n()?;
        let etas = self.eta_list.clone().unwrap_or_else(|| vec![self.eta]);
        let gs = self.g_list.clone().unwrap_or_else(|| vec![self.g]);
        self.check_cap(etas.len().saturating_mul(gs.len()))?;
        Ok(etas
            .iter()
            .flat_map(|&eta| {
                gs.iter().map(move |&g| GridPoint {
                    g,
                    omega: 0.0,
                    eta,
                    n_atoms,
                })
            })
            .collect())
    }

    /// Output directory: the `--out` flag, then `out_dir`, then `.`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = Config::from_json(r#"{"N": 3, "g": 0.5}"#).unwrap();
        let p = c.model().unwrap();
        assert_eq!(p.n_photon_max, 12);
        assert_eq!(p.n_init, 3);
        assert_eq!(p.g, 0.5);
        assert_eq!(p.charging_time, None);
        assert_eq!(c.propagation().unwrap(), PropagationConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::from_json(r#"{"N": 3, "gg": 0.5}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let c =
            Config::from_json(r#"{"g_list": [0.1, 0.2], "eta_list": [-1, 1], "N_list": [1, 2]}"#)
                .unwrap();
        let grid = c.sweep_grid().unwrap();
        let keys: Vec<(f64, f64, usize)> = grid.iter().map(|p| (p.g, p.eta, p.n_atoms)).collect();
        assert_eq!(
            keys,
            vec![
                (0.1, -1.0, 1),
                (0.1, -1.0, 2),
                (0.1, 1.0, 1),
                (0.1, 1.0, 2),
                (0.2, -1.0, 1),
                (0.2, -1.0, 2),
                (0.2, 1.0, 1),
                (0.2, 1.0, 2)
            ]
        );
    }

    #[test]
    fn grid_cap_is_enforced() {
        let c =
            Config::from_json(r#"{"g_list": [0.1, 0.2, 0.3], "N_list": [1, 2], "grid_cap": 5}"#)
                .unwrap();
        assert!(c.sweep_grid().is_err());
    }

    #[test]
    fn geometric_mode_needs_its_keys() {
        let c =
            Config::from_json(r#"{"N": 2, "coupling_mode": "geometric", "Gamma0": 1.0}"#).unwrap();
        assert!(c.model().is_err());
        let c = Config::from_json(
            r#"{"N": 2, "coupling_mode": "geometric", "Gamma0": 1.0, "R": 1.0, "alpha_angle": 0.0}"#,
        )
        .unwrap();
        assert!(matches!(
            c.model().unwrap().coupling,
            CouplingMode::Geometric { .. }
        ));
    }
}
