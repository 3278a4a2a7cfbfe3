//! Battery, charger, dipole-interaction and drive Hamiltonians.
//!
//! All energies are in units of the atomic splitting `ω0` with `ħ = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    build_boson, build_collective_spin, BosonKind, HilbertDims, SparseOperator, SpinAxis,
    StateVector, C64,
};

/// Offsets `|i − j|` beyond this carry no dipole coupling.
pub const DIPOLE_RANGE: usize = 4;

/// How the pairwise dipole couplings `η_ij` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CouplingMode {
    /// Nearest-neighbour strength `eta`; longer offsets fall off as `|i−j|^-3`.
    /// Positive is repulsive, negative attractive.
    Direct { eta: f64 },
    /// Dipole formula from the spontaneous emission rate, lattice spacing and
    /// the angle between the dipole moment and the chain axis.
    Geometric {
        gamma0: f64,
        spacing: f64,
        alpha_angle: f64,
        c_light: f64,
    },
}

/// Physical parameters of one battery instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub omegac: f64,
    pub omegad: f64,
    pub g: f64,
    #[serde(rename = "Omega")]
    pub drive_amplitude: f64,
    #[serde(rename = "N")]
    pub n_atoms: usize,
    #[serde(rename = "N_ph")]
    pub n_photon_max: usize,
    pub n_init: usize,
    /// End of the charging window; `None` keeps the charger on for all `t ≥ 0`.
    #[serde(rename = "T")]
    pub charging_time: Option<f64>,
    pub coupling: CouplingMode,
}

impl ModelParams {
    /// Resonant defaults for `n_atoms` atoms: `ω0 = ωc = ωd = 1`, no coupling,
    /// photon cutoff `4N`, initial Fock state `|N⟩`.
    pub fn new(n_atoms: usize) -> Self {
        Self {
            omega0: 1.0,
            omegac: 1.0,
            omegad: 1.0,
            g: 0.0,
            drive_amplitude: 0.0,
            n_atoms,
            n_photon_max: 4 * n_atoms,
            n_init: n_atoms,
            charging_time: None,
            coupling: CouplingMode::Direct { eta: 0.0 },
        }
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_drive(mut self, amplitude: f64) -> Self {
        self.drive_amplitude = amplitude;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.coupling = CouplingMode::Direct { eta };
        self
    }

    pub fn with_photon_cutoff(mut self, n_photon_max: usize) -> Self {
        self.n_photon_max = n_photon_max;
        self
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init;
        self
    }

    pub fn with_charging_time(mut self, t: f64) -> Self {
        self.charging_time = Some(t);
        self
    }

    /// Nearest-neighbour coupling in direct mode, `None` in geometric mode.
    pub fn eta(&self) -> Option<f64> {
        match self.coupling {
            CouplingMode::Direct { eta } => Some(eta),
            CouplingMode::Geometric { .. } => None,
        }
    }

    pub fn dims(&self) -> Result<HilbertDims> {
        HilbertDims::new(self.n_atoms, self.n_photon_max)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega0,
            self.omegac,
            self.omegad,
            self.g,
            self.drive_amplitude,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("model parameters must be finite".into()));
        }
        if self.omega0 <= 0.0 || self.omegac <= 0.0 {
            return Err(Error::Domain("omega0 and omegac must be positive".into()));
        }
        if self.n_atoms == 0 {
            return Err(Error::Domain("N must be at least 1".into()));
        }
        if self.n_init > self.n_photon_max {
            return Err(Error::Domain(format!(
                "n_init = {} exceeds the photon cutoff N_ph = {}",
                self.n_init, self.n_photon_max
            )));
        }
        if let Some(t) = self.charging_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain("charging window T must be positive".into()));
            }
        }
        if let CouplingMode::Geometric {
            gamma0,
            spacing,
            alpha_angle,
            c_light,
        } = self.coupling
        {
            if ![gamma0, spacing, alpha_angle, c_light]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::Domain(
                    "geometric coupling parameters must be finite".into(),
                ));
            }
            if spacing <= 0.0 || c_light <= 0.0 {
                return Err(Error::Domain(
                    "lattice spacing and c must be positive".into(),
                ));
            }
        }
        self.dims().map(|_| ())
    }
}

/// Dipole coupling between sites `i` and `j` (1-based).
pub fn dipole_coupling(i: usize, j: usize, params: &ModelParams) -> Result<f64> {
    if i == j {
        return Err(Error::Domain(format!(
            "dipole coupling of site {i} with itself"
        )));
    }
    let offset = i.abs_diff(j);
    if offset > DIPOLE_RANGE {
        return Ok(0.0);
    }
    let cube = (offset as f64).powi(3);
    Ok(match params.coupling {
        CouplingMode::Direct { eta } => eta / cube,
        CouplingMode::Geometric {
            gamma0,
            spacing,
            alpha_angle,
            c_light,
        } => {
            let cos = alpha_angle.cos();
            let mut angular = 3.0 * cos * cos - 1.0;
            // Snap rounding noise at the magic angle.
            if angular.abs() < 8.0 * f64::EPSILON {
                angular = 0.0;
            }
            let dist = offset as f64 * spacing;
            -0.75 * gamma0 * c_light.powi(3) / (params.omega0.powi(3) * dist.powi(3)) * angular
        }
    })
}

/// Symmetric `N × N` table of `η_ij` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaMatrix {
    n: usize,
    values: Vec<f64>,
}

impl EtaMatrix {
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        let n = params.n_atoms;
        let mut values = vec![0.0; n * n];
        for i in 1..=n {
            for j in (i + 1)..=n {
                let v = dipole_coupling(i, j, params)?;
                values[(i - 1) * n + (j - 1)] = v;
                values[(j - 1) * n + (i - 1)] = v;
            }
        }
        Ok(Self { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `η_ij` for 1-based sites.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i - 1) * self.n + (j - 1)]
    }

    /// Nonzero couplings as `(i, j, η_ij)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.n).flat_map(move |i| {
            ((i + 1)..=self.n).filter_map(move |j| {
                let v = self.get(i, j);
                (v != 0.0).then_some((i, j, v))
            })
        })
    }
}

/// `H_b = ω0 J_z`.
pub fn build_h_battery(params: &ModelParams) -> Result<SparseOperator> {
    let dims = params.dims()?;
    Ok(build_collective_spin(SpinAxis::Z, dims).scale_real(params.omega0))
}

/// Flip-flop dipole interaction `Σ_{i<j} η_ij (σ_i^− σ_j^+ + σ_j^− σ_i^+)`.
///
/// Each unordered pair appears once, so `⟨…e…g…|H_int|…g…e…⟩ = η_ij`.
pub fn build_h_interaction(params: &ModelParams) -> Result<SparseOperator> {
    let dims = params.dims()?;
    let eta = EtaMatrix::from_params(params)?;
    let mut trips = Vec::new();
    for (i, j, v) in eta.pairs() {
        let (mi, mj) = (dims.site_mask(i), dims.site_mask(j));
        for s in 0..dims.spin_dim() {
            // Exactly one of the two sites excited: swap the excitation.
            if ((s & mi) != 0) != ((s & mj) != 0) {
                let t = s ^ mi ^ mj;
                for n in 0..dims.boson_dim() {
                    trips.push((dims.index(t, n), dims.index(s, n), C64::new(v, 0.0)));
                }
            }
        }
    }
    SparseOperator::from_triplets(dims, trips)?.verify_hermitian()
}

/// `a + a†`, the quadrature the cavity coupling and the drive act through.
pub fn build_field_quadrature(dims: HilbertDims) -> SparseOperator {
    let a = build_boson(BosonKind::Annihilate, dims);
    let ad = build_boson(BosonKind::Create, dims);
    a.add(&ad).verify_hermitian().expect("a + a† is Hermitian")
}

/// Undriven part of the charger: `ωc a†a + 2g (a† + a) J_x + H_int`.
pub fn build_h_static(params: &ModelParams) -> Result<SparseOperator> {
    params.validate()?;
    let dims = params.dims()?;
    let cavity = build_boson(BosonKind::Number, dims).scale_real(params.omegac);
    let jx = build_collective_spin(SpinAxis::X, dims);
    let coupling = build_field_quadrature(dims)
        .mul(&jx)
        .scale_real(2.0 * params.g);
    cavity
        .add(&coupling)
        .add(&build_h_interaction(params)?)
        .verify_hermitian()
}

/// Battery plus undriven charger, the time-independent Hamiltonian whose
/// ground state defines the magnetization phase diagram.
pub fn build_h_undriven(params: &ModelParams) -> Result<SparseOperator> {
    Ok(build_h_battery(params)?.add(&build_h_static(params)?))
}

/// Scalar drive amplitude `Ω cos(ωd t)` multiplying `a + a†`.
pub fn drive_coefficient(t: f64, params: &ModelParams) -> f64 {
    params.drive_amplitude * (params.omegad * t).cos()
}

/// Charging window `Θ(t)`: one on `[0, T]`, zero elsewhere.
pub fn charging_window(t: f64, params: &ModelParams) -> bool {
    t >= 0.0 && params.charging_time.is_none_or(|end| t <= end)
}

/// Pre-assembled pieces of `H_s(t) = H_b + Θ(t) [H_static + Ω cos(ωd t)(a + a†)]`.
#[derive(Debug, Clone)]
pub struct ModelHamiltonian {
    params: ModelParams,
    battery: SparseOperator,
    charged: SparseOperator,
    quadrature: SparseOperator,
}

impl ModelHamiltonian {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let battery = build_h_battery(params)?;
        let charged = battery.add(&build_h_static(params)?);
        let quadrature = build_field_quadrature(params.dims()?);
        Ok(Self {
            params: params.clone(),
            battery,
            charged,
            quadrature,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dims(&self) -> HilbertDims {
        self.battery.dims()
    }

    pub fn battery(&self) -> &SparseOperator {
        &self.battery
    }

    /// `H_b + H_static`.
    pub fn charged_static(&self) -> &SparseOperator {
        &self.charged
    }

    pub fn quadrature(&self) -> &SparseOperator {
        &self.quadrature
    }

    /// Static operator and drive coefficient in effect at `t`:
    /// `H_s(t) = static + coefficient · (a + a†)`.
    pub fn parts_at(&self, t: f64) -> (&SparseOperator, f64) {
        if charging_window(t, &self.params) {
            (&self.charged, drive_coefficient(t, &self.params))
        } else {
            (&self.battery, 0.0)
        }
    }

    /// Assembled `H_s(t)`.
    pub fn at(&self, t: f64) -> SparseOperator {
        let (base, f) = self.parts_at(t);
        if f == 0.0 {
            base.clone()
        } else {
            base.add(&self.quadrature.scale_real(f))
        }
    }
}

/// `H_s(t)` assembled from scratch.
pub fn hamiltonian_at(t: f64, params: &ModelParams) -> Result<SparseOperator> {
    Ok(ModelHamiltonian::new(params)?.at(t))
}

/// `|g, g, …, g⟩ ⊗ |n_init⟩`.
pub fn initial_state(params: &ModelParams) -> Result<StateVector> {
    if params.n_init > params.n_photon_max {
        return Err(Error::Domain(format!(
            "n_init = {} exceeds the photon cutoff N_ph = {}",
            params.n_init, params.n_photon_max
        )));
    }
    StateVector::basis(params.dims()?, 0, params.n_init)
}
