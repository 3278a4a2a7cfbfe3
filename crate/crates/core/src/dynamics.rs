//! Time-ordered propagation of the joint state.
//!
//! The production integrator is the fourth-order commutator-free Magnus
//! scheme: two exponentials of Hamiltonian combinations sampled at the
//! Gauss–Legendre nodes, each applied to the state by a scaled Taylor series.
//! The oracle route multiplies dense matrix exponentials of the midpoint
//! Hamiltonian on a 20× finer grid.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{initial_state, ModelHamiltonian, ModelParams};
use crate::observables::BatteryProbe;
use crate::operators::{SparseOperator, StateVector, C64};
use crate::output::fmt12;

/// Largest joint dimension the dense oracle accepts.
pub const ORACLE_MAX_DIM: usize = 4096;
/// Fine steps per coarse step in the oracle.
pub const ORACLE_REFINEMENT: usize = 20;
/// Norm deviation that aborts a propagation.
pub const NORM_FAILURE_TOL: f64 = 1e-6;

const TAYLOR_TOL: f64 = 1e-16;
const TAYLOR_MAX_TERMS: usize = 60;
/// Upper bound on `h ‖A‖₁` per Taylor substep.
const TAYLOR_SUBSTEP_NORM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Magnus4,
    OracleExpm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub t_max: f64,
    pub dt: f64,
    pub sample_stride: usize,
    pub method: Method,
    /// Refuse Hilbert spaces larger than this.
    pub max_dim: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            t_max: 20.0,
            dt: 1e-3,
            sample_stride: 10,
            method: Method::Magnus4,
            max_dim: 1 << 20,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain("dt must be positive".into()));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(Error::Domain("t_max must be at least dt".into()));
        }
        if self.sample_stride == 0 {
            return Err(Error::Domain("sample_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the uniform step actually used (`≤ dt`).
    pub fn grid(&self) -> (usize, f64) {
        let n = ((self.t_max / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_max / n as f64)
    }
}

/// Sampled figures of merit along one charging run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub stored_energy: Vec<f64>,
    pub power: Vec<f64>,
    pub fluctuation: Vec<f64>,
    pub jz_mean: Vec<f64>,
    pub norms: Vec<f64>,
    pub params: ModelParams,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,E_b,P_b,dE_b,Jz_mean,norm";

impl Trajectory {
    fn empty(params: &ModelParams) -> Self {
        Self {
            times: Vec::new(),
            stored_energy: Vec::new(),
            power: Vec::new(),
            fluctuation: Vec::new(),
            jz_mean: Vec::new(),
            norms: Vec::new(),
            params: params.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_norm(&self) -> Option<f64> {
        self.norms.last().copied()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt12(self.times[k]),
                fmt12(self.stored_energy[k]),
                fmt12(self.power[k]),
                fmt12(self.fluctuation[k]),
                fmt12(self.jz_mean[k]),
                fmt12(self.norms[k]),
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Applies `exp(−i τ (S + κ X))` to a vector by a scaled Taylor series,
/// reusing its scratch buffers across calls.
#[derive(Debug, Clone)]
struct TaylorExp {
    term: Vec<C64>,
    next: Vec<C64>,
}

impl TaylorExp {
    fn new(dim: usize) -> Self {
        Self {
            term: vec![C64::default(); dim],
            next: vec![C64::default(); dim],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply(
        &mut self,
        base: &SparseOperator,
        base_norm: f64,
        kappa: f64,
        quad: &SparseOperator,
        quad_norm: f64,
        tau: f64,
        psi: &mut [C64],
    ) -> Result<()> {
        let bound = tau.abs() * (base_norm + kappa.abs() * quad_norm);
        if bound == 0.0 {
            return Ok(());
        }
        let substeps = (bound / TAYLOR_SUBSTEP_NORM).ceil().max(1.0) as usize;
        let h = tau / substeps as f64;
        for _ in 0..substeps {
            self.term.copy_from_slice(psi);
            let mut converged = false;
            for k in 1..=TAYLOR_MAX_TERMS {
                base.matvec(&self.term, &mut self.next);
                if kappa != 0.0 {
                    quad.matvec_add(C64::new(kappa, 0.0), &self.term, &mut self.next);
                }
                let factor = C64::new(0.0, -h / k as f64);
                let mut size = 0.0;
                for (t, n) in self.term.iter_mut().zip(&self.next) {
                    *t = factor * n;
                    size += t.norm_sqr();
                }
                for (p, t) in psi.iter_mut().zip(&self.term) {
                    *p += t;
                }
                if size.sqrt() <= TAYLOR_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Numerical(
                    "Taylor exponential did not converge".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and exponent weights of the commutator-free scheme.
const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const NODE_1: f64 = 0.5 - SQRT3_6;
const NODE_2: f64 = 0.5 + SQRT3_6;
const WEIGHT_LEAD: f64 = 0.25 + SQRT3_6;
const WEIGHT_TRAIL: f64 = 0.25 - SQRT3_6;

/// Reusable fourth-order commutator-free Magnus integrator for one model.
#[derive(Debug, Clone)]
pub struct Magnus4Stepper<'h> {
    hamiltonian: &'h ModelHamiltonian,
    charged_norm: f64,
    battery_norm: f64,
    quad_norm: f64,
    exp: TaylorExp,
}

impl<'h> Magnus4Stepper<'h> {
    pub fn new(hamiltonian: &'h ModelHamiltonian) -> Self {
        Self {
            hamiltonian,
            charged_norm: hamiltonian.charged_static().norm_one(),
            battery_norm: hamiltonian.battery().norm_one(),
            quad_norm: hamiltonian.quadrature().norm_one(),
            exp: TaylorExp::new(hamiltonian.dims().total_dim()),
        }
    }

    /// Advances `psi` from `t` to `t + dt` in place. A step that straddles
    /// an edge of the charging window is split there.
    pub fn step(&mut self, psi: &mut [C64], t: f64, dt: f64) -> Result<()> {
        let end = t + dt;
        let mut edges = vec![t];
        let mut cuts = vec![0.0];
        if let Some(window_end) = self.hamiltonian.params().charging_time {
            cuts.push(window_end);
        }
        for c in cuts {
            if c > t && c < end {
                edges.push(c);
            }
        }
        edges.push(end);
        for w in edges.windows(2) {
            self.step_smooth(psi, w[0], w[1] - w[0])?;
        }
        Ok(())
    }

    fn step_smooth(&mut self, psi: &mut [C64], t: f64, dt: f64) -> Result<()> {
        let h = self.hamiltonian;
        let (base, _) = h.parts_at(t + 0.5 * dt);
        let base_norm = if std::ptr::eq(base, h.battery()) {
            self.battery_norm
        } else {
            self.charged_norm
        };
        let (_, f1) = h.parts_at(t + NODE_1 * dt);
        let (_, f2) = h.parts_at(t + NODE_2 * dt);
        // exp(−i dt (w_a H1 + w_b H2)) = exp(−i dt/2 (S + 2(w_a f1 + w_b f2) X))
        let first = 2.0 * (WEIGHT_LEAD * f1 + WEIGHT_TRAIL * f2);
        let second = 2.0 * (WEIGHT_TRAIL * f1 + WEIGHT_LEAD * f2);
        let quad = h.quadrature();
        self.exp
            .apply(base, base_norm, first, quad, self.quad_norm, 0.5 * dt, psi)?;
        self.exp
            .apply(base, base_norm, second, quad, self.quad_norm, 0.5 * dt, psi)?;
        Ok(())
    }
}

/// One commutator-free Magnus step of length `dt` starting at `t`.
pub fn step_magnus4(
    hamiltonian: &ModelHamiltonian,
    state: &StateVector,
    t: f64,
    dt: f64,
) -> Result<StateVector> {
    if state.dims() != hamiltonian.dims() {
        return Err(Error::Contract(
            "state and Hamiltonian dimensions differ".into(),
        ));
    }
    let mut out = state.clone();
    Magnus4Stepper::new(hamiltonian).step(out.amplitudes_mut(), t, dt)?;
    Ok(out)
}

fn check_norm(t: f64, psi: &[C64]) -> Result<f64> {
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let deviation = (norm - 1.0).abs();
    if deviation > NORM_FAILURE_TOL || !norm.is_finite() {
        return Err(Error::IntegrationFailure { time: t, deviation });
    }
    Ok(norm)
}

/// Evolves the initial state and hands every sampled `(t, state)` to
/// `observe`, including `t = 0` and the final time.
pub fn evolve_with<F>(params: &ModelParams, cfg: &PropagationConfig, mut observe: F) -> Result<()>
where
    F: FnMut(f64, &StateVector) -> Result<()>,
{
    cfg.validate()?;
    params.validate()?;
    let dims = params.dims()?;
    let limit = match cfg.method {
        Method::Magnus4 => cfg.max_dim,
        Method::OracleExpm => cfg.max_dim.min(ORACLE_MAX_DIM),
    };
    if dims.total_dim() > limit {
        return Err(Error::Resource(format!(
            "joint dimension {} exceeds the limit {limit}",
            dims.total_dim()
        )));
    }
    let hamiltonian = ModelHamiltonian::new(params)?;
    let mut state = initial_state(params)?;
    let (n_steps, h) = cfg.grid();
    observe(0.0, &state)?;

    match cfg.method {
        Method::Magnus4 => {
            let mut stepper = Magnus4Stepper::new(&hamiltonian);
            for k in 0..n_steps {
                let t = k as f64 * h;
                stepper.step(state.amplitudes_mut(), t, h)?;
                let t_next = (k + 1) as f64 * h;
                check_norm(t_next, state.amplitudes())?;
                if (k + 1) % cfg.sample_stride == 0 || k + 1 == n_steps {
                    observe(t_next, &state)?;
                }
            }
        }
        Method::OracleExpm => {
            let mut oracle = DenseOracle::new(&hamiltonian, h / ORACLE_REFINEMENT as f64);
            let mut psi = DVector::from_column_slice(state.amplitudes());
            for k in 0..n_steps {
                let t = k as f64 * h;
                for m in 0..ORACLE_REFINEMENT {
                    let mid = t + (m as f64 + 0.5) * oracle.fine_dt;
                    psi = oracle.propagator(mid).apply(&psi);
                }
                let t_next = (k + 1) as f64 * h;
                check_norm(t_next, psi.as_slice())?;
                if (k + 1) % cfg.sample_stride == 0 || k + 1 == n_steps {
                    state = StateVector::from_propagated(dims, psi.as_slice().to_vec());
                    observe(t_next, &state)?;
                }
            }
        }
    }
    Ok(())
}

/// Dense propagator `exp(−iτH)` for one piecewise-constant interval.
enum DensePropagator {
    /// `cos(τH)` and `sin(τH)` of a real symmetric `H`.
    Real {
        cos: DMatrix<f64>,
        sin: DMatrix<f64>,
    },
    Complex(DMatrix<C64>),
}

impl DensePropagator {
    fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        match self {
            Self::Real { cos, sin } => {
                let re = psi.map(|z| z.re);
                let im = psi.map(|z| z.im);
                // (C − iS)(x + iy) = (Cx + Sy) + i(Cy − Sx)
                let out_re = cos * &re + sin * &im;
                let out_im = cos * &im - sin * &re;
                out_re.zip_map(&out_im, C64::new)
            }
            Self::Complex(u) => u * psi,
        }
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `cos(X)` and `sin(X)` of a real symmetric matrix by scaled power series
/// and double-angle squaring.
fn cos_sin(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let norm = one_norm(x);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = x / 2f64.powi(squarings);
    let mut cos = DMatrix::<f64>::identity(n, n);
    let mut sin = DMatrix::<f64>::zeros(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            cos += &term * sign;
        } else {
            sin += &term * sign;
        }
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        let c2 = &cos * &cos - &sin * &sin;
        let s2 = (&sin * &cos) * 2.0;
        cos = c2;
        sin = s2;
    }
    (cos, sin)
}

/// Dense piecewise-constant propagator with a cache for repeated Hamiltonians.
struct DenseOracle {
    charged: DMatrix<C64>,
    battery: DMatrix<C64>,
    quad: DMatrix<C64>,
    real: bool,
    fine_dt: f64,
    params: ModelParams,
    cached: Option<(bool, f64, DensePropagator)>,
}

impl DenseOracle {
    fn new(h: &ModelHamiltonian, fine_dt: f64) -> Self {
        Self {
            charged: h.charged_static().to_dense(),
            battery: h.battery().to_dense(),
            quad: h.quadrature().to_dense(),
            real: h.charged_static().is_real() && h.quadrature().is_real(),
            fine_dt,
            params: h.params().clone(),
            cached: None,
        }
    }

    fn propagator(&mut self, t_mid: f64) -> &DensePropagator {
        let on = crate::model::charging_window(t_mid, &self.params);
        let f = if on {
            crate::model::drive_coefficient(t_mid, &self.params)
        } else {
            0.0
        };
        let hit = matches!(self.cached, Some((c_on, c_f, _)) if c_on == on && c_f == f);
        if !hit {
            let base = if on { &self.charged } else { &self.battery };
            let h = base + &self.quad * C64::new(f, 0.0);
            let prop = if self.real {
                let (cos, sin) = cos_sin(&(h.map(|z| z.re) * self.fine_dt));
                DensePropagator::Real { cos, sin }
            } else {
                DensePropagator::Complex((h * C64::new(0.0, -self.fine_dt)).exp())
            };
            self.cached = Some((on, f, prop));
        }
        &self.cached.as_ref().unwrap().2
    }
}

fn record(params: &ModelParams, cfg: &PropagationConfig) -> Result<Trajectory> {
    let probe = BatteryProbe::new(params)?;
    let mut traj = Trajectory::empty(params);
    evolve_with(params, cfg, |t, state| {
        let s = probe.sample(state, t)?;
        traj.times.push(t);
        traj.stored_energy.push(s.stored_energy);
        traj.power.push(s.power);
        traj.fluctuation.push(s.fluctuation);
        traj.jz_mean.push(s.jz_mean);
        traj.norms.push(s.norm);
        Ok(())
    })?;
    Ok(traj)
}

/// Propagates with the method selected in `cfg` and records the trajectory.
pub fn propagate(params: &ModelParams, cfg: &PropagationConfig) -> Result<Trajectory> {
    record(params, cfg)
}

/// Dense oracle trajectory on the same sample grid as [`propagate`].
pub fn oracle_propagate(params: &ModelParams, cfg: &PropagationConfig) -> Result<Trajectory> {
    let cfg = PropagationConfig {
        method: Method::OracleExpm,
        ..cfg.clone()
    };
    record(params, &cfg)
}

/// Final state of a run, for fidelity comparisons.
pub fn final_state(params: &ModelParams, cfg: &PropagationConfig) -> Result<StateVector> {
    let mut last = None;
    evolve_with(params, cfg, |_, s| {
        last = Some(s.clone());
        Ok(())
    })?;
    Ok(last.expect("evolve_with always observes t = 0"))
}
