//! Figures of merit of the battery and the ground-state order parameter.
//!
//! Stored energy and its fluctuation use `H_b = ω0 J_z` only; the dipole
//! interaction energy is deliberately left out of the battery's account.

use crate::eigen::{lowest_eigenpair, residual, EigenOptions};
use crate::error::{Error, Result};
use crate::model::{build_h_battery, initial_state, ModelParams};
use crate::operators::{build_collective_spin, expectation, SparseOperator, SpinAxis, StateVector};

/// Ground-level splitting below which the ground state is flagged degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
/// Required eigen-residual `‖Hψ − Eψ‖`.
pub const GROUND_RESIDUAL_TOL: f64 = 1e-8;

const VARIANCE_FLOOR: f64 = -1e-10;

/// `H_b − ⟨H_b⟩_0 · 1`. Its expectation is the stored energy without the
/// cancellation error of subtracting two expectations; it vanishes exactly
/// on the initial spin configuration.
fn stored_energy_operator(battery: &SparseOperator, initial_energy: f64) -> Result<SparseOperator> {
    let shift = SparseOperator::identity(battery.dims()).scale_real(initial_energy);
    battery.sub(&shift).verify_hermitian()
}

/// `E_b(t) = ⟨H_b⟩_t − ⟨H_b⟩_0`, relative to the all-ground initial state.
pub fn stored_energy(state: &StateVector, params: &ModelParams) -> Result<f64> {
    let hb = build_h_battery(params)?;
    let e0 = expectation(&initial_state(params)?, &hb)?;
    expectation(state, &stored_energy_operator(&hb, e0)?)
}

/// Average charging power `E_b / t`, taken as zero at `t = 0`.
pub fn charging_power(stored_energy: f64, t: f64) -> f64 {
    if t > 0.0 {
        stored_energy / t
    } else {
        0.0
    }
}

fn std_dev(state: &StateVector, h: &SparseOperator, h2: &SparseOperator) -> Result<f64> {
    let mean = expectation(state, h)?;
    let var = expectation(state, h2)? - mean * mean;
    if var < VARIANCE_FLOOR {
        return Err(Error::Numerical(format!("negative variance {var:e}")));
    }
    Ok(var.max(0.0).sqrt())
}

/// `ΔE_b = √Var_t(H_b) − √Var_0(H_b)`.
pub fn energy_fluctuation(
    state_t: &StateVector,
    state_0: &StateVector,
    params: &ModelParams,
) -> Result<f64> {
    let hb = build_h_battery(params)?;
    let hb2 = hb.mul(&hb).verify_hermitian()?;
    Ok(std_dev(state_t, &hb, &hb2)? - std_dev(state_0, &hb, &hb2)?)
}

/// `⟨J_z⟩ / (N/2)`.
pub fn magnetization(state: &StateVector) -> Result<f64> {
    let dims = state.dims();
    let jz = build_collective_spin(SpinAxis::Z, dims);
    Ok(expectation(state, &jz)? / (dims.n_atoms() as f64 / 2.0))
}

/// One sample of the battery observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatterySample {
    pub stored_energy: f64,
    pub power: f64,
    pub fluctuation: f64,
    pub jz_mean: f64,
    pub norm: f64,
}

/// Observables with `H_b`, `H_b²`, `J_z` and the initial-state reference
/// values prepared once for a whole trajectory.
#[derive(Debug, Clone)]
pub struct BatteryProbe {
    battery: SparseOperator,
    battery_sq: SparseOperator,
    stored: SparseOperator,
    jz: SparseOperator,
    initial_std: f64,
}

impl BatteryProbe {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let battery = build_h_battery(params)?;
        let battery_sq = battery.mul(&battery).verify_hermitian()?;
        let jz = build_collective_spin(SpinAxis::Z, params.dims()?);
        let s0 = initial_state(params)?;
        let initial_energy = expectation(&s0, &battery)?;
        let initial_std = std_dev(&s0, &battery, &battery_sq)?;
        let stored = stored_energy_operator(&battery, initial_energy)?;
        Ok(Self {
            battery,
            battery_sq,
            stored,
            jz,
            initial_std,
        })
    }

    pub fn sample(&self, state: &StateVector, t: f64) -> Result<BatterySample> {
        let jz_mean = expectation(state, &self.jz)?;
        let stored = expectation(state, &self.stored)?;
        let fluctuation = std_dev(state, &self.battery, &self.battery_sq)? - self.initial_std;
        Ok(BatterySample {
            stored_energy: stored,
            power: charging_power(stored, t),
            fluctuation,
            jz_mean,
            norm: state.norm(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub energy: f64,
    pub state: StateVector,
    /// `⟨J_z⟩ / (N/2)` of the returned vector.
    pub magnetization: f64,
    /// Distance to the next eigenvalue, when the solver resolved it.
    pub gap: Option<f64>,
    /// Set when `gap < DEGENERACY_GAP`; the magnetization then belongs to
    /// whichever ground vector the solver returned.
    pub degenerate: bool,
    pub residual: f64,
}

pub fn ground_state(h: &SparseOperator) -> Result<GroundStateResult> {
    ground_state_with(h, &EigenOptions::default())
}

pub fn ground_state_with(h: &SparseOperator, opts: &EigenOptions) -> Result<GroundStateResult> {
    if !h.is_flagged_hermitian() && !h.is_hermitian(1e-12) {
        return Err(Error::Contract(
            "ground_state requires a Hermitian operator".into(),
        ));
    }
    let pair = lowest_eigenpair(h, opts)?;
    let res = residual(h, pair.value, &pair.vector);
    if res > GROUND_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "ground-state residual {res:e} above tolerance"
        )));
    }
    let state = StateVector::normalized(h.dims(), pair.vector)?;
    let magnetization = magnetization(&state)?.clamp(-1.0, 1.0);
    let gap = pair.next_value.map(|e1| e1 - pair.value);
    Ok(GroundStateResult {
        energy: pair.value,
        magnetization,
        degenerate: gap.is_some_and(|g| g < DEGENERACY_GAP),
        gap,
        residual: res,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::EigenMethod;
    use crate::model::build_h_undriven;
    use crate::operators::{HilbertDims, C64};

    fn half_excited_single(nph: usize, n: usize) -> StateVector {
        let d = HilbertDims::new(1, nph).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![C64::default(); d.total_dim()];
        a[d.index(0, n)] = C64::new(h, 0.0);
        a[d.index(1, n)] = C64::new(h, 0.0);
        StateVector::new(d, a).unwrap()
    }

    #[test]
    fn stored_energy_limits() {
        let p = ModelParams::new(3);
        let s0 = initial_state(&p).unwrap();
        assert_eq!(stored_energy(&s0, &p).unwrap(), 0.0);
        let full = StateVector::basis(p.dims().unwrap(), 7, 2).unwrap();
        assert_eq!(stored_energy(&full, &p).unwrap(), 3.0);
    }

    #[test]
    fn power_convention() {
        assert_eq!(charging_power(2.0, 4.0), 0.5);
        assert_eq!(charging_power(1.3, 0.0), 0.0);
        assert_eq!(charging_power(1.0, 6.0), 0.5 * charging_power(1.0, 3.0));
    }

    #[test]
    fn fluctuation_values() {
        let p = ModelParams::new(1).with_photon_cutoff(4).with_n_init(2);
        let s0 = initial_state(&p).unwrap();
        assert_eq!(energy_fluctuation(&s0, &s0, &p).unwrap(), 0.0);
        let mixed = half_excited_single(4, 2);
        assert!((energy_fluctuation(&mixed, &s0, &p).unwrap() - 0.5).abs() < 1e-15);
        let up = StateVector::basis(p.dims().unwrap(), 1, 0).unwrap();
        assert_eq!(energy_fluctuation(&up, &s0, &p).unwrap(), 0.0);
    }

    #[test]
    fn basis_states_have_no_fluctuation() {
        let p = ModelParams::new(3).with_photon_cutoff(2).with_n_init(0);
        let s0 = initial_state(&p).unwrap();
        for s in 0..8 {
            for n in 0..3 {
                let b = StateVector::basis(p.dims().unwrap(), s, n).unwrap();
                assert_eq!(energy_fluctuation(&b, &s0, &p).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn magnetization_values() {
        let d = HilbertDims::new(4, 1).unwrap();
        assert_eq!(
            magnetization(&StateVector::basis(d, 0, 0).unwrap()).unwrap(),
            -1.0
        );
        assert_eq!(
            magnetization(&StateVector::basis(d, 0b1010, 1).unwrap()).unwrap(),
            0.0
        );
        assert_eq!(
            magnetization(&StateVector::basis(d, 0b1111, 0).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn probe_matches_free_functions() {
        let p = ModelParams::new(1).with_photon_cutoff(4).with_n_init(2);
        let probe = BatteryProbe::new(&p).unwrap();
        let s = half_excited_single(4, 2);
        let sample = probe.sample(&s, 2.0).unwrap();
        let s0 = initial_state(&p).unwrap();
        assert_eq!(sample.stored_energy, stored_energy(&s, &p).unwrap());
        assert_eq!(sample.fluctuation, energy_fluctuation(&s, &s0, &p).unwrap());
        assert_eq!(sample.power, sample.stored_energy / 2.0);
        assert_eq!(sample.jz_mean, 0.0);
    }

    #[test]
    fn decoupled_ground_state() {
        let p = ModelParams::new(3).with_photon_cutoff(4);
        let h = build_h_undriven(&p).unwrap();
        let gs = ground_state(&h).unwrap();
        assert_eq!(gs.magnetization, -1.0);
        assert!((gs.energy + 1.5).abs() < 1e-12);
        assert!((gs.state.amplitude(0, 0).norm() - 1.0).abs() < 1e-12);
        assert!(!gs.degenerate);
    }

    #[test]
    fn degenerate_ground_is_flagged() {
        // ω0 → 0 limit: all spin configurations share the vacuum energy.
        let mut p = ModelParams::new(2).with_photon_cutoff(1).with_n_init(0);
        p.omega0 = 1e-14;
        let h = build_h_undriven(&p).unwrap();
        let gs = ground_state(&h).unwrap();
        assert!(gs.degenerate);
    }

    #[test]
    fn lanczos_ground_state_matches_dense() {
        let p = ModelParams::new(3).with_g(0.1).with_eta(1.0);
        let h = build_h_undriven(&p).unwrap();
        let dense = ground_state_with(
            &h,
            &EigenOptions {
                method: EigenMethod::Dense,
                ..Default::default()
            },
        )
        .unwrap();
        let lz = ground_state_with(
            &h,
            &EigenOptions {
                method: EigenMethod::Lanczos,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((dense.energy - lz.energy).abs() < 1e-10);
        assert!((dense.magnetization - lz.magnetization).abs() < 1e-8);
        assert!(lz.residual < GROUND_RESIDUAL_TOL);
    }
}
