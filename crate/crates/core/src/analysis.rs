//! Post-processing: maxima, scaling fits and photon-truncation audits.

use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, PropagationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Series {
    #[serde(rename = "E_b")]
    StoredEnergy,
    #[serde(rename = "P_b")]
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxRecord {
    pub t_star: f64,
    pub value: f64,
    pub series: Series,
}

/// Maximum of a sampled series, refined by the parabola through the three
/// samples around the grid argmax. Ties go to the earliest sample; a maximum
/// on either end of the grid is returned unrefined.
pub fn find_max_in(times: &[f64], values: &[f64], series: Series) -> Result<MaxRecord> {
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::Domain(
            "find_max needs a nonempty series on its grid".into(),
        ));
    }
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[k] {
            k = i;
        }
    }
    let (t, v) = (times[k], values[k]);
    if k == 0 || k + 1 == values.len() {
        return Ok(MaxRecord {
            t_star: t,
            value: v,
            series,
        });
    }
    let (t0, t1, t2) = (times[k - 1], t, times[k + 1]);
    let (y0, y1, y2) = (values[k - 1], v, values[k + 1]);
    // Vertex of the interpolating parabola (divided differences).
    let d01 = (y1 - y0) / (t1 - t0);
    let d12 = (y2 - y1) / (t2 - t1);
    let curv = (d12 - d01) / (t2 - t0);
    if curv.is_nan() || curv >= 0.0 {
        return Ok(MaxRecord {
            t_star: t,
            value: v,
            series,
        });
    }
    let slope_at_t1 = d01 + curv * (t1 - t0);
    let shift = -slope_at_t1 / (2.0 * curv);
    let t_star = (t1 + shift).clamp(t0, t2);
    let dt = t_star - t1;
    let value = (y1 + slope_at_t1 * dt + curv * dt * dt).max(v);
    Ok(MaxRecord {
        t_star,
        value,
        series,
    })
}

pub fn find_max(trajectory: &Trajectory, series: Series) -> Result<MaxRecord> {
    let values = match series {
        Series::StoredEnergy => &trajectory.stored_energy,
        Series::Power => &trajectory.power,
    };
    find_max_in(&trajectory.times, values, series)
}

/// `P_max ≈ β N^α` fitted by least squares in log–log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub r_squared: f64,
    pub n_points: usize,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    #[serde(rename = "P_list")]
    pub p_list: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`. A perfect fit of
/// constant data reports `r² = 1`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Domain("x and y lengths differ".into()));
    }
    if x.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

pub fn fit_power_law(ns: &[usize], p_maxes: &[f64]) -> Result<FitResult> {
    if ns.len() != p_maxes.len() {
        return Err(Error::Domain("N and P lists differ in length".into()));
    }
    if ns.contains(&0) || p_maxes.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(Error::Domain("power-law fit needs positive N and P".into()));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = p_maxes.iter().map(|p| p.ln()).collect();
    let fit = least_squares(&x, &y)?;
    Ok(FitResult {
        alpha: fit.slope,
        beta: fit.intercept.exp(),
        r_squared: fit.r_squared,
        n_points: ns.len(),
        n_list: ns.to_vec(),
        p_list: p_maxes.to_vec(),
    })
}

pub fn fit_linear(ns: &[usize], e_maxes: &[f64]) -> Result<LinearFit> {
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    least_squares(&x, e_maxes)
}

/// Worst-case absolute differences between two photon truncations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationDeviation {
    pub n_photon_max: usize,
    pub n_photon_ref: usize,
    pub stored_energy: f64,
    pub power: f64,
    pub fluctuation: f64,
}

impl TruncationDeviation {
    pub fn max(&self) -> f64 {
        self.stored_energy.max(self.power).max(self.fluctuation)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Compares runs at `params.n_photon_max` and `n_photon_max + delta_ph` on
/// the same time grid.
pub fn convergence_check(
    params: &ModelParams,
    cfg: &PropagationConfig,
    delta_ph: usize,
) -> Result<TruncationDeviation> {
    if delta_ph == 0 {
        return Err(Error::Domain("delta_ph must be at least 1".into()));
    }
    let reference = params
        .clone()
        .with_photon_cutoff(params.n_photon_max + delta_ph);
    let (base, fine) = rayon::join(|| propagate(params, cfg), || propagate(&reference, cfg));
    let (base, fine) = (base?, fine?);
    Ok(TruncationDeviation {
        n_photon_max: params.n_photon_max,
        n_photon_ref: reference.n_photon_max,
        stored_energy: max_abs_diff(&base.stored_energy, &fine.stored_energy),
        power: max_abs_diff(&base.power, &fine.power),
        fluctuation: max_abs_diff(&base.fluctuation, &fine.fluctuation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_in_the_middle() {
        let m = find_max_in(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0], Series::StoredEnergy).unwrap();
        assert_eq!(m.t_star, 1.0);
        assert_eq!(m.value, 1.0);
    }

    #[test]
    fn monotone_series_ends_on_last_point() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let m = find_max_in(&t, &[0.0, 0.5, 0.7, 0.8], Series::Power).unwrap();
        assert_eq!((m.t_star, m.value), (3.0, 0.8));
    }

    #[test]
    fn ties_pick_earliest() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let m = find_max_in(&t, &[0.0, 1.0, 0.0, 1.0, 0.0], Series::Power).unwrap();
        assert_eq!(m.t_star, 1.0);
    }

    #[test]
    fn parabola_refinement_is_exact_on_quadratics() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 - (x - 0.437f64).powi(2)).collect();
        let m = find_max_in(&t, &y, Series::StoredEnergy).unwrap();
        assert!((m.t_star - 0.437).abs() < 1e-12);
        assert!((m.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(find_max_in(&[], &[], Series::Power).is_err());
    }

    #[test]
    fn exact_power_law() {
        let ns: Vec<usize> = (1..=8).collect();
        let p: Vec<f64> = ns.iter().map(|&n| 2.0 * (n as f64).powf(1.5)).collect();
        let fit = fit_power_law(&ns, &p).unwrap();
        assert!((fit.alpha - 1.5).abs() < 1e-12);
        assert!((fit.beta - 2.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.n_points, 8);
    }

    #[test]
    fn constant_power_has_zero_exponent() {
        let fit = fit_power_law(&[1, 2, 3, 4], &[0.7; 4]).unwrap();
        assert!(fit.alpha.abs() < 1e-15);
        assert!((fit.beta - 0.7).abs() < 1e-15);
    }

    #[test]
    fn power_law_rejects_bad_input() {
        assert!(fit_power_law(&[1, 2, 3], &[1.0, -1.0, 2.0]).is_err());
        assert!(fit_power_law(&[1, 2], &[1.0, 2.0]).is_err());
        assert!(fit_power_law(&[0, 2, 3], &[1.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn linear_fits() {
        let ns = [1, 2, 3, 4, 5];
        let e: Vec<f64> = ns.iter().map(|&n| 0.9 * n as f64).collect();
        let fit = fit_linear(&ns, &e).unwrap();
        assert!((fit.slope - 0.9).abs() < 1e-14);
        assert!(fit.intercept.abs() < 1e-14);
        assert_eq!(fit.r_squared, 1.0);
        let flat = fit_linear(&ns, &[3.0; 5]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(fit_linear(&[1, 2], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn noisy_fit_has_partial_r2() {
        let fit = least_squares(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!(fit.r_squared > 0.0 && fit.r_squared < 1.0);
    }

    #[test]
    fn inert_photons_give_zero_deviation() {
        let p = ModelParams::new(2).with_photon_cutoff(3);
        let cfg = PropagationConfig {
            t_max: 1.0,
            dt: 0.01,
            ..Default::default()
        };
        let dev = convergence_check(&p, &cfg, 2).unwrap();
        assert_eq!(dev.max(), 0.0);
        assert_eq!(dev.n_photon_ref, 5);
        assert!(convergence_check(&p, &cfg, 0).is_err());
    }
}
