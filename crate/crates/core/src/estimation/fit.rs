//! Least-squares fits used for the figure reproductions.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// Asymptotic standard error, when the fit provides one.
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.parameter(name).map(|p| p.value)
    }

    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Value of a parameter the fit is known to produce.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("fit has no parameter {name}"))
    }
}

fn param(name: &str, value: f64, std_error: Option<f64>) -> FitParameter {
    FitParameter {
        name: name.to_string(),
        value,
        std_error,
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::domain("line fit needs at least two points"));
    }
    if points
        .iter()
        .any(|(x, y)| !(x.is_finite() && y.is_finite()))
    {
        return Err(Error::domain("line fit needs finite points"));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain(
            "line fit needs at least two distinct abscissae",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();

    let (se_slope, se_intercept) = if points.len() > 2 {
        let s2 = rss / (m - 2.0);
        let se_slope = (s2 / sxx).sqrt();
        let sum_x2: f64 = points.iter().map(|p| p.0 * p.0).sum();
        (Some(se_slope), Some((s2 * sum_x2 / (m * sxx)).sqrt()))
    } else {
        (None, None)
    };
    Ok(FitResult {
        parameters: vec![
            param("slope", slope, se_slope),
            param("intercept", intercept, se_intercept),
        ],
        residual_norm: rss.sqrt(),
        converged: true,
    })
}

/// `Φ = area·N² + phi0` by linear least squares in `N²`.
pub fn fit_quadratic_phase(points: &[(u32, f64)]) -> Result<FitResult> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, phi)| (f64::from(n).powi(2), phi))
        .collect();
    let line = fit_line(&xy)?;
    let slope = line.parameter("slope").cloned().expect("line fit");
    let intercept = line.parameter("intercept").cloned().expect("line fit");
    Ok(FitResult {
        parameters: vec![
            param("area", slope.value, slope.std_error),
            param("phi0", intercept.value, intercept.std_error),
        ],
        ..line
    })
}

/// `y = prefactor · x^exponent` by linear regression of `ln y` on `ln x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::domain(
            "power-law fit needs positive abscissae and ordinates",
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let line = fit_line(&logs)?;
    let slope = line.parameter("slope").cloned().expect("line fit");
    let prefactor = line.value("intercept").exp();
    Ok(FitResult {
        parameters: vec![
            param("prefactor", prefactor, None),
            param("exponent", slope.value, slope.std_error),
        ],
        ..line
    })
}

/// Scaling of an error curve `δA(N)`.
///
/// Parameters: `c` from the one-parameter fit `δA = 1/(cN²)` (linear least
/// squares in `1/N²`), and `exponent`/`prefactor` from the free fit
/// `δA = a·N^(−b)` in log-log space. `c_log` is the same one-parameter
/// model fitted to `ln δA`, which weights every `N` equally. The residual
/// norm belongs to the linear one-parameter fit.
pub fn fit_power_scaling(points: &[(u32, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::domain("scaling fit needs at least three points"));
    }
    if points
        .iter()
        .any(|&(n, d)| n < 1 || !(d > 0.0 && d.is_finite()))
    {
        return Err(Error::domain(
            "scaling fit needs N ≥ 1 and positive finite errors",
        ));
    }
    let inv_n2 = |n: u32| 1.0 / f64::from(n).powi(2);
    let sxy: f64 = points.iter().map(|&(n, d)| d * inv_n2(n)).sum();
    let sxx: f64 = points.iter().map(|&(n, _)| inv_n2(n).powi(2)).sum();
    let k = sxy / sxx;
    let residual: f64 = points
        .iter()
        .map(|&(n, d)| (d - k * inv_n2(n)).powi(2))
        .sum::<f64>()
        .sqrt();

    let c_log = (points
        .iter()
        .map(|&(n, d)| -d.ln() - 2.0 * f64::from(n).ln())
        .sum::<f64>()
        / points.len() as f64)
        .exp();

    let free = fit_power_law(
        &points
            .iter()
            .map(|&(n, d)| (f64::from(n), d))
            .collect::<Vec<_>>(),
    )?;
    let exponent = free.parameter("exponent").expect("power fit");
    Ok(FitResult {
        parameters: vec![
            param("c", 1.0 / k, None),
            param("exponent", -exponent.value, exponent.std_error),
            param("prefactor", free.value("prefactor"), None),
            param("c_log", c_log, None),
        ],
        residual_norm: residual,
        converged: true,
    })
}

const GRID_STEPS: usize = 256;
const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-10;

fn cosine_model(n: u32, area: f64, phi0: f64) -> f64 {
    0.5 * (1.0 - (f64::from(n).powi(2) * area + phi0).cos())
}

fn cosine_cost(points: &[(u32, f64)], area: f64, phi0: f64) -> f64 {
    points
        .iter()
        .map(|&(n, p)| (p - cosine_model(n, area, phi0)).powi(2))
        .sum()
}

/// Fit `P₋ = ½(1 − cos(N²A + φ₀))` to `(N, P₋)` data.
///
/// A deterministic grid over `A ∈ [0, π/N_max²]`, `φ₀ ∈ [0, π)` (ties go to
/// the smaller `A`) seeds a damped Gauss–Newton refinement. `converged` is
/// set once a full step is shorter than `1e-10`; otherwise the best point
/// found is returned with `converged = false`.
pub fn fit_cosine(points: &[(u32, f64)]) -> Result<FitResult> {
    let mut distinct: Vec<u32> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if points.len() < 3 || distinct.len() < 3 {
        return Err(Error::domain("cosine fit needs at least three distinct N"));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::domain("cosine fit needs finite probabilities"));
    }
    let n_max = f64::from(*distinct.last().expect("nonempty"));
    let area_max = PI / (n_max * n_max);

    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=GRID_STEPS {
        let area = area_max * i as f64 / GRID_STEPS as f64;
        for j in 0..GRID_STEPS {
            let phi0 = PI * j as f64 / GRID_STEPS as f64;
            let cost = cosine_cost(points, area, phi0);
            if cost < best.0 {
                best = (cost, area, phi0);
            }
        }
    }

    let (mut cost, mut area, mut phi0) = best;
    let mut converged = false;
    let mut normal = [[0.0; 2]; 2];
    for _ in 0..MAX_ITERATIONS {
        // J = ∂model/∂(A, φ₀), residual r = data − model
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for &(n, p) in points {
            let n2 = f64::from(n).powi(2);
            let s = 0.5 * (n2 * area + phi0).sin();
            let j = [s * n2, s];
            let r = p - cosine_model(n, area, phi0);
            for a in 0..2 {
                jtr[a] += j[a] * r;
                for b in 0..2 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        normal = jtj;
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        let scale = jtj[0][0] * jtj[1][1];
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also stops on NaN
        if !(det.abs() > 1e-14 * scale.max(f64::MIN_POSITIVE)) {
            break;
        }
        let step = [
            (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det,
            (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det,
        ];
        let step_norm = step[0].hypot(step[1]);
        if step_norm < STEP_TOLERANCE {
            converged = true;
            break;
        }
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let (a, f) = (area + scale * step[0], phi0 + scale * step[1]);
            let c = cosine_cost(points, a, f);
            if c <= cost {
                (cost, area, phi0) = (c, a, f);
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let dof = points.len() as f64 - 2.0;
    let det = normal[0][0] * normal[1][1] - normal[0][1] * normal[1][0];
    let (se_area, se_phi0) = if dof > 0.0 && det > 0.0 {
        let s2 = cost / dof;
        (
            Some((s2 * normal[1][1] / det).sqrt()),
            Some((s2 * normal[0][0] / det).sqrt()),
        )
    } else {
        (None, None)
    };
    Ok(FitResult {
        parameters: vec![param("area", area, se_area), param("phi0", phi0, se_phi0)],
        residual_norm: cost.sqrt(),
        converged,
    })
}
