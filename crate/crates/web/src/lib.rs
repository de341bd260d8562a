//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every exported function returns a JSON string. The `*_json` functions
//! hold the logic and are plain Rust so they can be tested natively.

use num_complex::Complex64 as C64;
use serde::Serialize;
use switchmet::experiment::{run_baseline, run_fig3, ExperimentConfig, Mode};
use switchmet::phase_algebra::{enclosed_area, loop_phase_by_fold};
use switchmet::switch_protocol::outcome_probabilities;
use switchmet::DisplacementSequence;
use wasm_bindgen::prelude::*;

/// Largest `N` the page may request; keeps a click responsive.
const MAX_N: u32 = 40;

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn check_n_max(n_max: u32) -> Result<(), String> {
    if (1..=MAX_N).contains(&n_max) {
        Ok(())
    } else {
        Err(format!("n_max must lie in 1..={MAX_N}"))
    }
}

#[derive(Serialize)]
struct FringePoint {
    n: u32,
    predicted: f64,
    simulated: f64,
    sigma: f64,
}

#[derive(Serialize)]
struct Fringe {
    /// Smooth curve in `N` for drawing.
    curve: Vec<(f64, f64)>,
    points: Vec<FringePoint>,
}

pub fn fringe_json(
    area: f64,
    phi0: f64,
    nu: u32,
    trials: u32,
    n_max: u32,
    seed: u64,
) -> Result<String, String> {
    check_n_max(n_max)?;
    let cfg = ExperimentConfig {
        seed,
        nu: u64::from(nu),
        trials: trials as usize,
        n_max: Some(n_max),
        phi0,
        area: Some(area),
        ..ExperimentConfig::for_mode(Mode::Fig3)
    };
    let result = run_fig3(&cfg).map_err(|e| e.to_string())?;
    let steps = 400;
    let curve = (0..=steps)
        .map(|i| {
            let x = f64::from(n_max) * f64::from(i) / f64::from(steps);
            (x, 0.5 * (1.0 - (x * x * area + phi0).cos()))
        })
        .collect();
    let points = result
        .rows
        .iter()
        .map(|r| FringePoint {
            n: r.n,
            predicted: outcome_probabilities(area, r.n, phi0).minus,
            simulated: r.mean_p_minus,
            sigma: r.sigma_of_mean,
        })
        .collect();
    to_json(&Fringe { curve, points })
}

#[derive(Serialize)]
struct ScalingRow {
    n: u32,
    switch_rmse: f64,
    baseline_rmse: f64,
    crb_switch: f64,
    crb_fixed_order: f64,
}

#[derive(Serialize)]
struct Scaling {
    rows: Vec<ScalingRow>,
    switch_exponent: Option<f64>,
    baseline_exponent: Option<f64>,
}

pub fn scaling_json(nu: u32, repetitions: u32, n_max: u32, seed: u64) -> Result<String, String> {
    check_n_max(n_max)?;
    let cfg = ExperimentConfig {
        seed,
        nu: u64::from(nu),
        repetitions: repetitions as usize,
        n_max: Some(n_max),
        ..ExperimentConfig::for_mode(Mode::Baseline)
    };
    let r = run_baseline(&cfg).map_err(|e| e.to_string())?;
    to_json(&Scaling {
        rows: r
            .rows
            .iter()
            .map(|row| ScalingRow {
                n: row.n,
                switch_rmse: row.switch_rmse,
                baseline_rmse: row.baseline_rmse,
                crb_switch: row.crb_switch,
                crb_fixed_order: row.crb_fixed_order,
            })
            .collect(),
        switch_exponent: r.switch_fit.map(|f| f.value("exponent")),
        baseline_exponent: r.baseline_fit.map(|f| f.value("exponent")),
    })
}

#[derive(Serialize)]
struct Loop {
    /// Vertices of "A then B" and "B then A", from the origin.
    path_ab: Vec<(f64, f64)>,
    path_ba: Vec<(f64, f64)>,
    enclosed_area: f64,
    regularized_area: f64,
    loop_phase: f64,
    fold_phase: f64,
}

fn parse_sequence(flat: &[f64]) -> Result<DisplacementSequence, String> {
    if flat.is_empty() || !flat.len().is_multiple_of(2) {
        return Err("expected a nonempty list of (re, im) pairs".into());
    }
    DisplacementSequence::from_amplitudes(flat.chunks(2).map(|c| C64::new(c[0], c[1])))
        .map_err(|e| e.to_string())
}

fn vertices(seq: &DisplacementSequence) -> Vec<(f64, f64)> {
    let mut at = C64::new(0.0, 0.0);
    std::iter::once((0.0, 0.0))
        .chain(seq.iter().map(|z| {
            at += z;
            (at.re, at.im)
        }))
        .collect()
}

/// `a` and `b` are flat `[re₀, im₀, re₁, im₁, …]` lists of equal length.
pub fn loop_json(a: &[f64], b: &[f64]) -> Result<String, String> {
    let (a, b) = (parse_sequence(a)?, parse_sequence(b)?);
    let g = enclosed_area(&a, &b).map_err(|e| e.to_string())?;
    to_json(&Loop {
        path_ab: vertices(&a.then(&b)),
        path_ba: vertices(&b.then(&a)),
        enclosed_area: g.enclosed_area,
        regularized_area: g.regularized_area,
        loop_phase: g.loop_phase,
        fold_phase: loop_phase_by_fold(&a, &b).map_err(|e| e.to_string())?,
    })
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Predicted and simulated `P₋` against `N`.
#[wasm_bindgen]
pub fn fringe(
    area: f64,
    phi0: f64,
    nu: u32,
    trials: u32,
    n_max: u32,
    seed: u32,
) -> Result<String, JsError> {
    js(fringe_json(area, phi0, nu, trials, n_max, u64::from(seed)))
}

/// SWITCH and fixed-order RMSE with their bounds.
#[wasm_bindgen]
pub fn scaling(nu: u32, repetitions: u32, n_max: u32, seed: u32) -> Result<String, JsError> {
    js(scaling_json(nu, repetitions, n_max, u64::from(seed)))
}

/// Both orderings of two displacement groups, their enclosed area and phase.
#[wasm_bindgen]
pub fn loop_geometry(a: &[f64], b: &[f64]) -> Result<String, JsError> {
    js(loop_json(a, b))
}
