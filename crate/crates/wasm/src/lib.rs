//! Browser bindings for a small interactive epirisk demo.
//!
//! The page builds one simulated town, then lets the user scrub through
//! daily risk maps, change the decay weights, and trade detection rate
//! against false alarms by moving the quantile level.

use wasm_bindgen::prelude::*;

pub mod model;

pub use model::{decay_curve as incubation_curve, CurvePoint, DemoModel};

fn js_err(e: epirisk::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    model: DemoModel,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, n_agents: u32) -> Result<Demo, JsError> {
        Ok(Demo { model: DemoModel::new(seed as u64, n_agents as usize).map_err(js_err)? })
    }

    pub fn rows(&self) -> u32 {
        self.model.rows()
    }

    pub fn cols(&self) -> u32 {
        self.model.cols()
    }

    #[wasm_bindgen(js_name = nDays)]
    pub fn n_days(&self) -> u32 {
        self.model.n_days()
    }

    #[wasm_bindgen(js_name = nConfirmed)]
    pub fn n_confirmed(&self) -> u32 {
        self.model.sim.confirmed_count() as u32
    }

    /// Both arrays must be positive, strictly decreasing and equally long.
    #[wasm_bindgen(js_name = setWeights)]
    pub fn set_weights(&mut self, outdoor: &[f64], viral: &[f64]) -> Result<(), JsError> {
        self.model.set_weights(outdoor, viral).map_err(js_err)
    }

    /// Row-major risk values for `day`.
    #[wasm_bindgen(js_name = riskGrid)]
    pub fn risk_grid(&self, day: i32) -> Vec<f64> {
        self.model.risk_grid(day as i64)
    }

    #[wasm_bindgen(js_name = maxRisk)]
    pub fn max_risk(&self) -> f64 {
        self.model.max_risk()
    }

    /// Summed risk per day.
    #[wasm_bindgen(js_name = regionTotals)]
    pub fn region_totals(&self) -> Vec<f64> {
        self.model.region_totals()
    }

    /// Flattened `[q, threshold, dr, far]` for each quantile level.
    #[wasm_bindgen(js_name = detectionCurve)]
    pub fn detection_curve(&self, qs: &[f64]) -> Result<Vec<f64>, JsError> {
        let points = self.model.detection_curve(qs).map_err(js_err)?;
        Ok(points.iter().flat_map(|p| [p.q, p.threshold, p.dr, p.far]).collect())
    }

    /// Flattened `[row, col]` of confirmed agents' homes.
    #[wasm_bindgen(js_name = confirmedHomes)]
    pub fn confirmed_homes(&self) -> Vec<u32> {
        self.model.confirmed_homes().iter().flat_map(|p| [p.row, p.col]).collect()
    }
}

/// Incubation decay weights for 0..=T+1 days before diagnosis.
#[wasm_bindgen(js_name = decayCurve)]
pub fn decay_curve(incubation_days: u32) -> Vec<f64> {
    model::decay_curve(incubation_days)
}
