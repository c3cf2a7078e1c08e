use serde::Serialize;

use crate::error::{Error, Result};

/// Source-level population along one ramp direction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Branch {
    pub ramp: Vec<f64>,
    pub population: Vec<f64>,
}

impl Branch {
    pub fn new(ramp: Vec<f64>, population: Vec<f64>) -> Result<Self> {
        if ramp.len() != population.len() {
            return Err(Error::invalid("ramp and population lengths differ"));
        }
        Ok(Branch { ramp, population })
    }

    /// Ramp value where the population first falls below `threshold`,
    /// linearly interpolated between the bracketing samples.
    pub fn crossing(&self, threshold: f64) -> Option<f64> {
        let p = &self.population;
        (1..p.len())
            .find(|&i| p[i - 1] >= threshold && p[i] < threshold)
            .map(|i| {
                let f = (p[i - 1] - threshold) / (p[i - 1] - p[i]);
                self.ramp[i - 1] + f * (self.ramp[i] - self.ramp[i - 1])
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HysteresisReport {
    pub threshold: f64,
    /// Transfer point while the ramp moves up; `None` when absent.
    pub up: Option<f64>,
    pub down: Option<f64>,
}

impl HysteresisReport {
    /// Width up − down, when both transfers were found.
    pub fn width(&self) -> Option<f64> {
        Some(self.up? - self.down?)
    }
}

pub fn hysteresis_extract(up: &Branch, down: &Branch, threshold: f64) -> Result<HysteresisReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    Ok(HysteresisReport {
        threshold,
        up: up.crossing(threshold),
        down: down.crossing(threshold),
    })
}
