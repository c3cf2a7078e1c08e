//! On-disk rate-matrix cache keyed by physics fingerprints.

use std::cell::Cell;
use std::path::{Path, PathBuf};

use lasercond::basis::Basis;
use lasercond::matrix_elements::cache::cache_file_name;
use lasercond::matrix_elements::spontaneous::spontaneous_fingerprint;
use lasercond::matrix_elements::{build_spontaneous_rates, cache_load, cache_store, AbsorptionBuilder};
use lasercond::params::SimParams;
use lasercond::{EmissionQuadrature, PulseSpec, RateMatrix, Result};

/// Counts matrices built versus loaded; with no directory every request builds.
#[derive(Debug, Default)]
pub struct RateCache {
    dir: Option<PathBuf>,
    built: Cell<u64>,
    loaded: Cell<u64>,
}

impl RateCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        RateCache {
            dir,
            ..Default::default()
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn built(&self) -> u64 {
        self.built.get()
    }

    pub fn loaded(&self) -> u64 {
        self.loaded.get()
    }

    fn get(&self, fingerprint: u64, build: impl FnOnce() -> Result<RateMatrix>) -> Result<RateMatrix> {
        let path = self.dir.as_ref().map(|d| d.join(cache_file_name(fingerprint)));
        if let Some(p) = &path {
            if p.is_file() {
                let m = cache_load(p, fingerprint)?;
                self.loaded.set(self.loaded.get() + 1);
                return Ok(m);
            }
        }
        let m = build()?;
        self.built.set(self.built.get() + 1);
        if let Some(p) = &path {
            cache_store(&m, p)?;
        }
        Ok(m)
    }

    pub fn absorption(&self, builder: &AbsorptionBuilder, pulse: &PulseSpec) -> Result<RateMatrix> {
        self.get(builder.fingerprint(pulse), || builder.build(pulse))
    }

    pub fn spontaneous(&self, basis: &Basis, params: &SimParams, quad: &EmissionQuadrature) -> Result<RateMatrix> {
        self.get(spontaneous_fingerprint(basis, params, quad), || {
            build_spontaneous_rates(basis, params, quad)
        })
    }
}
