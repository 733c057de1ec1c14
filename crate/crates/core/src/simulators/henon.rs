use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, GeneratedData};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::series::MultivariateSeries;

const ESCAPE: f64 = 10.0;
const MAX_RETRIES: u64 = 50;

/// Chain of `k` Hénon maps where each inner map is driven by its two
/// neighbours with strength `coupling`; the two end maps run free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HenonSpec {
    pub k: usize,
    pub coupling: f64,
    pub n: usize,
    #[serde(default = "default_transient")]
    pub transient: usize,
}

fn default_transient() -> usize {
    1000
}

impl HenonSpec {
    pub fn new(k: usize, coupling: f64, n: usize) -> Self {
        Self {
            k,
            coupling,
            n,
            transient: default_transient(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidSpec(format!("Hénon chain needs k >= 2, got {}", self.k)));
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return Err(Error::InvalidSpec(format!("coupling must be in [0,1], got {}", self.coupling)));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        Ok(())
    }

    /// Neighbour couplings of the inner maps.
    pub fn edges(&self) -> Vec<Edge> {
        let mut e = Vec::new();
        for i in 1..self.k.saturating_sub(1) {
            e.push(Edge { source: i - 1, target: i });
            e.push(Edge { source: i + 1, target: i });
        }
        e.sort();
        e
    }

    /// Iterates from `init[i] = (x_{i,-2}, x_{i,-1})`. `None` if the orbit
    /// escapes.
    pub fn iterate_from(&self, init: &[(f64, f64)]) -> Option<Vec<Vec<f64>>> {
        let k = self.k;
        let c = self.coupling;
        let mut prev2: Vec<f64> = init.iter().map(|p| p.0).collect();
        let mut prev1: Vec<f64> = init.iter().map(|p| p.1).collect();
        let mut next = vec![0.0; k];
        let mut out = vec![Vec::with_capacity(self.n); k];
        for step in 0..self.transient + self.n {
            for i in 0..k {
                let drive = if i == 0 || i == k - 1 {
                    prev1[i]
                } else {
                    0.5 * c * (prev1[i - 1] + prev1[i + 1]) + (1.0 - c) * prev1[i]
                };
                let x = 1.4 - drive * drive + 0.3 * prev2[i];
                if !x.is_finite() || x.abs() > ESCAPE {
                    return None;
                }
                next[i] = x;
            }
            std::mem::swap(&mut prev2, &mut prev1);
            prev1.copy_from_slice(&next);
            if step >= self.transient {
                for i in 0..k {
                    out[i].push(next[i]);
                }
            }
        }
        Some(out)
    }
}

/// Coupled Hénon chain from initial conditions uniform on `[0,1]^2`,
/// redrawn if the orbit escapes.
pub fn gen_coupled_henon(spec: &HenonSpec, seed: u64) -> Result<GeneratedData> {
    spec.validate()?;
    for attempt in 0..MAX_RETRIES {
        let mut rng = stream_rng(seed, attempt);
        let init: Vec<(f64, f64)> = (0..spec.k).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        if let Some(cols) = spec.iterate_from(&init) {
            if attempt > 0 {
                log::debug!("Hénon orbit accepted after {attempt} redraws");
            }
            return Ok(GeneratedData {
                series: MultivariateSeries::from_columns(cols)?,
                edges: spec.edges(),
            });
        }
    }
    Err(Error::GenerationFailure(format!(
        "Hénon orbit escaped |x| > {ESCAPE} in {MAX_RETRIES} attempts (k={}, C={})",
        spec.k, spec.coupling
    )))
}
