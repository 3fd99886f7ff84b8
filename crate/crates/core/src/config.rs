//! Run configuration shared by every command and echoed into every sidecar.

use serde::{Deserialize, Serialize};

use crate::diophantine::Q_MAX_CAP;
use crate::error::{Error, Result};
use crate::experiments::Tolerances;

pub const THREADS_ENV: &str = "TWISTLAB_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub genus: usize,
    pub seed: u64,
    pub q_max: u64,
    pub kh_threshold: f64,
    pub hl_threshold: f64,
    pub tolerances: Tolerances,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            genus: 2,
            seed: 0,
            q_max: 10_000_000,
            kh_threshold: 0.05,
            hl_threshold: 0.05,
            tolerances: Tolerances::default(),
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.genus < 2 {
            return Err(Error::InvalidInput(format!("genus must be at least 2, got {}", self.genus)));
        }
        if self.q_max < 1 || self.q_max > Q_MAX_CAP {
            return Err(Error::InvalidInput(format!("q_max must lie in [1, {Q_MAX_CAP}], got {}", self.q_max)));
        }
        for (name, v) in [("kh_threshold", self.kh_threshold), ("hl_threshold", self.hl_threshold)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let t = &self.tolerances;
        for v in [t.su2, t.flow, t.disjoint, t.crucial, t.relation, t.power] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("tolerances must be positive, got {v}")));
            }
        }
        if self.workers == 0 {
            return Err(Error::InvalidInput("worker count must be positive".into()));
        }
        Ok(())
    }

    /// Applies one `name=value` tolerance override.
    pub fn set_tolerance(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("tolerance override '{assignment}' is not name=value")))?;
        let v: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad tolerance value '{value}'")))?;
        let t = &mut self.tolerances;
        let slot = match name.trim() {
            "su2" => &mut t.su2,
            "flow" => &mut t.flow,
            "disjoint" => &mut t.disjoint,
            "crucial" => &mut t.crucial,
            "relation" => &mut t.relation,
            "power" => &mut t.power,
            other => return Err(Error::Parse(format!("unknown tolerance '{other}'"))),
        };
        *slot = v;
        Ok(())
    }
}
