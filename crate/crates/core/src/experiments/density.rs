//! Random walks of a representation under twist generators, recording the
//! angles of two curves on a grid over `[0, 1]^2`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping_class::{automorphism, Automorphism, MappingClass, TwistCurve, TwistGen};
use crate::su2::UnitQuaternion;
use crate::surface::{evaluate_unchecked, SurfaceRep, Word};

/// Angles this close to 0 or 1 are not binned.
pub const SINGULAR_EPS: f64 = 1e-12;
pub const DEFAULT_GRID: usize = 32;
/// Length range of the conjugating words in normal-closure mode.
pub const CONJUGATOR_LEN: std::ops::RangeInclusive<usize> = 1..=3;
const RENORMALIZE_EVERY: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum WalkMode {
    /// Uniformly chosen signed twist generators.
    Full,
    /// Conjugates `w psi^{+-1} w^-1` of a fixed witness `psi`, with `w` a
    /// random twist word.
    NormalClosure(MappingClass),
}

impl WalkMode {
    pub fn describe(&self) -> String {
        match self {
            WalkMode::Full => "full twist generators".into(),
            WalkMode::NormalClosure(psi) => format!("normal closure of {psi}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub mode: WalkMode,
    /// Total steps, split evenly over the chains.
    pub steps: u64,
    pub grid: usize,
    pub observables: (Word, Word),
    pub seed: u64,
    pub chains: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub steps: u64,
    pub occupancy: f64,
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub observables: (String, String),
    pub grid: usize,
    pub walk: String,
    pub seed: u64,
    pub chains: usize,
    pub steps: u64,
    /// Occupancy after each checkpoint; steps count all chains together.
    pub checkpoints: Vec<DensityPoint>,
}

impl DensityReport {
    pub fn final_occupancy(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |p| p.occupancy)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["steps", "occupancy", "skipped"])?;
        for p in &self.checkpoints {
            w.serialize((p.steps, p.occupancy, p.skipped))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-chain step counts at which occupancy is recorded: 0, powers of two,
/// and the last step.
pub fn checkpoints(per_chain: u64) -> Vec<u64> {
    let mut v = vec![0];
    let mut p = 1u64;
    while p < per_chain {
        v.push(p);
        p *= 2;
    }
    if per_chain > 0 {
        v.push(per_chain);
    }
    v
}

fn cell(theta: f64, grid: usize) -> usize {
    ((theta * grid as f64) as usize).min(grid - 1)
}

struct Chain {
    /// First step at which each cell was visited.
    first_visit: Vec<Option<u64>>,
    /// Cumulative singular observations at each checkpoint.
    skipped_at: Vec<u64>,
}

/// A point the walk can move: something twist automorphisms pull back and
/// whose curve angles can be read off.
pub trait WalkState: Clone + Send + Sync {
    fn genus(&self) -> usize;
    fn pull_back(&self, auto: &Automorphism) -> Self;
    fn theta(&self, w: &Word) -> f64;
    fn tidy(&mut self) {}
}

impl WalkState for SurfaceRep {
    fn genus(&self) -> usize {
        SurfaceRep::genus(self)
    }

    fn pull_back(&self, auto: &Automorphism) -> Self {
        auto.pull_back(self)
    }

    fn theta(&self, w: &Word) -> f64 {
        evaluate_unchecked(w, self).theta()
    }

    fn tidy(&mut self) {
        for q in self.images_mut() {
            *q = q.renormalized();
        }
    }
}

/// An abelian representation whose generators are rotations by multiples of
/// `pi / n` about one axis, stored as the integer multiples. Twists act on
/// these by integer linear maps, so the orbit is computed exactly. In
/// floating point the same orbit is not stable: the action on the abelian
/// torus is hyperbolic and rounding errors grow exponentially.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianLattice {
    genus: usize,
    n: i64,
    k: Vec<i64>,
}

impl AbelianLattice {
    pub fn new(genus: usize, n: u32, k: Vec<i64>) -> Result<Self> {
        crate::surface::check_genus(genus)?;
        if n == 0 || k.len() != 2 * genus {
            return Err(Error::InvalidInput(format!("need n > 0 and {} multiples", 2 * genus)));
        }
        let n = n as i64;
        Ok(Self { genus, n, k: k.into_iter().map(|x| x.rem_euclid(2 * n)).collect() })
    }

    pub fn random(genus: usize, n: u32, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = (0..2 * genus).map(|_| rng.random_range(1..2 * n as i64)).collect();
        Self::new(genus, n, k)
    }

    /// Multiples of `pi / n`.
    pub fn multiples(&self) -> &[i64] {
        &self.k
    }

    /// The representation as quaternions, all rotations about `z`.
    pub fn to_rep(&self) -> Result<SurfaceRep> {
        let images = self
            .k
            .iter()
            .map(|&k| UnitQuaternion::exp_unchecked([0.0, 0.0, 1.0], std::f64::consts::PI * k as f64 / self.n as f64))
            .collect();
        SurfaceRep::new(self.genus, images)
    }

    fn sum(&self, w: &Word) -> i64 {
        let s: i64 = w.letters().iter().map(|&l| l.signum() as i64 * self.k[l.unsigned_abs() as usize - 1]).sum();
        s.rem_euclid(2 * self.n)
    }
}

impl WalkState for AbelianLattice {
    fn genus(&self) -> usize {
        self.genus
    }

    fn pull_back(&self, auto: &Automorphism) -> Self {
        Self { genus: self.genus, n: self.n, k: auto.images().iter().map(|w| self.sum(w)).collect() }
    }

    fn theta(&self, w: &Word) -> f64 {
        let s = self.sum(w);
        s.min(2 * self.n - s) as f64 / self.n as f64
    }
}

enum Step {
    Table(Vec<Automorphism>),
    Normal { psi: MappingClass, genus: usize },
}

impl Step {
    fn new(mode: &WalkMode, genus: usize) -> Result<Self> {
        Ok(match mode {
            WalkMode::Full => {
                let mut v = Vec::new();
                for c in TwistCurve::all(genus) {
                    let g = TwistGen::new(c);
                    v.push(automorphism(g.inv(), genus)?);
                    v.push(automorphism(g, genus)?);
                }
                Step::Table(v)
            }
            WalkMode::NormalClosure(psi) => {
                if psi.genus() != genus {
                    return Err(Error::GenusMismatch { expected: genus, found: psi.genus() });
                }
                Step::Normal { psi: psi.clone(), genus }
            }
        })
    }

    fn advance<S: WalkState>(&self, state: &S, rng: &mut ChaCha8Rng) -> Result<S> {
        match self {
            Step::Table(t) => Ok(state.pull_back(&t[rng.random_range(0..t.len())])),
            Step::Normal { psi, genus } => {
                let len = rng.random_range(CONJUGATOR_LEN);
                let w = MappingClass::random(*genus, len, rng);
                let p = if rng.random() { psi.clone() } else { psi.inverse() };
                // m . x = x o m^-1, one twist at a time
                let mut cur = state.clone();
                for t in p.conjugate_by(&w).twists().iter().rev() {
                    cur = cur.pull_back(&automorphism(t.inv(), *genus)?);
                }
                Ok(cur)
            }
        }
    }
}

fn run_chain<S: WalkState>(
    start: &S,
    cfg: &DensityConfig,
    chain: usize,
    per_chain: u64,
    marks: &[u64],
) -> Result<Chain> {
    let step = Step::new(&cfg.mode, start.genus())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let g = cfg.grid;
    let mut first_visit = vec![None; g * g];
    let mut skipped = 0u64;
    let mut skipped_at = Vec::with_capacity(marks.len());
    let mut cur = start.clone();
    let mut next_mark = 0;
    for n in 0..=per_chain {
        if n > 0 {
            cur = step.advance(&cur, &mut rng)?;
            if n % RENORMALIZE_EVERY == 0 {
                cur.tidy();
            }
        }
        let t1 = cur.theta(&cfg.observables.0);
        let t2 = cur.theta(&cfg.observables.1);
        let singular = |t: f64| !(SINGULAR_EPS..=1.0 - SINGULAR_EPS).contains(&t);
        if singular(t1) || singular(t2) {
            skipped += 1;
        } else {
            let k = cell(t1, g) * g + cell(t2, g);
            first_visit[k].get_or_insert(n);
        }
        while next_mark < marks.len() && marks[next_mark] == n {
            skipped_at.push(skipped);
            next_mark += 1;
        }
    }
    Ok(Chain { first_visit, skipped_at })
}

/// Runs `cfg.chains` independent walks from `start` and merges them by
/// chain index, so the result depends only on the configuration.
pub fn orbit_density<S: WalkState>(start: &S, cfg: &DensityConfig) -> Result<DensityReport> {
    if cfg.grid == 0 || cfg.chains == 0 {
        return Err(Error::InvalidInput("grid and chain count must be positive".into()));
    }
    let genus = start.genus();
    for w in [&cfg.observables.0, &cfg.observables.1] {
        if w.max_generator() > 2 * genus {
            return Err(Error::InvalidInput(format!("observable {w} outside genus {genus}")));
        }
    }
    let per_chain = cfg.steps / cfg.chains as u64;
    let marks = checkpoints(per_chain);
    let chains: Vec<Chain> =
        (0..cfg.chains).into_par_iter().map(|c| run_chain(start, cfg, c, per_chain, &marks)).collect::<Result<_>>()?;
    let cells = cfg.grid * cfg.grid;
    let first: Vec<Option<u64>> = (0..cells).map(|k| chains.iter().filter_map(|c| c.first_visit[k]).min()).collect();
    let checkpoints = marks
        .iter()
        .enumerate()
        .map(|(i, &m)| DensityPoint {
            steps: m * cfg.chains as u64,
            occupancy: first.iter().filter(|f| matches!(f, Some(s) if *s <= m)).count() as f64 / cells as f64,
            skipped: chains.iter().map(|c| c.skipped_at[i]).sum(),
        })
        .collect();
    Ok(DensityReport {
        observables: (cfg.observables.0.to_string(), cfg.observables.1.to_string()),
        grid: cfg.grid,
        walk: cfg.mode.describe(),
        seed: cfg.seed,
        chains: cfg.chains,
        steps: per_chain * cfg.chains as u64,
        checkpoints,
    })
}
