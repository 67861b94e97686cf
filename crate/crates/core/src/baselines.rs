//! Search baselines over complete layouts: uniform random sampling,
//! Metropolis-Hastings annealing and a multi-objective particle swarm.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{is_valid_placement, EnvError, EpisodeConfig};
use crate::geometry::{Aabb, RotationIndex, Vec2};
use crate::rewards::{composite_reward, Guideline, PlacedItem, RewardBreakdown};
use crate::scene::FurnitureSpec;

/// Score deducted per item that cannot be placed.
pub const INVALID_ITEM_PENALTY: f64 = 0.5;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("search budget must be positive")]
    EmptyBudget,
    #[error("swarm needs at least 2 particles, got {0}")]
    SwarmTooSmall(usize),
    #[error("initial swarm has {got} particles but the config asks for {want}")]
    SwarmMismatch { got: usize, want: usize },
    #[error("layout vector has length {got}, expected {want}")]
    VectorLength { got: usize, want: usize },
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Flattened `(x, y, k)` per item, in placement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutVector(pub Vec<f64>);

impl LayoutVector {
    pub fn items(&self) -> usize {
        self.0.len() / 3
    }

    fn pose(&self, i: usize) -> (Vec2, RotationIndex) {
        let v = &self.0[3 * i..3 * i + 3];
        (Vec2::new(v[0], v[1]), quantize_rotation(v[2]))
    }
}

/// Maps a relaxed rotation coordinate in `[0, 4)` onto a quarter-turn index.
pub fn quantize_rotation(k: f64) -> RotationIndex {
    let k = if k.is_finite() { k.floor().clamp(0.0, 3.0) } else { 0.0 };
    RotationIndex::new(k as i64).expect("clamped")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_evaluations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Random,
    Mh,
    Pso,
}

impl std::str::FromStr for Algorithm {
    type Err = BaselineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "mh" => Ok(Self::Mh),
            "pso" => Ok(Self::Pso),
            other => Err(BaselineError::UnknownAlgorithm(other.to_string())),
        }
    }
}

/// A scene prepared for repeated scoring.
#[derive(Debug, Clone)]
pub struct SearchScene {
    pub config: EpisodeConfig,
    pub items: Vec<FurnitureSpec>,
    pub bounds: Aabb,
}

impl SearchScene {
    pub fn new(config: EpisodeConfig) -> Result<Self, BaselineError> {
        let items = if config.furniture_ids.is_empty() {
            Vec::new()
        } else {
            config.ordered_items()?
        };
        let bounds = config.room.boundary.aabb();
        Ok(Self { config, items, bounds })
    }

    pub fn dim(&self) -> usize {
        3 * self.items.len()
    }

    /// Upper bound of each coordinate; lower bounds come from [`Self::lower`].
    fn upper(&self) -> Vec<f64> {
        (0..self.items.len())
            .flat_map(|_| [self.bounds.max.x, self.bounds.max.y, 4.0 - 1e-9])
            .collect()
    }

    fn lower(&self) -> Vec<f64> {
        (0..self.items.len())
            .flat_map(|_| [self.bounds.min.x, self.bounds.min.y, 0.0])
            .collect()
    }

    pub fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> LayoutVector {
        let b = &self.bounds;
        LayoutVector(
            (0..self.items.len())
                .flat_map(|_| {
                    [
                        rng.gen_range(b.min.x..=b.max.x),
                        rng.gen_range(b.min.y..=b.max.y),
                        rng.gen_range(0..4) as f64,
                    ]
                })
                .collect(),
        )
    }

    /// Places items in order, skipping any that would be invalid.
    pub fn decode(&self, v: &LayoutVector) -> Result<Decoded, BaselineError> {
        if v.0.len() != self.dim() {
            return Err(BaselineError::VectorLength {
                got: v.0.len(),
                want: self.dim(),
            });
        }
        let mut placed = Vec::with_capacity(self.items.len());
        let mut invalid = 0;
        for (i, spec) in self.items.iter().enumerate() {
            let (pos, k) = v.pose(i);
            let item = PlacedItem::new(spec, pos, k);
            if is_valid_placement(&item.footprint, &self.config.room, &placed) {
                placed.push(item);
            } else {
                invalid += 1;
            }
        }
        let breakdown = composite_reward(
            &placed,
            &self.config.catalog,
            &self.config.room,
            &self.config.mask,
            self.config.grid_resolution,
        );
        Ok(Decoded {
            placed,
            invalid,
            breakdown,
        })
    }

    /// Composite reward of the valid items minus the per-invalid-item penalty.
    pub fn score(&self, v: &LayoutVector) -> Result<f64, BaselineError> {
        if self.items.is_empty() {
            return Ok(0.0);
        }
        Ok(self.decode(v)?.score())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub placed: Vec<PlacedItem>,
    pub invalid: usize,
    pub breakdown: RewardBreakdown,
}

impl Decoded {
    pub fn penalty(&self) -> f64 {
        INVALID_ITEM_PENALTY * self.invalid as f64
    }

    pub fn score(&self) -> f64 {
        self.breakdown.r_composite - self.penalty()
    }
}

/// Convenience wrapper around [`SearchScene::score`].
pub fn score(v: &LayoutVector, config: &EpisodeConfig) -> Result<f64, BaselineError> {
    SearchScene::new(config.clone())?.score(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: LayoutVector,
    pub best_score: f64,
    pub evaluations: usize,
    pub seconds: f64,
}

fn check_budget(budget: &SearchBudget) -> Result<(), BaselineError> {
    if budget.max_evaluations == 0 {
        Err(BaselineError::EmptyBudget)
    } else {
        Ok(())
    }
}

/// Best of `max_evaluations` uniformly sampled layouts.
pub fn random_search(scene: &SearchScene, budget: &SearchBudget) -> Result<SearchResult, BaselineError> {
    check_budget(budget)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut best = scene.random_vector(&mut rng);
    let mut best_score = scene.score(&best)?;
    for _ in 1..budget.max_evaluations {
        let v = scene.random_vector(&mut rng);
        let s = scene.score(&v)?;
        if s > best_score {
            best = v;
            best_score = s;
        }
    }
    Ok(SearchResult {
        best,
        best_score,
        evaluations: budget.max_evaluations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MhConfig {
    pub step_sigma: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            step_sigma: 0.5,
            t_start: 1.0,
            t_end: 0.01,
        }
    }
}

impl MhConfig {
    /// Geometric schedule from `t_start` at step 0 to `t_end` at the last step.
    pub fn temperature(&self, step: usize, total: usize) -> f64 {
        if total <= 1 {
            return self.t_start;
        }
        let frac = step as f64 / (total - 1) as f64;
        self.t_start * (self.t_end / self.t_start).powf(frac)
    }
}

/// Metropolis rule; non-worsening moves always pass and `T = 0` rejects every worse move.
pub fn mh_accept(delta: f64, temperature: f64, u: f64) -> bool {
    if delta >= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    u < (delta / temperature).exp()
}

fn propose<R: Rng + ?Sized>(scene: &SearchScene, cur: &LayoutVector, cfg: &MhConfig, rng: &mut R) -> LayoutVector {
    let mut v = cur.clone();
    let n = scene.items.len();
    let kind = rng.gen_range(0..3);
    let b = &scene.bounds;
    match kind {
        1 => {
            let i = rng.gen_range(0..n);
            let shift = rng.gen_range(1..4) as f64;
            v.0[3 * i + 2] = (v.0[3 * i + 2].floor() + shift) % 4.0;
        }
        2 if n >= 2 => {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            v.0.swap(3 * i, 3 * j);
            v.0.swap(3 * i + 1, 3 * j + 1);
        }
        _ => {
            let i = rng.gen_range(0..n);
            let step = Normal::new(0.0, cfg.step_sigma).expect("positive sigma");
            v.0[3 * i] = (v.0[3 * i] + step.sample(rng)).clamp(b.min.x, b.max.x);
            v.0[3 * i + 1] = (v.0[3 * i + 1] + step.sample(rng)).clamp(b.min.y, b.max.y);
        }
    }
    v
}

/// Simulated annealing with move, re-rotate and swap proposals; returns the best layout seen.
pub fn mh_optimize(scene: &SearchScene, budget: &SearchBudget, cfg: &MhConfig) -> Result<SearchResult, BaselineError> {
    check_budget(budget)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut cur = scene.random_vector(&mut rng);
    let mut cur_score = scene.score(&cur)?;
    let (mut best, mut best_score) = (cur.clone(), cur_score);
    let total = budget.max_evaluations;
    if scene.items.is_empty() {
        return Ok(SearchResult {
            best,
            best_score,
            evaluations: 1,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    for step in 1..total {
        let t = cfg.temperature(step, total);
        let cand = propose(scene, &cur, cfg, &mut rng);
        let s = scene.score(&cand)?;
        if mh_accept(s - cur_score, t, rng.gen::<f64>()) {
            cur = cand;
            cur_score = s;
            if cur_score > best_score {
                best = cur.clone();
                best_score = cur_score;
            }
        }
    }
    Ok(SearchResult {
        best,
        best_score,
        evaluations: total,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    /// Velocity limit as a fraction of each coordinate's range.
    pub max_velocity: f64,
    pub archive_cap: usize,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            inertia: 0.7,
            c1: 1.5,
            c2: 1.5,
            max_velocity: 0.5,
            archive_cap: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub vector: LayoutVector,
    /// Enabled component rewards, each reduced by the invalid-item penalty.
    pub objectives: Vec<f64>,
    pub score: f64,
}

/// `a` dominates `b`: no worse anywhere and better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// Mutually non-dominated layouts, capped by dropping the lowest score.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
    cap: usize,
}

impl ParetoArchive {
    pub fn new(cap: usize) -> Self {
        Self {
            entries: Vec::new(),
            cap: cap.max(1),
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    /// Adds `e` unless it is dominated or duplicates an existing objective vector.
    pub fn insert(&mut self, e: ArchiveEntry) -> bool {
        if self
            .entries
            .iter()
            .any(|x| dominates(&x.objectives, &e.objectives) || x.objectives == e.objectives)
        {
            return false;
        }
        self.entries.retain(|x| !dominates(&e.objectives, &x.objectives));
        self.entries.push(e);
        if self.entries.len() > self.cap {
            let worst = self
                .entries
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.score.total_cmp(&b.1.score))
                .map(|(i, _)| i)
                .expect("non-empty");
            self.entries.remove(worst);
        }
        true
    }

    pub fn best(&self) -> Option<&ArchiveEntry> {
        // First maximum wins so ties resolve by insertion order.
        self.entries
            .iter()
            .fold(None, |acc: Option<&ArchiveEntry>, e| match acc {
                Some(b) if b.score >= e.score => Some(b),
                _ => Some(e),
            })
    }
}

fn archive_entry(scene: &SearchScene, v: &LayoutVector) -> Result<ArchiveEntry, BaselineError> {
    if scene.items.is_empty() {
        return Ok(ArchiveEntry {
            vector: v.clone(),
            objectives: Vec::new(),
            score: 0.0,
        });
    }
    let d = scene.decode(v)?;
    let pen = d.penalty();
    let objectives = Guideline::ALL
        .iter()
        .filter(|g| scene.config.mask.is_enabled(**g))
        .map(|g| d.breakdown.component(*g) - pen)
        .collect();
    Ok(ArchiveEntry {
        vector: v.clone(),
        objectives,
        score: d.score(),
    })
}

#[derive(Debug, Clone)]
pub struct PsoResult {
    pub search: SearchResult,
    pub archive: ParetoArchive,
}

/// Particle swarm from random positions with zero initial velocity.
pub fn pso_optimize(scene: &SearchScene, budget: &SearchBudget, cfg: &PsoConfig) -> Result<PsoResult, BaselineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let init: Vec<LayoutVector> = (0..cfg.swarm_size).map(|_| scene.random_vector(&mut rng)).collect();
    pso_optimize_from(scene, budget, cfg, init)
}

/// Particle swarm from the given initial positions (zero initial velocity).
pub fn pso_optimize_from(
    scene: &SearchScene,
    budget: &SearchBudget,
    cfg: &PsoConfig,
    init: Vec<LayoutVector>,
) -> Result<PsoResult, BaselineError> {
    check_budget(budget)?;
    if cfg.swarm_size < 2 {
        return Err(BaselineError::SwarmTooSmall(cfg.swarm_size));
    }
    if init.len() != cfg.swarm_size {
        return Err(BaselineError::SwarmMismatch {
            got: init.len(),
            want: cfg.swarm_size,
        });
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ 0x9e37_79b9_7f4a_7c15);
    let lo = scene.lower();
    let hi = scene.upper();
    let vmax: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| cfg.max_velocity * (h - l)).collect();
    let dim = scene.dim();

    let mut archive = ParetoArchive::new(cfg.archive_cap);
    let mut evaluations = 0;
    let mut pos = Vec::with_capacity(init.len());
    let mut pbest: Vec<(LayoutVector, f64)> = Vec::with_capacity(init.len());
    for v in init {
        if evaluations == budget.max_evaluations {
            break;
        }
        let e = archive_entry(scene, &v)?;
        evaluations += 1;
        pbest.push((v.clone(), e.score));
        archive.insert(e);
        pos.push(v);
    }
    let mut vel = vec![vec![0.0; dim]; pos.len()];

    'outer: while evaluations < budget.max_evaluations {
        let gbest = archive.best().expect("archive never empty").vector.clone();
        for p in 0..pos.len() {
            if evaluations == budget.max_evaluations {
                break 'outer;
            }
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let x = pos[p].0[d];
                let v = cfg.inertia * vel[p][d] + cfg.c1 * r1 * (pbest[p].0 .0[d] - x) + cfg.c2 * r2 * (gbest.0[d] - x);
                let v = v.clamp(-vmax[d], vmax[d]);
                let nx = (x + v).clamp(lo[d], hi[d]);
                vel[p][d] = if nx == x + v { v } else { 0.0 };
                pos[p].0[d] = nx;
            }
            let e = archive_entry(scene, &pos[p])?;
            evaluations += 1;
            if e.score > pbest[p].1 {
                pbest[p] = (pos[p].clone(), e.score);
            }
            archive.insert(e);
        }
    }
    let best = archive.best().expect("archive never empty").clone();
    Ok(PsoResult {
        search: SearchResult {
            best: best.vector,
            best_score: best.score,
            evaluations,
            seconds: start.elapsed().as_secs_f64(),
        },
        archive,
    })
}

/// Runs one algorithm with its default settings.
pub fn run_baseline(algo: Algorithm, scene: &SearchScene, budget: &SearchBudget) -> Result<SearchResult, BaselineError> {
    match algo {
        Algorithm::Random => random_search(scene, budget),
        Algorithm::Mh => mh_optimize(scene, budget, &MhConfig::default()),
        Algorithm::Pso => Ok(pso_optimize(scene, budget, &PsoConfig::default())?.search),
    }
}
