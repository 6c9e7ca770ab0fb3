//! Replay fidelity (TS-MAE) and black-box tuning of material parameters.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::building::Building;
use crate::derive_seed;
use crate::env::EnvConfig;
use crate::episode::Episode;
use crate::error::{Result, SimError};
use crate::grid::MaterialParams;
use crate::parallel;
use crate::policy::ReplayPolicy;
use crate::rollout::{rollout, RolloutOptions};

pub const PARAM_COUNT: usize = 9;

pub const PARAM_NAMES: [&str; PARAM_COUNT] = [
    "convection_coefficient",
    "exterior_cv_conductivity",
    "exterior_cv_density",
    "exterior_cv_heat_capacity",
    "interior_wall_cv_conductivity",
    "interior_wall_cv_density",
    "interior_wall_cv_heat_capacity",
    "swap_prob",
    "swap_radius",
];

pub type ParamVector = [f64; PARAM_COUNT];

pub fn to_vector(p: &MaterialParams) -> ParamVector {
    [
        p.convection_coefficient,
        p.exterior_cv_conductivity,
        p.exterior_cv_density,
        p.exterior_cv_heat_capacity,
        p.interior_wall_cv_conductivity,
        p.interior_wall_cv_density,
        p.interior_wall_cv_heat_capacity,
        p.swap_prob,
        p.swap_radius,
    ]
}

/// Replaces the tunables of `base` with `v`.
pub fn from_vector(base: &MaterialParams, v: &ParamVector) -> MaterialParams {
    MaterialParams {
        convection_coefficient: v[0],
        exterior_cv_conductivity: v[1],
        exterior_cv_density: v[2],
        exterior_cv_heat_capacity: v[3],
        interior_wall_cv_conductivity: v[4],
        interior_wall_cv_density: v[5],
        interior_wall_cv_heat_capacity: v[6],
        swap_prob: v[7],
        swap_radius: v[8],
        ..*base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    /// `[min, max]` per tunable, in [`PARAM_NAMES`] order.
    pub bounds: [[f64; 2]; PARAM_COUNT],
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            bounds: [
                [5.0, 800.0],
                [0.01, 1.0],
                [0.0, 3000.0],
                [100.0, 2500.0],
                [5.0, 800.0],
                [0.5, 1500.0],
                [500.0, 1500.0],
                [0.0, 1.0],
                [0.0, 50.0],
            ],
        }
    }
}

impl ParamBounds {
    /// Degenerate bounds at a single point.
    pub fn point(v: &ParamVector) -> Self {
        Self {
            bounds: std::array::from_fn(|k| [v[k], v[k]]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in PARAM_NAMES.iter().zip(self.bounds) {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(SimError::Config(format!("bounds of {name} [{lo}, {hi}] are invalid")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, v: &ParamVector) -> bool {
        v.iter().zip(self.bounds).all(|(x, [lo, hi])| lo <= *x && *x <= hi)
    }

    pub fn clamp(&self, v: &ParamVector) -> ParamVector {
        std::array::from_fn(|k| v[k].clamp(self.bounds[k][0], self.bounds[k][1]))
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> ParamVector {
        std::array::from_fn(|k| {
            let [lo, hi] = self.bounds[k];
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..=hi)
            }
        })
    }
}

/// Temporal-spatial mean absolute error between `[N][Z]` trajectories.
pub fn ts_mae(real: &[Vec<f64>], sim: &[Vec<f64>]) -> Result<f64> {
    if real.is_empty() || real.len() != sim.len() {
        return Err(SimError::Shape(format!(
            "trajectories have {} and {} steps",
            real.len(),
            sim.len()
        )));
    }
    let mut total = 0.0;
    for (t, (r, s)) in real.iter().zip(sim).enumerate() {
        if r.is_empty() || r.len() != s.len() {
            return Err(SimError::Shape(format!(
                "step {t}: {} measured zones, {} simulated",
                r.len(),
                s.len()
            )));
        }
        total += r.iter().zip(s).map(|(a, b)| (a - b).abs()).sum::<f64>() / r.len() as f64;
    }
    Ok(total / real.len() as f64)
}

/// Replays the first `n` steps (all when `None`) of `episode` on `building`
/// from its recorded initial zone temperatures, actions and weather.
/// Returns simulated zone temperatures `[n][Z]`. The shuffle and occupancy
/// generators use `seed`, or the episode's seed when `None`.
pub fn n_step_replay(
    building: &Building,
    episode: &Episode,
    n: Option<usize>,
    seed: Option<u64>,
) -> Result<Vec<Vec<f64>>> {
    let ids = building.zone_ids();
    let episode_ids: Vec<&str> = episode.metadata.zones.zones.iter().map(|z| z.id.as_str()).collect();
    if ids.iter().map(String::as_str).ne(episode_ids.iter().copied()) {
        return Err(SimError::Config(format!(
            "episode zones {episode_ids:?} do not match building zones {ids:?}"
        )));
    }
    let n = n.unwrap_or(episode.len());
    if n == 0 || n > episode.len() {
        return Err(SimError::Config(format!(
            "replay of {n} steps from an episode of {} steps",
            episode.len()
        )));
    }
    let outside = episode.outside_temps();
    if let Some(t) = outside[..n].iter().position(|v| !v.is_finite()) {
        return Err(SimError::Config(format!("episode is missing weather at step {t}")));
    }
    let mut policy = ReplayPolicy::new(episode, &building.action_names)?;
    let config = EnvConfig {
        horizon: n,
        ..episode.metadata.env.clone()
    };
    let options = RolloutOptions {
        seed: seed.unwrap_or(episode.metadata.seed),
        initial_zone_temps: Some(episode.metadata.initial_zone_temps.clone()),
        outside_temps: Some(outside[..n].to_vec()),
        tariff: None,
    };
    let mut temps = Vec::with_capacity(n);
    rollout(building, &config, &mut policy, &options, |_, env| {
        temps.push(env.zone_temps());
        Ok(())
    })?;
    Ok(temps)
}

/// TS-MAE of replaying `episode` with `params`; solver failures score +∞.
pub fn replay_error(
    building: &Building,
    params: &MaterialParams,
    episode: &Episode,
    n: Option<usize>,
    seed: Option<u64>,
) -> Result<f64> {
    let b = building.with_params(*params)?;
    match n_step_replay(&b, episode, n, seed) {
        Ok(sim) => {
            let real = episode.zone_temps();
            ts_mae(&real[..sim.len()], &sim)
        }
        Err(e) if e.is_solver_failure() => {
            log::warn!("replay failed: {e}");
            Ok(f64::INFINITY)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub params: ParamVector,
    pub train_error: f64,
    pub val_error: Option<f64>,
    pub seconds: f64,
}

/// Black-box optimizer over the tunable vector.
pub trait Optimizer {
    /// Next point to evaluate; may be called several times before the
    /// corresponding observations arrive.
    fn suggest(&mut self, history: &[Trial]) -> ParamVector;
    fn observe(&mut self, params: &ParamVector, error: f64);
}

pub struct RandomSearch {
    bounds: ParamBounds,
    rng: ChaCha8Rng,
}

impl RandomSearch {
    pub fn new(bounds: ParamBounds, seed: u64) -> Self {
        Self {
            bounds,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Optimizer for RandomSearch {
    fn suggest(&mut self, _history: &[Trial]) -> ParamVector {
        self.bounds.sample(&mut self.rng)
    }

    fn observe(&mut self, _params: &ParamVector, _error: f64) {}
}

const INV_PHI: f64 = 0.618_033_988_749_895;

#[derive(Debug, Clone)]
struct LineSearch {
    coord: usize,
    lo: f64,
    hi: f64,
    probes: [f64; 2],
    values: [Option<f64>; 2],
    pending: [bool; 2],
    iterations: usize,
}

/// Random warm-up, then golden-section search along one coordinate at a
/// time through the best point found so far.
pub struct GoldenSection {
    bounds: ParamBounds,
    random: RandomSearch,
    warmup: usize,
    suggested: usize,
    iterations_per_coord: usize,
    best: Option<(ParamVector, f64)>,
    center: Option<ParamVector>,
    next_coord: usize,
    line: Option<LineSearch>,
}

impl GoldenSection {
    pub fn new(bounds: ParamBounds, seed: u64, warmup: usize) -> Self {
        Self {
            bounds,
            random: RandomSearch::new(bounds, seed),
            warmup: warmup.max(1),
            suggested: 0,
            iterations_per_coord: 8,
            best: None,
            center: None,
            next_coord: 0,
            line: None,
        }
    }

    fn start_line(&mut self) {
        let Some((best, _)) = self.best else { return };
        self.center = Some(best);
        for _ in 0..PARAM_COUNT {
            let coord = self.next_coord;
            self.next_coord = (self.next_coord + 1) % PARAM_COUNT;
            let [lo, hi] = self.bounds.bounds[coord];
            if hi > lo {
                let d = INV_PHI * (hi - lo);
                self.line = Some(LineSearch {
                    coord,
                    lo,
                    hi,
                    probes: [hi - d, lo + d],
                    values: [None, None],
                    pending: [false, false],
                    iterations: 0,
                });
                return;
            }
        }
    }

    fn point(&self, coord: usize, value: f64) -> ParamVector {
        let mut p = self.center.expect("line search has a center");
        p[coord] = value;
        p
    }

    fn advance_line(&mut self) {
        let Some(line) = &mut self.line else { return };
        let (Some(f1), Some(f2)) = (line.values[0], line.values[1]) else {
            return;
        };
        line.iterations += 1;
        if f1 <= f2 {
            line.hi = line.probes[1];
            line.probes[1] = line.probes[0];
            line.values[1] = line.values[0];
            line.probes[0] = line.hi - INV_PHI * (line.hi - line.lo);
            line.values[0] = None;
        } else {
            line.lo = line.probes[0];
            line.probes[0] = line.probes[1];
            line.values[0] = line.values[1];
            line.probes[1] = line.lo + INV_PHI * (line.hi - line.lo);
            line.values[1] = None;
        }
        if line.iterations >= self.iterations_per_coord {
            self.line = None;
            self.start_line();
        }
    }
}

impl Optimizer for GoldenSection {
    fn suggest(&mut self, history: &[Trial]) -> ParamVector {
        self.suggested += 1;
        if self.suggested <= self.warmup || self.best.is_none() {
            return self.random.suggest(history);
        }
        if self.line.is_none() {
            self.start_line();
        }
        if let Some(line) = &mut self.line {
            for k in 0..2 {
                if line.values[k].is_none() && !line.pending[k] {
                    line.pending[k] = true;
                    let (coord, v) = (line.coord, line.probes[k]);
                    return self.point(coord, v);
                }
            }
        }
        self.random.suggest(history)
    }

    fn observe(&mut self, params: &ParamVector, error: f64) {
        let better = match self.best {
            None => true,
            Some((_, e)) => error < e,
        };
        if better && error.is_finite() {
            self.best = Some((*params, error));
        }
        let center = self.center;
        if let (Some(line), Some(center)) = (&mut self.line, center) {
            for k in 0..2 {
                let mut probe = center;
                probe[line.coord] = line.probes[k];
                if line.pending[k] && line.values[k].is_none() && probe == *params {
                    line.values[k] = Some(error);
                    line.pending[k] = false;
                }
            }
        }
        self.advance_line();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub bounds: ParamBounds,
    pub budget: usize,
    /// Trials evaluated concurrently per batch.
    pub workers: usize,
    pub seed: u64,
    /// Replay length; whole episodes when `None`.
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub best: Trial,
    pub trials: Vec<Trial>,
}

/// Evaluates `spec.budget` optimizer suggestions in batches of
/// `spec.workers` and returns the trial with the lowest training error.
pub fn calibrate<F>(
    building: &Building,
    train: &Episode,
    val: Option<&Episode>,
    spec: &CalibrationSpec,
    optimizer: &mut dyn Optimizer,
    mut on_trial: F,
) -> Result<CalibrationResult>
where
    F: FnMut(&Trial),
{
    spec.bounds.validate()?;
    if spec.budget == 0 {
        return Err(SimError::Config("calibration budget must be >= 1".into()));
    }
    let base = building.config.params;
    let batch = spec.workers.max(1);
    let mut trials: Vec<Trial> = Vec::with_capacity(spec.budget);
    while trials.len() < spec.budget {
        let start = trials.len();
        let count = batch.min(spec.budget - start);
        let points: Vec<(usize, ParamVector)> = (0..count)
            .map(|k| (start + k, spec.bounds.clamp(&optimizer.suggest(&trials))))
            .collect();
        let results = parallel::map_ordered(&points, |(index, v)| -> Result<Trial> {
            let clock = Instant::now();
            let params = from_vector(&base, v);
            let seed = derive_seed(spec.seed, &format!("trial/{index}"));
            let train_error = replay_error(building, &params, train, spec.steps, Some(seed))?;
            let val_error = val
                .map(|ep| replay_error(building, &params, ep, spec.steps, Some(seed)))
                .transpose()?;
            Ok(Trial {
                index: *index,
                params: *v,
                train_error,
                val_error,
                seconds: clock.elapsed().as_secs_f64(),
            })
        });
        for r in results {
            let trial = r?;
            optimizer.observe(&trial.params, trial.train_error);
            on_trial(&trial);
            trials.push(trial);
        }
    }
    let best = trials
        .iter()
        .min_by(|a, b| a.train_error.total_cmp(&b.train_error))
        .expect("budget >= 1")
        .clone();
    Ok(CalibrationResult { best, trials })
}
