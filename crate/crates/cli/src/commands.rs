use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;

use sbsim_core::building::Building;
use sbsim_core::calibration::{
    calibrate, from_vector, replay_error, n_step_replay, to_vector, ts_mae, CalibrationSpec, GoldenSection,
    Optimizer, ParamBounds, ParamVector, RandomSearch, Trial, PARAM_NAMES,
};
use sbsim_core::config::{BuildingConfig, TariffSchedule};
use sbsim_core::env::EnvConfig;
use sbsim_core::episode::Episode;
use sbsim_core::grid::MaterialParams;
use sbsim_core::ingest::{building_from_plan, ingest, IngestOptions, MaskRect, PlacementFile, RasterImage};
use sbsim_core::policy::PolicySpec;
use sbsim_core::render::{render_heatmap, Palette};
use sbsim_core::rollout::{rollout, RolloutOptions};
use sbsim_core::synth::{synthetic_building, SynthSpec};
use sbsim_core::{parallel, Field};

use crate::manifest::{default_path, file_hash, RunManifest};
use crate::{
    CalibrateArgs, Cli, Command, EnvArgs, EvalArgs, IngestArgs, OptimizerKind, RenderArgs, ReplayArgs, RunArgs,
    SplitArgs, SynthArgs, UsageError,
};

pub fn dispatch(cli: &Cli) -> Result<()> {
    let start = Utc::now();
    let (mut manifest, default) = match &cli.command {
        Command::Ingest(a) => ingest_cmd(a, start)?,
        Command::Synth(a) => synth_cmd(a, start)?,
        Command::Run(a) => run_cmd(a, start)?,
        Command::Replay(a) => replay_cmd(a, start)?,
        Command::Calibrate(a) => calibrate_cmd(a, start)?,
        Command::Eval(a) => eval_cmd(a, start)?,
        Command::Render(a) => render_cmd(a, start)?,
        Command::Split(a) => split_cmd(a, start)?,
    };
    manifest.outputs.sort();
    if let Some(path) = cli.manifest.clone().or(default) {
        manifest.write(&path)?;
    }
    Ok(())
}

type Outcome = (RunManifest, Option<PathBuf>);

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| sbsim_core::SimError::File {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text)
        .map_err(sbsim_core::SimError::from)
        .with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_building(path: &Path, params: Option<&Path>) -> Result<(Building, String)> {
    let mut config = BuildingConfig::load(path)?;
    let hash = file_hash(path)?;
    if let Some(p) = params {
        config.params = read_json::<MaterialParams>(p)?;
    }
    let building = Building::compile(config).with_context(|| format!("compiling {}", path.display()))?;
    Ok((building, hash))
}

fn load_episode(path: &Path) -> Result<Episode> {
    Episode::load(path).with_context(|| format!("loading episode {}", path.display()))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(UsageError("--workers must be >= 1".into()).into());
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

fn ingest_one(path: &Path, opts: &IngestOptions, placement: &PlacementFile) -> Result<BuildingConfig> {
    let img = RasterImage::load(path)?;
    let result = ingest(&img, opts).with_context(|| format!("ingesting {}", path.display()))?;
    info!(
        "{}: {}x{} cells, {} rooms",
        path.display(),
        result.grid.width(),
        result.grid.height(),
        result.rooms
    );
    let name = path.file_stem().unwrap_or_default().to_string_lossy();
    Ok(building_from_plan(&result, placement, &name)?)
}

fn ingest_cmd(a: &IngestArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let masks: Vec<MaskRect> = a.mask.as_deref().map(read_json).transpose()?.unwrap_or_default();
    let placement: PlacementFile = a.devices.as_deref().map(read_json).transpose()?.unwrap_or_default();
    let opts = IngestOptions {
        threshold: a.threshold,
        denoise_iters: a.denoise_iters,
        cv_size: a.cv_size,
        scale: a.scale,
        floor_height: a.floor_height,
        masks,
    };
    let mut manifest = RunManifest::new("ingest", start);
    manifest.config_hash = Some(file_hash(&a.image[0])?);
    if a.image.len() == 1 {
        let config = ingest_one(&a.image[0], &opts, &placement)?;
        config.save(&a.out)?;
        manifest.outputs.push(a.out.clone());
        return Ok((manifest, Some(default_path(&a.out, false))));
    }
    std::fs::create_dir_all(&a.out)?;
    let results = pool(a.workers)?.install(|| {
        parallel::map_ordered(&a.image, |path| -> Result<PathBuf> {
            let config = ingest_one(path, &opts, &placement)?;
            let out = a.out.join(path.with_extension("json").file_name().unwrap_or_default());
            config.save(&out)?;
            Ok(out)
        })
    });
    for r in results {
        manifest.outputs.push(r?);
    }
    Ok((manifest, Some(default_path(&a.out, true))))
}

fn synth_cmd(a: &SynthArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let spec = SynthSpec {
        floors: a.floors,
        rooms_x: a.rooms_x,
        rooms_y: a.rooms_y,
        room_width: a.room_width,
        room_height: a.room_height,
        cv_size: a.cv_size,
        floor_height: a.floor_height,
    };
    if spec.floors == 0 || spec.rooms_x == 0 || spec.rooms_y == 0 || spec.room_width == 0 || spec.room_height == 0 {
        return Err(UsageError("floor, room counts and room sizes must be >= 1".into()).into());
    }
    let config = synthetic_building(&spec);
    config.validate()?;
    config.save(&a.out)?;
    let (w, h) = spec.dims();
    info!("{} zone(s) on {} floor(s) of {w}x{h} cells", config.zones.len(), spec.floors);
    let mut manifest = RunManifest::new("synth", start);
    manifest.outputs.push(a.out.clone());
    Ok((manifest, Some(default_path(&a.out, false))))
}

fn env_config(a: &EnvArgs, horizon: usize) -> Result<EnvConfig> {
    let start = DateTime::parse_from_rfc3339(&a.start)
        .map_err(|e| UsageError(format!("--start {}: {e}", a.start)))?
        .with_timezone(&Utc);
    if !(a.timestep > 0.0) || horizon == 0 {
        return Err(UsageError("--timestep and --steps must be > 0".into()).into());
    }
    Ok(EnvConfig {
        timestep: a.timestep,
        horizon,
        start,
        initial_temp: a.initial_temp,
        epsilon: a.epsilon,
        max_sweeps: a.max_sweeps,
        plant_enabled: true,
    })
}

pub fn snapshot_path(dir: &Path, floor: usize, t: usize) -> PathBuf {
    dir.join("fields").join(format!("floor{floor}_t{t:06}.csv"))
}

fn run_cmd(a: &RunArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let (building, hash) = load_building(&a.building, a.params.as_deref())?;
    let spec: PolicySpec = read_json(&a.policy)?;
    let mut policy = spec.build(&building.action_names)?;
    let config = env_config(&a.env, a.steps)?;
    let tariff = a
        .tariff
        .as_deref()
        .map(|p| TariffSchedule::load_csv(building.config.tariff, p))
        .transpose()?;
    let options = RolloutOptions {
        seed: a.seed,
        tariff,
        ..RolloutOptions::default()
    };
    if a.snapshot_every == Some(0) {
        return Err(UsageError("--snapshot-every must be >= 1".into()).into());
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    if a.snapshot_every.is_some() {
        std::fs::create_dir_all(a.out.join("fields"))?;
    }
    let mut snapshots = Vec::new();
    let progress = (a.steps / 10).max(1);
    let episode = rollout(&building, &config, policy.as_mut(), &options, |t, env| {
        if (t + 1) % progress == 0 {
            info!("step {}/{}", t + 1, a.steps);
        }
        if let Some(n) = a.snapshot_every {
            if t % n == 0 || t + 1 == a.steps {
                for (f, state) in env.states().iter().enumerate() {
                    let path = snapshot_path(&a.out, f, t);
                    state.temps.save_csv(&path)?;
                    snapshots.push(path);
                }
            }
        }
        Ok(())
    })?;
    episode.save(&a.out)?;
    let mut manifest = RunManifest::new("run", start);
    manifest.config_hash = Some(hash);
    manifest.seed = Some(a.seed);
    manifest.outputs.push(a.out.clone());
    manifest.outputs.extend(snapshots);
    Ok((manifest, Some(default_path(&a.out, true))))
}

#[derive(Debug, Serialize)]
struct ZoneError {
    id: String,
    mae: f64,
}

#[derive(Debug, Serialize)]
struct ReplayReport {
    steps: usize,
    seed: u64,
    ts_mae: f64,
    zones: Vec<ZoneError>,
}

fn replay_cmd(a: &ReplayArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let (building, hash) = load_building(&a.building, a.params.as_deref())?;
    let episode = load_episode(&a.episode)?;
    let sim = n_step_replay(&building, &episode, a.nsteps, a.seed)?;
    let real = episode.zone_temps();
    let real = &real[..sim.len()];
    let error = ts_mae(real, &sim)?;
    let zones = building
        .zone_ids()
        .into_iter()
        .enumerate()
        .map(|(z, id)| ZoneError {
            id,
            mae: real.iter().zip(&sim).map(|(r, s)| (r[z] - s[z]).abs()).sum::<f64>() / sim.len() as f64,
        })
        .collect();
    let seed = a.seed.unwrap_or(episode.metadata.seed);
    info!("TS-MAE over {} steps: {error:.6} °C", sim.len());
    write_json(
        &a.report,
        &ReplayReport {
            steps: sim.len(),
            seed,
            ts_mae: error,
            zones,
        },
    )?;
    let mut manifest = RunManifest::new("replay", start);
    manifest.config_hash = Some(hash);
    manifest.seed = Some(seed);
    manifest.outputs.push(a.report.clone());
    Ok((manifest, Some(default_path(&a.report, false))))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn trials_header() -> Vec<String> {
    let mut h = vec!["trial".to_string()];
    h.extend(PARAM_NAMES.iter().map(|s| s.to_string()));
    h.extend(["train_error", "val_error", "seconds"].map(String::from));
    h
}

fn trial_record(t: &Trial) -> Vec<String> {
    let mut r = vec![t.index.to_string()];
    r.extend(t.params.iter().map(|v| v.to_string()));
    r.push(t.train_error.to_string());
    r.push(fmt_opt(t.val_error));
    r.push(format!("{:.3}", t.seconds));
    r
}

/// Reads a trials CSV written by `calibrate`.
pub fn read_trials(path: &Path) -> Result<Vec<Trial>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != trials_header() {
        bail!(sbsim_core::SimError::Format(format!("{}: unexpected header", path.display())));
    }
    let mut trials = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| sbsim_core::SimError::Format(format!("{}: row {}: {e}", path.display(), n + 2)).into())
        };
        let mut params: ParamVector = [0.0; PARAM_NAMES.len()];
        for (k, p) in params.iter_mut().enumerate() {
            *p = num(k + 1)?;
        }
        let val = rec.get(PARAM_NAMES.len() + 2).unwrap_or("");
        trials.push(Trial {
            index: num(0)? as usize,
            params,
            train_error: num(PARAM_NAMES.len() + 1)?,
            val_error: if val.is_empty() { None } else { Some(num(PARAM_NAMES.len() + 2)?) },
            seconds: num(PARAM_NAMES.len() + 3)?,
        });
    }
    Ok(trials)
}

fn calibrate_cmd(a: &CalibrateArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let (building, hash) = load_building(&a.building, None)?;
    let train = load_episode(&a.train)?;
    let val = a.val.as_deref().map(load_episode).transpose()?;
    let bounds: ParamBounds = a.bounds.as_deref().map(read_json).transpose()?.unwrap_or_default();
    let spec = CalibrationSpec {
        bounds,
        budget: a.budget,
        workers: a.workers,
        seed: a.seed,
        steps: a.steps,
    };
    let opt_seed = sbsim_core::derive_seed(a.seed, "optimizer");
    let mut optimizer: Box<dyn Optimizer + Send> = match a.optimizer {
        OptimizerKind::Random => Box::new(RandomSearch::new(bounds, opt_seed)),
        OptimizerKind::Golden => Box::new(GoldenSection::new(bounds, opt_seed, 20.min(a.budget / 4))),
    };
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let writer = Mutex::new(csv::Writer::from_path(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    writer.lock().expect("writer").write_record(trials_header())?;
    let mut write_error = None;
    let budget = a.budget;
    let result = pool(a.workers)?.install(|| {
        calibrate(&building, &train, val.as_ref(), &spec, optimizer.as_mut(), |t| {
            let mut w = writer.lock().expect("writer");
            if let Err(e) = w.write_record(trial_record(t)).and_then(|_| Ok(w.flush()?)) {
                write_error.get_or_insert(e);
            }
            if (t.index + 1) % (budget / 20).max(1) == 0 {
                info!("trial {}/{budget}: train ε {:.4}", t.index + 1, t.train_error);
            }
        })
    })?;
    if let Some(e) = write_error {
        return Err(e).with_context(|| format!("writing {}", a.out.display()));
    }
    writer.into_inner().expect("writer").flush()?;
    info!(
        "best trial {}: train ε {:.4}, val ε {}",
        result.best.index,
        result.best.train_error,
        fmt_opt(result.best.val_error)
    );
    let mut manifest = RunManifest::new("calibrate", start);
    manifest.config_hash = Some(hash);
    manifest.seed = Some(a.seed);
    manifest.outputs.push(a.out.clone());
    if let Some(best) = &a.best {
        write_json(best, &from_vector(&building.config.params, &result.best.params))?;
        manifest.outputs.push(best.clone());
    }
    Ok((manifest, Some(default_path(&a.out, false))))
}

#[derive(Debug, Serialize)]
struct EvalReport {
    uncalibrated_train: f64,
    uncalibrated_val: f64,
    calibrated_train: f64,
    calibrated_val: f64,
}

fn eval_cmd(a: &EvalArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let (building, hash) = load_building(&a.building, None)?;
    let train = load_episode(&a.train)?;
    let val = load_episode(&a.val)?;
    let base = building.config.params;
    let calibrated = match (&a.trials, &a.params) {
        (Some(path), _) => {
            let trials = read_trials(path)?;
            let best = trials
                .iter()
                .min_by(|x, y| x.train_error.total_cmp(&y.train_error))
                .ok_or_else(|| sbsim_core::SimError::Format(format!("{}: no trials", path.display())))?;
            from_vector(&base, &best.params)
        }
        (None, Some(path)) => read_json(path)?,
        (None, None) => return Err(UsageError("eval needs --trials or --params".into()).into()),
    };
    let err = |p: &MaterialParams, ep: &Episode| replay_error(&building, p, ep, a.steps, None);
    let report = EvalReport {
        uncalibrated_train: err(&base, &train)?,
        uncalibrated_val: err(&base, &val)?,
        calibrated_train: err(&calibrated, &train)?,
        calibrated_val: err(&calibrated, &val)?,
    };
    println!("{:<14}{:>14}{:>14}", "", "train ε (°C)", "val ε (°C)");
    println!("{:<14}{:>14.4}{:>14.4}", "uncalibrated", report.uncalibrated_train, report.uncalibrated_val);
    println!("{:<14}{:>14.4}{:>14.4}", "calibrated", report.calibrated_train, report.calibrated_val);
    println!(
        "{:<14}{:>14.3}{:>14.3}",
        "calib/uncalib",
        report.calibrated_train / report.uncalibrated_train,
        report.calibrated_val / report.uncalibrated_val
    );
    println!("calibrated parameters:");
    for (name, v) in PARAM_NAMES.iter().zip(to_vector(&calibrated)) {
        println!("  {name:<32}{v:>14.6}");
    }
    let mut manifest = RunManifest::new("eval", start);
    manifest.config_hash = Some(hash);
    let default = match &a.out {
        Some(out) => {
            write_json(out, &report)?;
            manifest.outputs.push(out.clone());
            Some(default_path(out, false))
        }
        None => None,
    };
    Ok((manifest, default))
}

/// Temperature field of `floor` at step `t`: the run's snapshot when one
/// was written, otherwise zone temperatures painted on zone cells with
/// everything else NaN.
fn field_at(dir: &Path, episode: &Episode, floor: usize, t: usize) -> Result<Field> {
    let plan = episode
        .metadata
        .floorplans
        .get(floor)
        .ok_or_else(|| UsageError(format!("episode has {} floor(s)", episode.metadata.floorplans.len())))?;
    if t >= episode.len() {
        return Err(UsageError(format!("--t {t} is past the episode's {} steps", episode.len())).into());
    }
    let snap = snapshot_path(dir, floor, t);
    if snap.exists() {
        return Ok(Field::load_csv(&snap)?);
    }
    let grid = plan.to_grid()?;
    let mut field = Field::new(grid.width(), grid.height(), f64::NAN);
    let temps = &episode.zone_temps()[t];
    for (zone, temp) in episode.metadata.zones.zones.iter().zip(temps) {
        if zone.floor == floor {
            for &[x, y] in &zone.cells {
                field.set(x, y, *temp);
            }
        }
    }
    Ok(field)
}

fn render_cmd(a: &RenderArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let episode = load_episode(&a.episode)?;
    let grid = episode
        .metadata
        .floorplans
        .get(a.floor)
        .ok_or_else(|| UsageError(format!("episode has no floor {}", a.floor)))?
        .to_grid()?;
    let mut values = field_at(&a.episode, &episode, a.floor, a.t)?;
    let palette = match &a.diff_against {
        Some(other) => {
            let other_ep = load_episode(other)?;
            let b = field_at(other, &other_ep, a.floor, a.t)?;
            if !values.same_shape(&b) {
                bail!(sbsim_core::SimError::Shape("episodes have different floorplans".into()));
            }
            for (v, w) in values.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *v -= w;
            }
            Palette::Diverging
        }
        None => Palette::Sequential,
    };
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let stats = render_heatmap(&values, &grid, palette, a.pixels, &a.out)?;
    info!("rendered {} (min {:.4}, max {:.4})", a.out.display(), stats.min, stats.max);
    let mut manifest = RunManifest::new("render", start);
    manifest.config_hash = Some(file_hash(&a.episode.join("metadata.json"))?);
    manifest.outputs.push(a.out.clone());
    manifest.outputs.push(sbsim_core::render::sidecar_path(&a.out));
    Ok((manifest, Some(default_path(&a.out, false))))
}

fn split_cmd(a: &SplitArgs, start: DateTime<Utc>) -> Result<Outcome> {
    let episode = load_episode(&a.episode)?;
    let (first, second) = episode.split(a.at)?;
    first.save(&a.first)?;
    second.save(&a.second)?;
    let mut manifest = RunManifest::new("split", start);
    manifest.config_hash = Some(file_hash(&a.episode.join("metadata.json"))?);
    manifest.seed = Some(episode.metadata.seed);
    manifest.outputs.extend([a.first.clone(), a.second.clone()]);
    Ok((manifest, Some(default_path(&a.second, true))))
}
