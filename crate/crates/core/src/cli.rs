//! Command-line front end: `train`, `eval`, `baseline` and `reward`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, Algorithm, SearchBudget, SearchScene};
use crate::env::{EpisodeConfig, PlacementOrder};
use crate::nn::{load_checkpoint, save_checkpoint};
use crate::ppo::{evaluate, init_params, train_from, EvalOptions, EpochMetrics, TrainConfig};
use crate::render::{render_svg, RenderOptions};
use crate::rewards::{composite_reward, Guideline, GuidelineMask, LayoutFile, DEFAULT_GRID_RESOLUTION};
use crate::scene::{canonical_json, default_catalog, default_selection, load_catalog, Catalog, RoomShape};

/// Environment variable naming the directory that relative `--out` paths resolve against.
pub const RUN_ROOT_ENV: &str = "INTERIOR_RL_RUN_ROOT";

#[derive(Debug, Parser)]
#[command(name = "interior-rl", version, about = "Furniture layout synthesis with PPO and search baselines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy and write a run directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint and print statistics as JSON.
    Eval(EvalArgs),
    /// Run a search baseline and print its best score.
    Baseline(BaselineArgs),
    /// Score a layout file and print the reward breakdown as JSON.
    Reward(RewardArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomChoice {
    Square,
    Rectangle,
    LShape,
    UShape,
    Mixed,
}

impl RoomChoice {
    pub fn shapes(self) -> Vec<RoomShape> {
        match self {
            RoomChoice::Square => vec![RoomShape::Square],
            RoomChoice::Rectangle => vec![RoomShape::Rectangle],
            RoomChoice::LShape => vec![RoomShape::LShape],
            RoomChoice::UShape => vec![RoomShape::UShape],
            RoomChoice::Mixed => RoomShape::ALL.to_vec(),
        }
    }
}

impl FromStr for RoomChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "square" => Ok(Self::Square),
            "rectangle" => Ok(Self::Rectangle),
            "l_shape" => Ok(Self::LShape),
            "u_shape" => Ok(Self::UShape),
            "mixed" => Ok(Self::Mixed),
            _ => Err(format!("unknown room `{s}` (square|rectangle|l_shape|u_shape|mixed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FurnitureChoice {
    Count(usize),
    Mixed,
}

impl FurnitureChoice {
    pub fn counts(self) -> Vec<usize> {
        match self {
            FurnitureChoice::Count(n) => vec![n],
            FurnitureChoice::Mixed => vec![4, 6, 8],
        }
    }
}

impl FromStr for FurnitureChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixed" => Ok(Self::Mixed),
            "4" | "6" | "8" => Ok(Self::Count(s.parse().expect("digit"))),
            _ => Err(format!("unknown furniture count `{s}` (4|6|8|mixed)")),
        }
    }
}

impl TryFrom<String> for FurnitureChoice {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FurnitureChoice> for String {
    fn from(f: FurnitureChoice) -> String {
        f.to_string()
    }
}

impl fmt::Display for FurnitureChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FurnitureChoice::Count(n) => write!(f, "{n}"),
            FurnitureChoice::Mixed => f.write_str("mixed"),
        }
    }
}

fn parse_order(s: &str) -> Result<PlacementOrder, String> {
    match s {
        "desc" => Ok(PlacementOrder::Descending),
        "asc" => Ok(PlacementOrder::Ascending),
        _ => Err(format!("unknown order `{s}` (desc|asc)")),
    }
}

fn parse_guideline(s: &str) -> Result<Guideline, String> {
    s.parse().map_err(|e: crate::rewards::RewardError| e.to_string())
}

/// Scene selection shared by every command.
#[derive(Debug, Clone, Args)]
pub struct SceneArgs {
    /// square | rectangle | l_shape | u_shape | mixed
    #[arg(long)]
    pub room: Option<RoomChoice>,
    /// 4 | 6 | 8 | mixed
    #[arg(long)]
    pub furniture: Option<FurnitureChoice>,
    /// Reward to switch off; repeat for several.
    #[arg(long = "disable-reward", value_parser = parse_guideline)]
    pub disable_reward: Vec<Guideline>,
    /// desc | asc
    #[arg(long, value_parser = parse_order)]
    pub order: Option<PlacementOrder>,
    /// Furniture catalog JSON; the built-in catalog when omitted.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

/// Fully resolved scene description, stored in run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub room: RoomChoice,
    pub furniture: FurnitureChoice,
    pub disabled_rewards: Vec<Guideline>,
    pub order: PlacementOrder,
    pub catalog: Option<PathBuf>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            room: RoomChoice::Square,
            furniture: FurnitureChoice::Count(4),
            disabled_rewards: Vec::new(),
            order: PlacementOrder::Descending,
            catalog: None,
        }
    }
}

impl SceneConfig {
    fn apply(&mut self, a: &SceneArgs) {
        if let Some(r) = a.room {
            self.room = r;
        }
        if let Some(f) = a.furniture {
            self.furniture = f;
        }
        if !a.disable_reward.is_empty() {
            self.disabled_rewards = a.disable_reward.clone();
        }
        if let Some(o) = a.order {
            self.order = o;
        }
        if a.catalog.is_some() {
            self.catalog = a.catalog.clone();
        }
    }

    pub fn mask(&self) -> Result<GuidelineMask> {
        GuidelineMask::without(&self.disabled_rewards).context("invalid reward selection")
    }

    pub fn catalog(&self) -> Result<Catalog> {
        match &self.catalog {
            Some(p) => load_catalog(p).with_context(|| format!("loading catalog {}", p.display())),
            None => Ok(default_catalog()),
        }
    }

    /// One episode configuration per (room shape, furniture count) combination.
    pub fn episode_configs(&self, seed: u64) -> Result<Vec<EpisodeConfig>> {
        let catalog = Arc::new(self.catalog()?);
        let mask = self.mask()?;
        let mut out = Vec::new();
        for shape in self.room.shapes() {
            let room = shape.default_spec().build()?;
            for n in self.furniture.counts() {
                let mut c = EpisodeConfig::new(room.clone(), catalog.clone(), default_selection(n));
                c.mask = mask;
                c.order = self.order;
                c.grid_resolution = DEFAULT_GRID_RESOLUTION;
                c.seed = seed;
                out.push(c);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory; its parent must exist.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace the occupancy-map encoder output with zeros.
    #[arg(long)]
    pub no_spatial_encoding: bool,
    /// JSON run configuration whose values replace the defaults; flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Artifacts {
    pub checkpoint: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub timing: Option<PathBuf>,
    pub layouts: Vec<PathBuf>,
    pub svgs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub artifacts: Artifacts,
    pub package_version: String,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Writes via a temporary sibling and a rename so readers never see partial files.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn resolve_out(out: Option<&Path>, default_name: &str) -> PathBuf {
    let root = std::env::var_os(RUN_ROOT_ENV).map(PathBuf::from);
    match (out, root) {
        (Some(p), Some(root)) if p.is_relative() => root.join(p),
        (Some(p), _) => p.to_path_buf(),
        (None, Some(root)) => root.join(default_name),
        (None, None) => PathBuf::from("runs").join(default_name),
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        bail!("parent directory {} does not exist", parent.display());
    }
    if !dir.exists() {
        fs::create_dir(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// CSV with one row per epoch; wall time lives in a separate file.
pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut s = String::from("epoch,mean_reward,p_loss,v_loss\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.epoch, r.mean_reward, r.p_loss, r.v_loss));
    }
    s
}

pub fn timing_csv(seconds: &[f64]) -> String {
    let mut s = String::from("epoch,time_s\n");
    for (i, t) in seconds.iter().enumerate() {
        s.push_str(&format!("{i},{t:.6}\n"));
    }
    s
}

pub fn resolve_train_config(args: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => RunConfig::default(),
    };
    cfg.scene.apply(&args.scene);
    if let Some(e) = args.epochs {
        cfg.train.epochs = e;
    }
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    if args.no_spatial_encoding {
        cfg.train.arch.spatial_encoding = false;
    }
    cfg.scene.mask()?;
    cfg.train.validate()?;
    Ok(cfg)
}

pub fn cmd_train(args: &TrainArgs) -> Result<RunManifest> {
    let started = unix_now();
    let cfg = resolve_train_config(args)?;
    let dir = resolve_out(args.out.as_deref(), &format!("train-seed{}", cfg.train.seed));
    prepare_dir(&dir)?;
    let configs = cfg.scene.episode_configs(cfg.train.seed)?;

    let params = init_params(&cfg.train)?;
    let out = train_from(&configs, &cfg.train, params, |_, _| {})?;

    let mut artifacts = Artifacts::default();
    let ckpt = dir.join("checkpoint.bin");
    save_checkpoint(&out.params, &ckpt)?;
    artifacts.checkpoint = Some(ckpt);
    let metrics = dir.join("metrics.csv");
    write_atomic(&metrics, metrics_csv(&out.metrics).as_bytes())?;
    artifacts.metrics = Some(metrics);
    let timing = dir.join("timing.csv");
    write_atomic(&timing, timing_csv(&out.epoch_seconds).as_bytes())?;
    artifacts.timing = Some(timing);

    // One greedy layout per scene combination.
    let layouts_dir = dir.join("layouts");
    fs::create_dir_all(&layouts_dir)?;
    let report = evaluate(&out.params, &configs, configs.len(), EvalOptions::default())?;
    for (rec, c) in report.records.iter().zip(&configs) {
        let stem = format!("{}_{}", c.room.shape, c.furniture_ids.len());
        let json = layouts_dir.join(format!("{stem}.json"));
        write_atomic(&json, canonical_json(&LayoutFile::from_placed(&c.room, &rec.placed)).as_bytes())?;
        let svg = layouts_dir.join(format!("{stem}.svg"));
        let text = render_svg(&rec.placed, &c.catalog, &c.room, &RenderOptions::default());
        write_atomic(&svg, text.as_bytes())?;
        artifacts.layouts.push(json);
        artifacts.svgs.push(svg);
    }

    let manifest = RunManifest {
        command: "train".into(),
        seed: cfg.train.seed,
        config: cfg,
        started_unix_s: started,
        finished_unix_s: unix_now(),
        artifacts,
        package_version: env!("CARGO_PKG_VERSION").into(),
    };
    write_atomic(&dir.join("manifest.json"), canonical_json(&manifest).as_bytes())?;
    Ok(manifest)
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    /// Directory for one SVG per episode.
    #[arg(long)]
    pub render: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample actions instead of using the policy mean.
    #[arg(long)]
    pub sample: bool,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<crate::ppo::EvalStats> {
    let params = load_checkpoint(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let mut scene = SceneConfig::default();
    scene.apply(&args.scene);
    let configs = scene.episode_configs(args.seed)?;
    let opts = EvalOptions {
        greedy: !args.sample,
        seed: args.seed,
    };
    let report = evaluate(&params, &configs, args.episodes, opts)?;
    if let Some(dir) = &args.render {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, rec) in report.records.iter().enumerate() {
            let c = &configs[rec.config_index];
            let svg = render_svg(&rec.placed, &c.catalog, &c.room, &RenderOptions::default());
            fs::write(dir.join(format!("episode_{i:04}.svg")), svg)?;
        }
    }
    Ok(report.stats)
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// mh | pso | random
    #[arg(long)]
    pub algo: String,
    #[arg(long, default_value_t = 20_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for layout.json and layout.svg.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub algo: Algorithm,
    pub best_score: f64,
    pub evaluations: usize,
    pub seconds: f64,
    pub layout: LayoutFile,
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<BaselineReport> {
    let algo: Algorithm = args.algo.parse()?;
    let mut scene = SceneConfig::default();
    scene.apply(&args.scene);
    if scene.room == RoomChoice::Mixed || scene.furniture == FurnitureChoice::Mixed {
        bail!("baselines search one fixed scene; `mixed` is not allowed here");
    }
    let config = scene.episode_configs(args.seed)?.remove(0);
    let search = SearchScene::new(config)?;
    let budget = SearchBudget {
        max_evaluations: args.budget,
        seed: args.seed,
    };
    let result = run_baseline(algo, &search, &budget)?;
    let decoded = search.decode(&result.best)?;
    let layout = LayoutFile::from_placed(&search.config.room, &decoded.placed);
    if let Some(dir) = &args.out {
        let dir = resolve_out(Some(dir), "");
        prepare_dir(&dir)?;
        write_atomic(&dir.join("layout.json"), canonical_json(&layout).as_bytes())?;
        let svg = render_svg(&decoded.placed, &search.config.catalog, &search.config.room, &RenderOptions::default());
        write_atomic(&dir.join("layout.svg"), svg.as_bytes())?;
    }
    Ok(BaselineReport {
        algo,
        best_score: result.best_score,
        evaluations: result.evaluations,
        seconds: result.seconds,
        layout,
    })
}

#[derive(Debug, Clone, Args)]
pub struct RewardArgs {
    #[arg(long)]
    pub layout: PathBuf,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long = "disable-reward", value_parser = parse_guideline)]
    pub disable_reward: Vec<Guideline>,
    /// Also render the layout to this SVG path.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn cmd_reward(args: &RewardArgs) -> Result<crate::rewards::RewardBreakdown> {
    let text = fs::read_to_string(&args.layout).with_context(|| format!("reading {}", args.layout.display()))?;
    let layout: LayoutFile =
        serde_json::from_str(&text).with_context(|| format!("{} is not a valid layout file", args.layout.display()))?;
    let catalog = match &args.catalog {
        Some(p) => load_catalog(p)?,
        None => default_catalog(),
    };
    let (room, placed) = layout.resolve(&catalog)?;
    let mask = GuidelineMask::without(&args.disable_reward)?;
    let breakdown = composite_reward(&placed, &catalog, &room, &mask, DEFAULT_GRID_RESOLUTION);
    if let Some(path) = &args.svg {
        fs::write(path, render_svg(&placed, &catalog, &room, &RenderOptions::default()))?;
    }
    Ok(breakdown)
}

/// Parses `argv`-style arguments and runs the chosen command, printing JSON to stdout.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let json = match &cli.command {
        Command::Train(a) => serde_json::to_string_pretty(&cmd_train(a)?)?,
        Command::Eval(a) => serde_json::to_string_pretty(&cmd_eval(a)?)?,
        Command::Baseline(a) => {
            let r = cmd_baseline(a)?;
            serde_json::to_string_pretty(&serde_json::json!({
                "algo": r.algo,
                "best_score": r.best_score,
                "evaluations": r.evaluations,
                "seconds": r.seconds,
            }))?
        }
        Command::Reward(a) => serde_json::to_string_pretty(&cmd_reward(a)?)?,
    };
    println!("{json}");
    Ok(())
}
