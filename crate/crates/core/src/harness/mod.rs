//! Experiments over fusion heads: repeated seeded training runs, averaged
//! metrics, strategy comparison and random hyperparameter search.

pub mod metrics;
pub mod synthetic;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentationPolicy;
use crate::data::{random_split, ClipManifest, EmbeddingStore, Modality, Split};
use crate::error::{Error, Result};
use crate::fusion::{FusionHead, HeadConfig, Strategy};
use crate::nn::{train_epochs, Dataset, TrainingConfig};
use crate::seed;

pub use metrics::{accuracy_percent, evaluate, evaluate_probabilities, Confusion, Evaluation};
pub use synthetic::{generate as generate_synthetic, SyntheticBenchmark, SyntheticConfig, SyntheticParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderChoice {
    /// Embeddings come from files written by an external exporter.
    File,
    /// Seeded random projections of the preprocessed tensors.
    Toy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub kind: EncoderChoice,
    pub audio_dim: usize,
    pub video_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderChoice::Toy,
            audio_dim: crate::fusion::encoder::TOY_AUDIO_DIM,
            video_dim: crate::fusion::encoder::TOY_VIDEO_DIM,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub manifest: Option<PathBuf>,
    pub embeddings: Vec<PathBuf>,
    /// When set, the generated benchmark replaces the files above.
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub seed: u64,
    pub run_count: usize,
    pub train_fraction: f64,
    /// Draw a new train/validation split for every run instead of one
    /// split shared by all runs.
    pub resplit_per_run: bool,
    pub training: TrainingConfig,
    pub head: HeadConfig,
    pub augmentation: AugmentationPolicy,
    pub encoder: EncoderConfig,
    pub data: DataConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategy: Strategy::Hybrid,
            seed: 0,
            run_count: 3,
            train_fraction: crate::data::DEFAULT_TRAIN_FRACTION,
            resplit_per_run: false,
            training: TrainingConfig::default(),
            head: HeadConfig::default(),
            augmentation: AugmentationPolicy::default(),
            encoder: EncoderConfig::default(),
            data: DataConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Settings for the Gaussian benchmark used to check the ordering of
    /// fusion strategies.
    pub fn synthetic_benchmark() -> Self {
        ExperimentConfig {
            training: TrainingConfig {
                epochs: 60,
                ..TrainingConfig::default()
            },
            head: HeadConfig {
                joint_hidden: vec![64, 32],
                branch_hidden: vec![32],
                combiner_hidden: vec![],
                dropout: 0.5,
            },
            data: DataConfig {
                synthetic: Some(SyntheticConfig::default()),
                ..DataConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Make relative data paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(m) = &mut self.data.manifest {
            fix(m);
        }
        self.data.embeddings.iter_mut().for_each(fix);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.run_count == 0 {
            return Err(Error::InvalidConfig("run_count must be at least 1".to_owned()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidFraction(self.train_fraction));
        }
        self.training.validate()?;
        self.head.validate()?;
        self.augmentation.validate()
    }
}

/// A labelled manifest together with both modalities' embeddings.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub manifest: ClipManifest,
    pub store: EmbeddingStore,
}

impl ExperimentData {
    pub fn new(manifest: ClipManifest, store: EmbeddingStore) -> Result<Self> {
        for m in [Modality::Audio, Modality::Video] {
            if store.dim(m).is_none() {
                return Err(Error::MissingArtifacts(format!("no {m} embeddings")));
            }
        }
        Ok(ExperimentData { manifest, store })
    }

    pub fn load(cfg: &DataConfig) -> Result<Self> {
        if let Some(syn) = &cfg.synthetic {
            let bench = synthetic::generate(syn)?;
            return Self::new(bench.manifest, bench.store);
        }
        let manifest_path = cfg
            .manifest
            .as_ref()
            .ok_or_else(|| Error::MissingArtifacts("no manifest configured".to_owned()))?;
        if !manifest_path.exists() {
            return Err(Error::MissingArtifacts(format!("manifest {} not found", manifest_path.display())));
        }
        if cfg.embeddings.is_empty() {
            return Err(Error::MissingArtifacts("no embedding files configured".to_owned()));
        }
        let manifest = crate::data::load_manifest(manifest_path)?;
        let mut store = EmbeddingStore::default();
        for path in &cfg.embeddings {
            if !path.exists() {
                return Err(Error::MissingArtifacts(format!("embedding file {} not found", path.display())));
            }
            store.extend(EmbeddingStore::load(path)?)?;
        }
        Self::new(manifest, store)
    }

    pub fn audio_dim(&self) -> usize {
        self.store.dim(Modality::Audio).expect("checked on construction")
    }

    pub fn video_dim(&self) -> usize {
        self.store.dim(Modality::Video).expect("checked on construction")
    }

    /// The manifest used by run `run`: the stored split when every clip
    /// has one and no resplitting is requested, otherwise a seeded split.
    pub fn split_for_run(&self, cfg: &ExperimentConfig, run: usize) -> Result<ClipManifest> {
        let assigned = self.manifest.entries().iter().all(|e| e.split != Split::Unassigned);
        if assigned && !cfg.resplit_per_run {
            return Ok(self.manifest.clone());
        }
        let split_seed = if cfg.resplit_per_run {
            seed::derive(cfg.seed, "resplit", run as u64)
        } else {
            cfg.seed
        };
        Ok(random_split(&self.manifest, split_seed, cfg.train_fraction)?.apply(&self.manifest))
    }

    /// Audio and video matrices plus labels for one split.
    pub fn dataset(&self, manifest: &ClipManifest, split: Split) -> Result<Dataset<f32>> {
        let entries: Vec<_> = manifest.in_split(split).collect();
        let (da, dv) = (self.audio_dim(), self.video_dim());
        let mut a = Array2::zeros((entries.len(), da));
        let mut v = Array2::zeros((entries.len(), dv));
        let mut labels = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            a.row_mut(i).assign(&ndarray::aview1(self.store.require(Modality::Audio, &e.id)?));
            v.row_mut(i).assign(&ndarray::aview1(self.store.require(Modality::Video, &e.id)?));
            labels.push(e.label.index());
        }
        Dataset::new(vec![a, v], labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub train_accuracy: f64,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: Strategy,
    /// Average training accuracy, percent.
    pub ata: f64,
    /// Average training loss.
    pub atl: f64,
    /// Average validation accuracy, percent.
    pub ava: f64,
    /// Average validation loss.
    pub avl: f64,
    pub per_run: Vec<RunRecord>,
    /// Validation confusion counts summed over runs.
    pub confusion: Confusion,
}

impl MetricsReport {
    pub fn aggregate(strategy: Strategy, runs: Vec<(RunRecord, Confusion)>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InvalidConfig("no runs to aggregate".to_owned()));
        }
        let n = runs.len() as f64;
        let mean = |f: fn(&RunRecord) -> f64| runs.iter().map(|(r, _)| f(r)).sum::<f64>() / n;
        let mut confusion = Confusion::default();
        for (_, c) in &runs {
            confusion.merge(c);
        }
        Ok(MetricsReport {
            strategy,
            ata: mean(|r| r.train_accuracy),
            atl: mean(|r| r.train_loss),
            ava: mean(|r| r.val_accuracy),
            avl: mean(|r| r.val_loss),
            per_run: runs.into_iter().map(|(r, _)| r).collect(),
            confusion,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A head trained for one run, with its metrics.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub head: FusionHead<f32>,
    pub record: RunRecord,
    pub confusion: Confusion,
}

/// Train and evaluate one seeded run, keeping the trained head.
pub fn train_run(data: &ExperimentData, cfg: &ExperimentConfig, run: usize) -> Result<TrainedRun> {
    let manifest = data.split_for_run(cfg, run)?;
    let train = data.dataset(&manifest, Split::Train)?;
    let val = data.dataset(&manifest, Split::Validation)?;
    if val.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let run_seed = seed::derive(cfg.seed, "run", run as u64);
    let mut init = seed::rng(seed::derive(run_seed, "init", 0));
    let mut head = FusionHead::<f32>::new(cfg.strategy, data.audio_dim(), data.video_dim(), &cfg.head, &mut init)?;
    let training = TrainingConfig {
        seed: seed::derive(run_seed, "train", 0),
        ..cfg.training.clone()
    };
    train_epochs(&mut head, &train, &training)?;
    let tr = evaluate(&head, train.inputs[0].view(), train.inputs[1].view(), &train.labels)?;
    let va = evaluate(&head, val.inputs[0].view(), val.inputs[1].view(), &val.labels)?;
    Ok(TrainedRun {
        head,
        record: RunRecord {
            run,
            seed: run_seed,
            train_accuracy: tr.accuracy,
            train_loss: tr.loss,
            val_accuracy: va.accuracy,
            val_loss: va.loss,
        },
        confusion: va.confusion,
    })
}

/// Train and evaluate one seeded run.
pub fn run_once(data: &ExperimentData, cfg: &ExperimentConfig, run: usize) -> Result<(RunRecord, Confusion)> {
    let t = train_run(data, cfg, run)?;
    Ok((t.record, t.confusion))
}

/// `cfg.run_count` independent runs; runs may execute in parallel and are
/// reported in run order.
pub fn run_on(data: &ExperimentData, cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let runs = (0..cfg.run_count)
        .into_par_iter()
        .map(|r| run_once(data, cfg, r))
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::aggregate(cfg.strategy, runs)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let data = ExperimentData::load(&cfg.data)?;
    run_on(&data, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seed: u64,
    pub run_count: usize,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, strategy: Strategy) -> Option<&MetricsReport> {
        self.rows.iter().map(|r| &r.report).find(|r| r.strategy == strategy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<22} {:>8} {:>8} {:>8} {:>8}", "model", "ATA", "ATL", "AVA", "AVL").unwrap();
        for row in &self.rows {
            let r = &row.report;
            writeln!(out, "{:<22} {:>8.2} {:>8.4} {:>8.2} {:>8.4}", row.model, r.ata, r.atl, r.ava, r.avl).unwrap();
        }
        out
    }
}

/// Every strategy under the same data, split and seeds.
pub fn compare_strategies(data: &ExperimentData, base: &ExperimentConfig) -> Result<Comparison> {
    base.validate()?;
    let rows = Strategy::ALL
        .par_iter()
        .map(|&strategy| {
            let cfg = ExperimentConfig {
                strategy,
                ..base.clone()
            };
            Ok(ComparisonRow {
                model: strategy.title().to_owned(),
                report: run_on(data, &cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        seed: base.seed,
        run_count: base.run_count,
        rows,
    })
}

/// A real-valued search dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamRange {
    Choice(Vec<f64>),
    Uniform {
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
    },
}

impl ParamRange {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            ParamRange::Choice(v) => !v.is_empty() && v.iter().all(|x| x.is_finite()),
            ParamRange::Uniform { low, high, log } => {
                low.is_finite() && high.is_finite() && low <= high && (!log || *low > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::EmptySpace(name.to_owned()))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            ParamRange::Choice(v) => v[rng.gen_range(0..v.len())],
            ParamRange::Uniform { low, high, log: false } => {
                if low == high {
                    *low
                } else {
                    rng.gen_range(*low..*high)
                }
            }
            ParamRange::Uniform { low, high, log: true } => {
                if low == high {
                    *low
                } else {
                    rng.gen_range(low.ln()..high.ln()).exp()
                }
            }
        }
    }
}

/// Dimensions left as `None` keep the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub learning_rate: Option<ParamRange>,
    pub dropout: Option<ParamRange>,
    pub batch_size: Option<Vec<usize>>,
    pub epochs: Option<Vec<usize>>,
    pub joint_hidden: Option<Vec<Vec<usize>>>,
    pub branch_hidden: Option<Vec<Vec<usize>>>,
    pub combiner_hidden: Option<Vec<Vec<usize>>>,
}

impl SearchSpace {
    pub fn from_toml(text: &str) -> Result<Self> {
        let space: SearchSpace = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = &self.learning_rate {
            r.validate("learning_rate")?;
        }
        if let Some(r) = &self.dropout {
            r.validate("dropout")?;
        }
        for (name, len) in [
            ("batch_size", self.batch_size.as_ref().map(Vec::len)),
            ("epochs", self.epochs.as_ref().map(Vec::len)),
            ("joint_hidden", self.joint_hidden.as_ref().map(Vec::len)),
            ("branch_hidden", self.branch_hidden.as_ref().map(Vec::len)),
            ("combiner_hidden", self.combiner_hidden.as_ref().map(Vec::len)),
        ] {
            if len == Some(0) {
                return Err(Error::EmptySpace(name.to_owned()));
            }
        }
        Ok(())
    }

    /// One configuration drawn uniformly from the space.
    pub fn sample(&self, base: &ExperimentConfig, rng: &mut impl Rng) -> ExperimentConfig {
        let mut cfg = base.clone();
        fn pick<T: Clone>(v: &[T], rng: &mut impl Rng) -> T {
            v[rng.gen_range(0..v.len())].clone()
        }
        if let Some(r) = &self.learning_rate {
            cfg.training.learning_rate = r.sample(rng);
        }
        if let Some(r) = &self.dropout {
            cfg.head.dropout = r.sample(rng);
        }
        if let Some(v) = &self.batch_size {
            cfg.training.batch_size = pick(v, rng);
        }
        if let Some(v) = &self.epochs {
            cfg.training.epochs = pick(v, rng);
        }
        if let Some(v) = &self.joint_hidden {
            cfg.head.joint_hidden = pick(v, rng);
        }
        if let Some(v) = &self.branch_hidden {
            cfg.head.branch_hidden = pick(v, rng);
        }
        if let Some(v) = &self.combiner_hidden {
            cfg.head.combiner_hidden = pick(v, rng);
        }
        cfg.run_count = 1;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub joint_hidden: Vec<usize>,
    pub branch_hidden: Vec<usize>,
    pub combiner_hidden: Vec<usize>,
    pub ava: f64,
    pub avl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best_trial: usize,
    pub best: ExperimentConfig,
    pub trials: Vec<Trial>,
}

/// Seeded random search. Each trial is a single run; the winner has the
/// highest validation accuracy, then the lowest validation loss, then the
/// lowest trial index.
pub fn random_search(data: &ExperimentData, space: &SearchSpace, budget: usize, base: &ExperimentConfig) -> Result<SearchOutcome> {
    space.validate()?;
    if budget == 0 {
        return Err(Error::InvalidConfig("search budget must be at least 1".to_owned()));
    }
    let configs: Vec<ExperimentConfig> = (0..budget)
        .map(|t| space.sample(base, &mut seed::rng(seed::derive(base.seed, "search", t as u64))))
        .collect();
    let reports = configs
        .par_iter()
        .map(|cfg| run_on(data, cfg))
        .collect::<Result<Vec<_>>>()?;
    let trials: Vec<Trial> = configs
        .iter()
        .zip(&reports)
        .enumerate()
        .map(|(index, (cfg, r))| Trial {
            index,
            learning_rate: cfg.training.learning_rate,
            dropout: cfg.head.dropout,
            batch_size: cfg.training.batch_size,
            epochs: cfg.training.epochs,
            joint_hidden: cfg.head.joint_hidden.clone(),
            branch_hidden: cfg.head.branch_hidden.clone(),
            combiner_hidden: cfg.head.combiner_hidden.clone(),
            ava: r.ava,
            avl: r.avl,
        })
        .collect();
    let mut best = 0;
    for t in &trials[1..] {
        let b = &trials[best];
        if t.ava > b.ava || (t.ava == b.ava && t.avl < b.avl) {
            best = t.index;
        }
    }
    Ok(SearchOutcome {
        best_trial: best,
        best: configs[best].clone(),
        trials,
    })
}

/// Run `f` on a pool of `threads` workers; 0 uses the global pool.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (ExperimentData, ExperimentConfig) {
        let syn = SyntheticConfig {
            audio_dim: 4,
            video_dim: 6,
            train_per_class: 40,
            val_per_class: 20,
            ..SyntheticConfig::default()
        };
        let bench = synthetic::generate(&syn).unwrap();
        let cfg = ExperimentConfig {
            run_count: 2,
            training: TrainingConfig {
                epochs: 2,
                learning_rate: 1e-3,
                ..TrainingConfig::default()
            },
            head: HeadConfig {
                joint_hidden: vec![8],
                branch_hidden: vec![4],
                combiner_hidden: vec![4],
                dropout: 0.5,
            },
            ..ExperimentConfig::default()
        };
        (ExperimentData::new(bench.manifest, bench.store).unwrap(), cfg)
    }

    #[test]
    fn averages_are_means_of_runs() {
        let (data, cfg) = small();
        let r = run_on(&data, &cfg).unwrap();
        assert_eq!(r.per_run.len(), 2);
        let mean = (r.per_run[0].val_accuracy + r.per_run[1].val_accuracy) / 2.0;
        assert_eq!(r.ava, mean);
        assert_eq!(r.confusion.total(), 2 * 40);
        assert_ne!(r.per_run[0].seed, r.per_run[1].seed);
    }

    #[test]
    fn single_run_average_is_that_run() {
        let (data, mut cfg) = small();
        cfg.run_count = 1;
        let r = run_on(&data, &cfg).unwrap();
        assert_eq!(r.ava, r.per_run[0].val_accuracy);
        assert_eq!(r.atl, r.per_run[0].train_loss);
    }

    #[test]
    fn aggregate_of_two_known_runs() {
        let run = |acc: f64| RunRecord {
            run: 0,
            seed: 0,
            train_accuracy: acc,
            train_loss: 0.1,
            val_accuracy: acc,
            val_loss: 0.2,
        };
        let r = MetricsReport::aggregate(
            Strategy::Late,
            vec![(run(90.0), Confusion::default()), (run(94.0), Confusion::default())],
        )
        .unwrap();
        assert_eq!(r.ava, 92.0);
    }

    #[test]
    fn comparison_is_deterministic_across_thread_counts() {
        let (data, mut cfg) = small();
        cfg.run_count = 1;
        let one = with_threads(1, || compare_strategies(&data, &cfg)).unwrap().unwrap();
        let four = with_threads(4, || compare_strategies(&data, &cfg)).unwrap().unwrap();
        assert_eq!(one.rows.len(), 5);
        let order: Vec<Strategy> = one.rows.iter().map(|r| r.report.strategy).collect();
        assert_eq!(order, Strategy::ALL.to_vec());
        assert_eq!(one.to_json(), four.to_json());
    }

    #[test]
    fn search_single_point_and_budget_one() {
        let (data, cfg) = small();
        let point = SearchSpace {
            dropout: Some(ParamRange::Choice(vec![0.3])),
            batch_size: Some(vec![5]),
            ..SearchSpace::default()
        };
        let out = random_search(&data, &point, 3, &cfg).unwrap();
        assert_eq!(out.best.head.dropout, 0.3);
        assert_eq!(out.best.training.batch_size, 5);
        let one = random_search(&data, &point, 1, &cfg).unwrap();
        assert_eq!(one.trials.len(), 1);
        assert_eq!(one.best_trial, 0);
    }

    #[test]
    fn search_rejects_empty_dimensions() {
        let (data, cfg) = small();
        let empty = SearchSpace {
            dropout: Some(ParamRange::Choice(vec![])),
            ..SearchSpace::default()
        };
        assert!(matches!(random_search(&data, &empty, 2, &cfg), Err(Error::EmptySpace(_))));
        let inverted = SearchSpace {
            learning_rate: Some(ParamRange::Uniform {
                low: 1.0,
                high: 0.5,
                log: false,
            }),
            ..SearchSpace::default()
        };
        assert!(matches!(random_search(&data, &inverted, 2, &cfg), Err(Error::EmptySpace(_))));
    }

    #[test]
    fn search_is_reproducible() {
        let (data, cfg) = small();
        let space = SearchSpace {
            dropout: Some(ParamRange::Choice(vec![0.3, 0.5])),
            ..SearchSpace::default()
        };
        let a = random_search(&data, &space, 5, &cfg).unwrap();
        let b = random_search(&data, &space, 5, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_artifacts_reported() {
        let cfg = ExperimentConfig {
            data: DataConfig {
                manifest: Some(PathBuf::from("/nonexistent/manifest.tsv")),
                embeddings: vec![],
                synthetic: None,
            },
            ..ExperimentConfig::default()
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::MissingArtifacts(_))));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::synthetic_benchmark();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial = ExperimentConfig::from_toml("strategy = \"late\"\n[training]\nepochs = 4\n").unwrap();
        assert_eq!(partial.strategy, Strategy::Late);
        assert_eq!(partial.training.epochs, 4);
        assert_eq!(partial.training.batch_size, 7);
        assert!(ExperimentConfig::from_toml("run_count = 0").is_err());
    }
}
