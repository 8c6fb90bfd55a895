//! Training, evaluation, comparison and search commands.

use std::fmt::Write as _;
use std::path::Path;

use avfusion::data::{Modality, Split};
use avfusion::fusion::predict_clip;
use avfusion::harness::{compare_strategies, evaluate, random_search, train_run, ExperimentData, SearchSpace};
use avfusion::{Error, ExperimentConfig, FusionHead, Result};
use ndarray::Array2;

use crate::write_text;

fn load_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    ExperimentData::load(&cfg.data)
}

pub fn train(cfg: &ExperimentConfig, run: usize, out: &Path) -> Result<()> {
    let data = load_data(cfg)?;
    let trained = train_run(&data, cfg, run)?;
    trained.head.save(out)?;
    println!("{}", serde_json::to_string_pretty(&trained.record).expect("record serializes"));
    Ok(())
}

pub fn eval(cfg: &ExperimentConfig, checkpoint: &Path, splits: &[Split], predictions: Option<&Path>) -> Result<()> {
    let head = FusionHead::<f32>::load(checkpoint)?;
    let data = load_data(cfg)?;
    if head.audio_dim() != data.audio_dim() {
        return Err(Error::DimMismatch {
            expected: head.audio_dim(),
            found: data.audio_dim(),
        });
    }
    if head.video_dim() != data.video_dim() {
        return Err(Error::DimMismatch {
            expected: head.video_dim(),
            found: data.video_dim(),
        });
    }
    let manifest = data.split_for_run(cfg, 0)?;
    let entries: Vec<_> = manifest.entries().iter().filter(|e| splits.contains(&e.split)).collect();
    let (mut a, mut v) = (Array2::zeros((entries.len(), head.audio_dim())), Array2::zeros((entries.len(), head.video_dim())));
    let mut labels = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        a.row_mut(i).assign(&ndarray::aview1(data.store.require(Modality::Audio, &e.id)?));
        v.row_mut(i).assign(&ndarray::aview1(data.store.require(Modality::Video, &e.id)?));
        labels.push(e.label.index());
    }
    let result = evaluate(&head, a.view(), v.view(), &labels)?;
    if let Some(path) = predictions {
        let mut tsv = String::from("clip_id\tlabel\tp_nonviolent\tp_violent\tpredicted\n");
        for (i, e) in entries.iter().enumerate() {
            let p = predict_clip(&head, &e.id, a.row(i).as_slice().expect("row"), v.row(i).as_slice().expect("row"))?;
            writeln!(
                tsv,
                "{}\t{}\t{:.6}\t{:.6}\t{}",
                e.id, e.label, p.probabilities[0], p.probabilities[1], p.predicted_label
            )
            .expect("string write");
        }
        write_text(path, &tsv)?;
    }
    println!("{}", serde_json::to_string_pretty(&result).expect("evaluation serializes"));
    Ok(())
}

pub fn compare(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = load_data(cfg)?;
    let table = compare_strategies(&data, cfg)?;
    write_text(out, &table.to_json())?;
    print!("{}", table.to_text());
    Ok(())
}

pub fn search(cfg: &ExperimentConfig, space_path: &Path, budget: usize, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(space_path).map_err(|e| Error::file(space_path, e))?;
    let space = SearchSpace::from_toml(&text)?;
    let data = load_data(cfg)?;
    let outcome = random_search(&data, &space, budget, cfg)?;
    write_text(out, &serde_json::to_string_pretty(&outcome).expect("outcome serializes"))?;
    let best = &outcome.trials[outcome.best_trial];
    println!(
        "best trial {}: AVA {:.2} AVL {:.4} (lr {:.3e}, dropout {:.2}, batch {}, epochs {})",
        best.index, best.ava, best.avl, best.learning_rate, best.dropout, best.batch_size, best.epochs
    );
    Ok(())
}
