use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use avfusion::audio::{write_wav, Waveform};
use avfusion::data::{read_embeddings, Modality};
use tempfile::TempDir;

const SMALL_CONFIG: &str = r#"
seed = 5
run_count = 2

[training]
epochs = 4
batch_size = 16
learning_rate = 0.001

[head]
joint_hidden = [16]
branch_hidden = [8]
combiner_hidden = []

[data.synthetic]
train_per_class = 60
val_per_class = 20
"#;

fn avfusion(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avfusion"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = avfusion(args, cwd);
    assert!(
        out.status.success(),
        "avfusion {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL_CONFIG).unwrap();
    path
}

#[test]
fn compare_reports_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    small_config(tmp.path());
    let args = |out: &'static str| ["--config", "small.toml", "--threads", "1", "--seed", "11", "compare", "--out", out];
    let table = ok(&args("a.json"), tmp.path());
    ok(&args("b.json"), tmp.path());
    let a = fs::read(tmp.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(tmp.path().join("b.json")).unwrap());
    assert_eq!(table.lines().count(), 6);
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["seed"], 11);
    let models: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["model"].as_str().unwrap()).collect();
    assert_eq!(models, ["Hybrid fusion", "Intermediate fusion", "Late fusion", "Video only", "Audio only"]);
}

#[test]
fn thread_count_does_not_change_report() {
    let tmp = TempDir::new().unwrap();
    small_config(tmp.path());
    ok(&["--config", "small.toml", "--threads", "1", "compare", "--out", "one.json"], tmp.path());
    ok(&["--config", "small.toml", "--threads", "3", "compare", "--out", "three.json"], tmp.path());
    assert_eq!(
        fs::read(tmp.path().join("one.json")).unwrap(),
        fs::read(tmp.path().join("three.json")).unwrap()
    );
}

#[test]
fn eval_of_saved_head_matches_training_record() {
    let tmp = TempDir::new().unwrap();
    small_config(tmp.path());
    let record: serde_json::Value =
        serde_json::from_str(&ok(&["--config", "small.toml", "train", "--strategy", "late", "--out", "h.ckpt"], tmp.path())).unwrap();
    let eval: serde_json::Value = serde_json::from_str(&ok(
        &["--config", "small.toml", "eval", "--checkpoint", "h.ckpt", "--predictions", "p.tsv"],
        tmp.path(),
    ))
    .unwrap();
    assert_eq!(eval["accuracy"], record["val_accuracy"]);
    assert_eq!(eval["loss"], record["val_loss"]);
    let tsv = fs::read_to_string(tmp.path().join("p.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 40);
}

#[test]
fn search_writes_outcome() {
    let tmp = TempDir::new().unwrap();
    small_config(tmp.path());
    fs::write(tmp.path().join("space.toml"), "dropout = [0.3, 0.5]\nepochs = [2, 3]\n").unwrap();
    ok(&["--config", "small.toml", "search", "--space", "space.toml", "--budget", "3", "--out", "s.json"], tmp.path());
    let outcome: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(outcome["trials"].as_array().unwrap().len(), 3);
    assert_eq!(outcome["best"]["run_count"], 1);
}

#[test]
fn error_classes_map_to_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let code = |args: &[&str]| avfusion(args, tmp.path()).status.code();
    assert_eq!(code(&["compare", "--out", "r.json"]), Some(15));
    fs::write(tmp.path().join("bad.toml"), "run_count = 0\n").unwrap();
    assert_eq!(code(&["--config", "bad.toml", "compare", "--out", "r.json"]), Some(16));
    fs::write(tmp.path().join("m.tsv"), "a\tb\tviolent\n").unwrap();
    assert_eq!(code(&["augment", "--manifest", "m.tsv", "--out", "m2.tsv"]), Some(10));
    fs::write(tmp.path().join("m.tsv"), "a\ta.wav\tviolent\ttrain\t1\toriginal\n").unwrap();
    fs::write(tmp.path().join("e.avfe"), b"AVFX\x01\x00\x00\x00").unwrap();
    assert_eq!(
        code(&["embed", "--manifest", "m.tsv", "--modality", "audio", "--from", "e.avfe", "--out", "o.avfe"]),
        Some(11)
    );
    assert_eq!(code(&["prep-audio", "--manifest", "m.tsv", "--out", "mel"]), Some(17));
    assert_eq!(code(&["no-such-command"]), Some(2));
}

fn write_raw_frames(path: &Path, width: u32, height: u32, count: u32, shade: u8) {
    let mut bytes = b"AVRF".to_vec();
    for v in [width, height, count] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend_from_slice(&25.0f32.to_le_bytes());
    for t in 0..count {
        for y in 0..height {
            for x in 0..width {
                let base = shade.wrapping_add((t * 3 + x + y) as u8);
                bytes.extend_from_slice(&[base, base / 2, 255 - base]);
            }
        }
    }
    fs::write(path, bytes).unwrap();
}

#[test]
fn media_to_report_pipeline() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::create_dir_all(dir.join("media")).unwrap();
    fs::create_dir_all(dir.join("frames")).unwrap();
    let mut manifest = String::new();
    for i in 0..8 {
        let violent = i % 2 == 0;
        let freq = if violent { 900.0 } else { 300.0 };
        let samples: Vec<f64> = (0..26_460)
            .map(|n| 0.4 * (2.0 * std::f64::consts::PI * freq * n as f64 / 22_050.0).sin())
            .collect();
        write_wav(dir.join(format!("media/c{i}.wav")), &Waveform::mono(samples, 22_050).unwrap()).unwrap();
        write_raw_frames(&dir.join(format!("frames/c{i}.rgb")), 40, 30, 6, if violent { 200 } else { 20 });
        let label = if violent { "violent" } else { "nonviolent" };
        manifest.push_str(&format!("c{i}\tmedia/c{i}.wav\t{label}\tunassigned\t1.2\toriginal\n"));
    }
    fs::write(dir.join("clips.tsv"), manifest).unwrap();

    ok(&["--seed", "3", "augment", "--manifest", "clips.tsv", "--copies", "2", "--out", "aug.tsv"], dir);
    let expanded = avfusion::data::load_manifest(dir.join("aug.tsv")).unwrap();
    assert_eq!(expanded.len(), 24);

    ok(&["prep-audio", "--manifest", "aug.tsv", "--out", "mel"], dir);
    let (id, logmel) = avfusion::tensor_io::read_logmel(&dir.join("mel/c0_aug1.logmel")).unwrap();
    assert_eq!(id, "c0_aug1");
    assert_eq!(logmel.dim(), (118, 64));

    ok(&["prep-video", "--manifest", "aug.tsv", "--frames-dir", "frames", "--out", "stacks", "--frames", "4"], dir);
    let stack = avfusion::tensor_io::read_frame_stack(&dir.join("stacks/c3.frames")).unwrap();
    assert_eq!(stack.tensor.dim(), (4, 224, 224, 3));

    ok(&["embed", "--manifest", "aug.tsv", "--modality", "audio", "--tensors", "mel", "--dim", "12", "--out", "audio.avfe"], dir);
    ok(&["embed", "--manifest", "aug.tsv", "--modality", "video", "--tensors", "stacks", "--dim", "20", "--out", "video.avfe"], dir);
    let audio = read_embeddings(dir.join("audio.avfe")).unwrap();
    assert_eq!(audio.len(), 24);
    assert!(audio.iter().all(|r| r.modality == Modality::Audio && r.dim() == 12));

    fs::write(
        dir.join("exp.toml"),
        "run_count = 1\ntrain_fraction = 0.75\n[training]\nepochs = 2\n[head]\njoint_hidden = [8]\nbranch_hidden = [4]\n\
         [data]\nmanifest = \"aug.tsv\"\nembeddings = [\"audio.avfe\", \"video.avfe\"]\n",
    )
    .unwrap();
    let table = ok(&["--config", "exp.toml", "compare", "--out", "report.json"], dir);
    assert!(table.starts_with("model"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
    for row in report["rows"].as_array().unwrap() {
        let ava = row["report"]["ava"].as_f64().unwrap();
        assert!((0.0..=100.0).contains(&ava));
    }
}
