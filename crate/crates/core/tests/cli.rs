use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cipher-icl"));
    c.env_remove("CIPHER_ICL_CACHE");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("spawn cipher-icl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

const TINY: &[&str] = &[
    "--set", "layers=1", "--set", "embed_dim=16", "--set", "heads=2", "--context", "16", "--batch", "2",
];

#[test]
fn prep_counts_letters_and_concatenates_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a.txt"), "Hello!").unwrap();
    fs::write(d.join("b.txt"), "Zz 9").unwrap();
    let o = run(&["prep", "a.txt", "--out", "one.bin"], d);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).contains("letters: 5"));

    let o = run(&["prep", "b.txt", "a.txt", "--out", "two.bin"], d);
    assert_eq!(code(&o), 0);
    let bytes = fs::read(d.join("two.bin")).unwrap();
    assert_eq!(&bytes[..8], b"CICLCORP");
    let body: String = bytes[28..].iter().map(|&b| (b'a' + b) as char).collect();
    assert_eq!(body, "zzhello");

    assert_eq!(code(&run(&["prep", "missing.txt"], d)), 1);
}

#[test]
fn prep_reports_e_first_on_the_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus");
    let mut files: Vec<_> = fs::read_dir(&corpus).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let o = bin()
        .arg("prep")
        .args(&files)
        .env("CIPHER_ICL_CACHE", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let top = stdout(&o).lines().find(|l| l.starts_with("top5:")).unwrap().to_owned();
    assert!(top.starts_with("top5: e "), "{top}");
    assert!(dir.path().join("corpus.bin").exists(), "cache directory from the environment");
}

#[test]
fn mono_naive_never_answers_without_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eval", "--baseline", "mono_naive", "--max-examples", "1", "--n-prompts", "100"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("scheme,key_len,message_dist,decoder,examples,accuracy,n,stderr"));
    assert_eq!(text.lines().nth(1), Some("mono,-,corpus,mono_naive,0,0.000000,100,0.000000"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn known_length_vigenere_saturates_after_one_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["eval", "--baseline", "vig_naive", "--scheme", "vig", "--key-len", "8", "--max-examples", "16", "--out", "v.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let rows = csv_rows(&fs::read_to_string(dir.path().join("v.csv")).unwrap());
    assert_eq!(rows.len(), 17);
    for r in &rows {
        assert_eq!((r[0].as_str(), r[1].as_str()), ("vig", "8"));
        let j: usize = r[4].parse().unwrap();
        if j >= 8 {
            assert_eq!(r[5], "1.000000", "j={j}");
        }
    }
}

#[test]
fn eval_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["eval", "--baseline", "mono_freq", "--baseline", "mono_naive", "--n-prompts", "50", "--max-examples", "20", "--seed", "4", "--out", out]
    };
    assert_eq!(code(&run(&args("a.csv"), dir.path())), 0);
    let mut single = vec!["--threads", "1"];
    single.extend(args("b.csv"));
    assert_eq!(code(&run(&single, dir.path())), 0);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["train", "--preset", "desk", "--batch", "0"][..],
        &["train", "--preset", "huge"],
        &["train", "--set", "bogus=1", "--dry-run"],
        &["ablate", "--grid", "batch="],
        &["ablate", "--grid", "depth=1,2"],
        &["eval", "--baseline", "nope"],
        &["eval"],
        &["eval", "--baseline", "mono_naive", "--scheme", "mono", "--key-len", "4"],
        &["bogus-subcommand"],
    ] {
        let o = run(args, d);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn model_context_too_short_for_examples_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&[&["train", "--steps", "1", "--out", "r"][..], TINY].concat(), d);
    assert_eq!(code(&o), 0, "{o:?}");
    let o = run(&["eval", "--checkpoint", "r", "--max-examples", "8", "--n-prompts", "3"], d);
    assert_eq!(code(&o), 2);
    let o = run(&["eval", "--checkpoint", "r", "--n-prompts", "3"], d);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&stdout(&o)).len(), 8, "J defaults to what the context allows");
    assert_eq!(code(&run(&["eval", "--checkpoint", "missing.ckpt"], d)), 1);
}

#[test]
fn paper_preset_echo() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train", "--preset", "paper", "--dry-run"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("config: batch=64 steps=20000 lr=0.001 wd=0.1 "), "{}", stdout(&o));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("run.conf"), "# small run\npreset = desk\nbatch = 8\nlr = 0.002\n").unwrap();
    let o = run(&["train", "--config", "run.conf", "--batch", "4", "--dry-run"], d);
    assert_eq!(code(&o), 0);
    let echo = stdout(&o);
    assert!(echo.contains("batch=4 ") && echo.contains("lr=0.002 "), "{echo}");
    fs::write(d.join("bad.conf"), "batchsize = 8\n").unwrap();
    assert_eq!(code(&run(&["train", "--config", "bad.conf", "--dry-run"], d)), 2);
}

#[test]
fn train_writes_run_directory_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        let o = run(&[&["train", "--preset", "desk", "--scheme", "mono", "--steps", "3", "--out", out][..], TINY].concat(), d);
        assert_eq!(code(&o), 0, "{o:?}");
        for f in ["config.txt", "train.log", "model.ckpt"] {
            assert!(d.join(out).join(f).exists(), "{out}/{f}");
        }
    }
    let losses = |out: &str| -> Vec<String> {
        fs::read_to_string(d.join(out).join("train.log"))
            .unwrap()
            .lines()
            .map(|l| l.split(' ').filter(|f| !f.starts_with("ms=")).collect::<Vec<_>>().join(" "))
            .collect()
    };
    assert_eq!(losses("a").len(), 3);
    assert!(losses("a")[0].starts_with("step=1 loss="));
    assert_eq!(losses("a"), losses("b"));

    let o = run(&["train", "--resume", "a", "--steps", "5"], d);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(losses("a").len(), 5);
    assert_eq!(fs::read(d.join("a/model.ckpt")).unwrap()[..8], *b"CICLCKPT");
}

#[test]
fn ablation_grids_make_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = ["--steps", "1", "--set", "val_interval=0", "--set", "layers=1", "--set", "embed_dim=16", "--set", "heads=2"];
    let o = run(&[&["ablate", "--grid", "batch=16,32,64,96", "--context", "16", "--out", "ab"][..], &common].concat(), d);
    assert_eq!(code(&o), 0, "{o:?}");
    for b in [16, 32, 64, 96] {
        assert_eq!(fs::read_to_string(d.join(format!("ab/batch-{b}/train.log"))).unwrap().lines().count(), 1);
    }
    let o = run(&[&["ablate", "--grid", "context=128,256,512,2048", "--batch", "1", "--out", "ac"][..], &common].concat(), d);
    assert_eq!(code(&o), 0, "{o:?}");
    let mut subdirs: Vec<String> = fs::read_dir(d.join("ac")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    subdirs.sort();
    assert_eq!(subdirs, ["context-128", "context-2048", "context-256", "context-512"]);
}
