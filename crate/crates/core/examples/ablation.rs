//! A reduced batch-size ablation: one short run per grid point, each with its
//! own log and checkpoint.
//!
//! ```text
//! cargo run --release --example ablation -- [grid] [steps] [out-dir]
//! ```

use std::path::PathBuf;

use cipher_icl::training::{read_log, run_ablation, AblationGrid, TrainConfig, LOG_FILE};

fn main() -> cipher_icl::Result<()> {
    let mut args = std::env::args().skip(1);
    let grid: AblationGrid = args.next().as_deref().unwrap_or("batch=4,8,16").parse()?;
    let steps = args.next().map_or(Ok(100), |s| s.parse()).expect("steps must be an integer");
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/ablation".into()));

    let base = TrainConfig { steps, val_interval: 25, checkpoint_interval: 0, ..TrainConfig::desk() };
    let corpus = cipher_icl::load_bundled_corpus()?;
    let runs = run_ablation(&base, &grid, &corpus, &out, |_, _| {})?;
    for r in runs {
        match r.outcome {
            Ok(_) => {
                let log = read_log(r.dir.join(LOG_FILE))?;
                let val: Vec<String> = log.iter().filter_map(|x| x.val_loss).map(|v| format!("{v:.3}")).collect();
                println!("{}={:<5} val_loss {}", grid.axis.name(), r.value, val.join(" "));
            }
            Err(e) => println!("{}={:<5} failed: {e}", grid.axis.name(), r.value),
        }
    }
    Ok(())
}
